#include "muses/slat_io.hpp"

#include <limits>

#include "binary_detail.hpp"

namespace muses {

std::string encode_slat(const SparseLatent& latent) {
  latent.validate();
  if (latent.resolution > std::numeric_limits<std::uint16_t>::max() ||
      latent.channels > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(Errc::InvalidInput, "latent too large for the SLAT format");
  }
  detail::ByteWriter w;
  w.raw("SLAT");
  w.le(kSlatVersion);
  w.le(static_cast<std::uint16_t>(latent.resolution));
  w.le(static_cast<std::uint16_t>(latent.channels));
  w.le(static_cast<std::uint32_t>(latent.size()));
  for (const auto& p : latent.positions) {
    for (int v : p) w.le(static_cast<std::uint16_t>(v));
  }
  for (float f : latent.features) w.le(f);
  return w.take();
}

SparseLatent decode_slat(std::string_view bytes) {
  detail::ByteReader r(bytes, "SLAT");
  r.expect("SLAT");
  if (r.le<std::uint8_t>() != kSlatVersion) r.fail("unsupported version");
  SparseLatent out;
  out.resolution = r.le<std::uint16_t>();
  out.channels = r.le<std::uint16_t>();
  auto count = r.le<std::uint32_t>();
  std::size_t need = static_cast<std::size_t>(count) * (6 + 4 * static_cast<std::size_t>(out.channels));
  if (r.remaining() != need) r.fail("payload size does not match header");
  out.positions.resize(count);
  for (auto& p : out.positions) {
    for (int& v : p) v = r.le<std::uint16_t>();
  }
  out.features.resize(static_cast<std::size_t>(count) * out.channels);
  for (float& f : out.features) f = r.le<float>();
  r.finish();
  try {
    out.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  return out;
}

}  // namespace muses

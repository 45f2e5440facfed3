#include "muses/skinning_io.hpp"

#include <cmath>

#include "binary_detail.hpp"

namespace muses {

std::string encode_skinning(const SkinningMatrix& w) {
  w.validate();
  std::uint32_t count = 0;
  for (Eigen::Index i = 0; i < w.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.weights.cols(); ++j) count += static_cast<float>(w.weights(i, j)) != 0.0f;
  }
  detail::ByteWriter out;
  out.raw("MUSW");
  out.le(kSkinningVersion);
  out.le(static_cast<std::uint32_t>(w.weights.rows()));
  out.le(static_cast<std::uint32_t>(w.weights.cols()));
  out.le(count);
  for (Eigen::Index i = 0; i < w.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.weights.cols(); ++j) {
      auto v = static_cast<float>(w.weights(i, j));
      if (v == 0.0f) continue;
      out.le(static_cast<std::uint32_t>(i));
      out.le(static_cast<std::uint32_t>(j));
      out.le(v);
    }
  }
  return out.take();
}

SkinningMatrix decode_skinning(std::string_view bytes) {
  detail::ByteReader r(bytes, "MUSW");
  r.expect("MUSW");
  if (r.le<std::uint8_t>() != kSkinningVersion) r.fail("unsupported version");
  auto q = r.le<std::uint32_t>();
  auto j = r.le<std::uint32_t>();
  auto count = r.le<std::uint32_t>();
  if (r.remaining() != static_cast<std::size_t>(count) * 12) r.fail("payload size does not match header");
  if (static_cast<std::uint64_t>(q) * j > (std::uint64_t{1} << 31)) r.fail("matrix too large");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(q, j);
  std::uint64_t prev = 0;
  for (std::uint32_t e = 0; e < count; ++e) {
    auto vi = r.le<std::uint32_t>();
    auto ji = r.le<std::uint32_t>();
    auto v = r.le<float>();
    if (vi >= q || ji >= j) r.fail("entry index out of range");
    std::uint64_t key = static_cast<std::uint64_t>(vi) * j + ji + 1;
    if (key <= prev) r.fail("entries not sorted by (vertex, joint)");
    prev = key;
    if (!(v >= 0.0f) || !std::isfinite(v)) r.fail("weight must be finite and non-negative");
    m(vi, ji) = v;
  }
  r.finish();
  return SkinningMatrix::identity_mapped(std::move(m));
}

}  // namespace muses

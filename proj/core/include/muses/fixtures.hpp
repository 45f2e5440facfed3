#pragma once

#include <optional>
#include <string_view>

#include "muses/gateway.hpp"
#include "muses/templates.hpp"

namespace muses {

struct FixtureOptions {
  TemplateOptions shape;
  int resolution = 64;
  int channels = 8;
  int ring_segments = 8;  // vertices around each bone tube
  int ring_count = 5;     // rings along each bone, ends included
};

// Procedural asset: tube mesh around the template bones, linear two-joint skinning along
// each bone, and a solid capsule voxelization with smooth deterministic features.
AssetBundle make_fixture_bundle(TemplateKind kind, const FixtureOptions& options = {});

// Template kind for a fixture name, or a guess from creature words in a prompt.
std::optional<TemplateKind> fixture_kind(std::string_view name);
TemplateKind guess_fixture_kind(std::string_view prompt);

// Deterministic pseudo-features keyed by voxel position.
std::vector<float> fixture_features(std::span<const Coord> positions, int channels);

}  // namespace muses

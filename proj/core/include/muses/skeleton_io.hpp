#pragma once

#include <string>
#include <string_view>

#include "muses/skeleton.hpp"

namespace muses {

// {"joints": [[x,y,z],...], "bones": [[i,j],...], "root": r, "names": [...]|null}
std::string skeleton_to_json(const Skeleton& s);
Skeleton skeleton_from_json(std::string_view text);

// Partition report: labels, instance ids, retained and original joint sets.
std::string classification_to_json(const CleanSkeleton& clean, const Classification& result);

}  // namespace muses

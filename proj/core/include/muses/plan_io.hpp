#pragma once

#include <string>
#include <string_view>

#include "muses/layout.hpp"

namespace muses {

// Wire form shared with planner backends and the composer UI:
// {"parts":[{"asset","region","instance","copies","symmetric"}],
//  "ops":[{"type":"rotate|translate|scale","target":"a1/head/1",...}],
//  "attach":[{"from":"a0/body/1/joint/12","to":"a1/head/1/joint/0"}]}
std::string plan_to_json(const AssemblyPlan& plan);
// Short references ("body", "body/joint/3") resolve against the declared parts.
AssemblyPlan plan_from_json(std::string_view text);

// One entry of "ops"; a short target resolves against `declared`.
std::string op_to_json(const EditOp& op);
EditOp op_from_json(std::string_view text, const std::vector<PlanPart>& declared);

// The plan schema with the declared parts only, plus "request" and "attributes".
std::string plan_request_json(const PlanRequest& request);

std::string joint_ref_key(const JointRef& ref);
JointRef parse_joint_ref(std::string_view text);

// Merged skeleton, per-joint provenance and per-copy transforms (row-major 3x4).
std::string assembled_to_json(const AssembledSkeleton& assembled);

}  // namespace muses

// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/geometry.hpp"

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

namespace viewforge {

/// Views a single denoiser call can jointly handle (conditioning + targets).
inline constexpr std::size_t kMaxViewsPerStep = 8;
inline constexpr std::size_t kAnchorCount = 7;
inline constexpr std::size_t kGroupSize = 5;
inline constexpr std::size_t kGroupConditioning = 3;

/// Greedy furthest-point selection: repeatedly takes the candidate whose minimum
/// distance to the observed points and the already selected candidates is largest.
/// Ties go to the lowest index. Returns indices in selection order.
std::vector<std::size_t> select_anchors(const std::vector<Vec3> &candidates, const std::vector<Vec3> &observed,
                                        std::size_t k);

/// Greedy proximity grouping: seed with the lowest unassigned index, add its
/// group_size−1 nearest unassigned neighbours (ties by index), repeat.
/// Each group is returned sorted ascending.
std::vector<std::vector<std::size_t>> group_targets(const std::vector<Vec3> &positions, std::size_t group_size);

/// The m pool ids nearest to the centroid of `group_positions` (ties by lower id),
/// ordered by increasing distance.
std::vector<std::size_t> nearest_conditioning(const std::vector<Vec3> &group_positions,
                                              const std::vector<std::pair<std::size_t, Vec3>> &pool,
                                              std::size_t m);

enum class SamplingMode { single_image, few_view };
enum class StepStage { anchor, group };

std::string_view to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(std::string_view name);
std::string_view to_string(StepStage stage);
StepStage step_stage_from_string(std::string_view name);

struct PlanStep {
    StepStage stage = StepStage::group;
    std::vector<std::size_t> conditioning_ids;
    std::vector<std::size_t> target_ids;

    bool operator==(const PlanStep &) const = default;
};

/// Ordered generation steps over a shared id space: observed views take ids
/// 0..O−1 and target pose j takes id O + j.
struct SamplingPlan {
    std::vector<std::size_t> observed_ids;
    std::vector<Pose> pose_table; ///< target poses, indexed by id − observed_ids.size()
    std::vector<PlanStep> steps;

    std::size_t target_id(std::size_t target_index) const { return observed_ids.size() + target_index; }
    const Pose &target_pose(std::size_t id) const { return pose_table.at(id - observed_ids.size()); }
    bool is_observed(std::size_t id) const { return id < observed_ids.size(); }

    /// Throws InvalidArgument unless targets are partitioned exactly, every step
    /// fits kMaxViewsPerStep, and conditioning only references observed ids or
    /// targets of strictly earlier steps.
    void validate() const;
};

/// single_image: one anchor step (1 conditioning → up to 7 targets chosen by
/// select_anchors), then groups of ≤5 conditioned on the 3 nearest of observed ∪
/// anchors. few_view: groups of ≤5 conditioned on the 3 nearest observed views.
SamplingPlan build_plan(const std::vector<Pose> &observed, const std::vector<Pose> &targets, SamplingMode mode);

} // namespace viewforge

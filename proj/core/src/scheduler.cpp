// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/scheduler.hpp"

#include "viewforge/errors.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace viewforge {

std::vector<std::size_t> select_anchors(const std::vector<Vec3> &candidates, const std::vector<Vec3> &observed,
                                        std::size_t k) {
    if (k > candidates.size()) {
        throw InvalidArgument("select_anchors: requested " + std::to_string(k) + " anchors from " +
                              std::to_string(candidates.size()) + " candidates");
    }
    if (observed.empty()) {
        throw InvalidArgument("select_anchors: at least one observed position is required");
    }
    // min_dist[i]: distance from candidate i to the nearest observed/selected point.
    std::vector<double> min_dist(candidates.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (const Vec3 &o : observed) {
            min_dist[i] = std::min(min_dist[i], (candidates[i] - o).norm());
        }
    }
    std::vector<bool> taken(candidates.size(), false);
    std::vector<std::size_t> selected;
    selected.reserve(k);
    while (selected.size() < k) {
        std::size_t best = candidates.size();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (!taken[i] && (best == candidates.size() || min_dist[i] > min_dist[best])) {
                best = i;
            }
        }
        taken[best] = true;
        selected.push_back(best);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            min_dist[i] = std::min(min_dist[i], (candidates[i] - candidates[best]).norm());
        }
    }
    return selected;
}

std::vector<std::vector<std::size_t>> group_targets(const std::vector<Vec3> &positions, std::size_t group_size) {
    if (group_size < 1) {
        throw InvalidArgument("group_targets: group size must be at least 1");
    }
    std::vector<bool> assigned(positions.size(), false);
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t seed = 0; seed < positions.size(); ++seed) {
        if (assigned[seed]) {
            continue;
        }
        assigned[seed] = true;
        std::vector<std::size_t> rest;
        for (std::size_t i = seed + 1; i < positions.size(); ++i) {
            if (!assigned[i]) {
                rest.push_back(i);
            }
        }
        const std::size_t take = std::min(group_size - 1, rest.size());
        std::partial_sort(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(take), rest.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double da = (positions[a] - positions[seed]).squaredNorm();
                              const double db = (positions[b] - positions[seed]).squaredNorm();
                              return da < db || (da == db && a < b);
                          });
        std::vector<std::size_t> group{seed};
        for (std::size_t j = 0; j < take; ++j) {
            assigned[rest[j]] = true;
            group.push_back(rest[j]);
        }
        std::sort(group.begin(), group.end());
        groups.push_back(std::move(group));
    }
    return groups;
}

std::vector<std::size_t> nearest_conditioning(const std::vector<Vec3> &group_positions,
                                              const std::vector<std::pair<std::size_t, Vec3>> &pool,
                                              std::size_t m) {
    if (m > pool.size()) {
        throw InvalidArgument("nearest_conditioning: requested " + std::to_string(m) + " views from a pool of " +
                              std::to_string(pool.size()));
    }
    if (group_positions.empty()) {
        throw InvalidArgument("nearest_conditioning: empty group");
    }
    Vec3 center = Vec3::Zero();
    for (const Vec3 &p : group_positions) {
        center += p;
    }
    center /= static_cast<double>(group_positions.size());

    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(pool.size());
    for (const auto &[id, pos] : pool) {
        ranked.emplace_back((pos - center).norm(), id);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m; ++i) {
        out.push_back(ranked[i].second);
    }
    return out;
}

std::string_view to_string(SamplingMode mode) {
    return mode == SamplingMode::single_image ? "single_image" : "few_view";
}

SamplingMode sampling_mode_from_string(std::string_view name) {
    if (name == "single_image") return SamplingMode::single_image;
    if (name == "few_view") return SamplingMode::few_view;
    throw InvalidArgument("unknown mode '" + std::string(name) + "'; valid modes: single_image, few_view");
}

std::string_view to_string(StepStage stage) { return stage == StepStage::anchor ? "anchor" : "group"; }

StepStage step_stage_from_string(std::string_view name) {
    if (name == "anchor") return StepStage::anchor;
    if (name == "group") return StepStage::group;
    throw InvalidArgument("unknown step stage '" + std::string(name) + "'; valid stages: anchor, group");
}

void SamplingPlan::validate() const {
    const std::size_t observed_count = observed_ids.size();
    for (std::size_t i = 0; i < observed_count; ++i) {
        if (observed_ids[i] != i) {
            throw InvalidArgument("plan: observed ids must be 0..O-1 in order");
        }
    }
    const std::size_t total = observed_count + pose_table.size();
    // generated_at[id]: index of the step producing target id (or npos).
    constexpr auto npos = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> generated_at(total, npos);
    for (std::size_t s = 0; s < steps.size(); ++s) {
        const PlanStep &step = steps[s];
        if (step.target_ids.empty()) {
            throw InvalidArgument("plan step " + std::to_string(s) + " has no targets");
        }
        if (step.conditioning_ids.empty()) {
            throw InvalidArgument("plan step " + std::to_string(s) + " has no conditioning views");
        }
        if (step.conditioning_ids.size() + step.target_ids.size() > kMaxViewsPerStep) {
            throw InvalidArgument("plan step " + std::to_string(s) + " exceeds " + std::to_string(kMaxViewsPerStep) +
                                  " views");
        }
        for (std::size_t id : step.target_ids) {
            if (id < observed_count || id >= total) {
                throw InvalidArgument("plan step " + std::to_string(s) + " targets invalid id " + std::to_string(id));
            }
            if (generated_at[id] != npos) {
                throw InvalidArgument("plan: target id " + std::to_string(id) + " appears in more than one step");
            }
            generated_at[id] = s;
        }
    }
    for (std::size_t id = observed_count; id < total; ++id) {
        if (generated_at[id] == npos) {
            throw InvalidArgument("plan: target id " + std::to_string(id) + " is never generated");
        }
    }
    for (std::size_t s = 0; s < steps.size(); ++s) {
        for (std::size_t id : steps[s].conditioning_ids) {
            if (id >= total) {
                throw InvalidArgument("plan step " + std::to_string(s) + " conditions on unknown id " +
                                      std::to_string(id));
            }
            if (id >= observed_count && generated_at[id] >= s) {
                throw InvalidArgument("plan step " + std::to_string(s) + " conditions on id " + std::to_string(id) +
                                      " before it is generated");
            }
        }
    }
}

SamplingPlan build_plan(const std::vector<Pose> &observed, const std::vector<Pose> &targets, SamplingMode mode) {
    if (mode == SamplingMode::single_image && observed.size() != 1) {
        throw InvalidArgument("single_image mode requires exactly 1 observed view, got " +
                              std::to_string(observed.size()));
    }
    if (mode == SamplingMode::few_view && observed.size() < 2) {
        throw InvalidArgument("few_view mode requires at least 2 observed views, got " +
                              std::to_string(observed.size()));
    }
    SamplingPlan plan;
    plan.observed_ids.resize(observed.size());
    std::iota(plan.observed_ids.begin(), plan.observed_ids.end(), std::size_t{0});
    plan.pose_table = targets;

    std::vector<std::pair<std::size_t, Vec3>> pool;
    std::vector<Vec3> observed_positions;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        pool.emplace_back(i, observed[i].translation);
        observed_positions.push_back(observed[i].translation);
    }

    std::vector<std::size_t> remaining(targets.size());
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});

    if (mode == SamplingMode::single_image && !targets.empty()) {
        std::vector<Vec3> candidates;
        for (const Pose &p : targets) {
            candidates.push_back(p.translation);
        }
        const auto anchors = select_anchors(candidates, observed_positions, std::min(kAnchorCount, targets.size()));
        PlanStep step;
        step.stage = StepStage::anchor;
        step.conditioning_ids = {0};
        for (std::size_t a : anchors) {
            step.target_ids.push_back(plan.target_id(a));
            pool.emplace_back(plan.target_id(a), targets[a].translation);
        }
        plan.steps.push_back(step);
        std::vector<bool> is_anchor(targets.size(), false);
        for (std::size_t a : anchors) {
            is_anchor[a] = true;
        }
        std::erase_if(remaining, [&](std::size_t i) { return is_anchor[i]; });
    }

    std::vector<Vec3> remaining_positions;
    for (std::size_t i : remaining) {
        remaining_positions.push_back(targets[i].translation);
    }
    const std::size_t m = std::min(kGroupConditioning, pool.size());
    for (const auto &group : group_targets(remaining_positions, kGroupSize)) {
        PlanStep step;
        step.stage = StepStage::group;
        std::vector<Vec3> group_positions;
        for (std::size_t local : group) {
            step.target_ids.push_back(plan.target_id(remaining[local]));
            group_positions.push_back(remaining_positions[local]);
        }
        step.conditioning_ids = nearest_conditioning(group_positions, pool, m);
        plan.steps.push_back(std::move(step));
    }
    return plan;
}

} // namespace viewforge

// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/metrics.hpp"
#include "viewforge/reconstruction.hpp"
#include "viewforge/sampler.hpp"
#include "viewforge/scene.hpp"
#include "viewforge/scheduler.hpp"
#include "viewforge/trajectories.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace viewforge {

/// A named scene preset, or an explicit sphere list.
struct SceneSource {
    std::string preset = "single_sphere";
    std::uint64_t seed = 0;
    std::optional<SceneSpec> custom;

    SceneSpec resolve() const;
};

/// Explicit poses, or a generated ring of cameras looking at the origin.
///
/// Presets:
///   "arc"           `count` cameras spread over `spread_degrees` of azimuth
///   "ring"          `count` cameras evenly around the full circle, offset half a step
///   "near_observed" cameras swung by ±`spread_degrees` about +y from the observed ones
struct PoseSource {
    std::string preset = "arc";
    int count = 1;
    double distance = 3.0;
    double height = 0.8;
    double spread_degrees = 60.0;
    std::vector<Pose> poses;

    /// `observed` is only consulted by "near_observed".
    std::vector<Pose> resolve(const std::vector<Pose> &observed = {}) const;
};

/// A dataset preset name, or explicit path specs concatenated in order.
struct TrajectorySource {
    std::string preset = "single_orbit";
    std::vector<PathSpec> paths;
};

enum class OracleKind { gaussian, scene };

std::string_view to_string(OracleKind kind);
OracleKind oracle_kind_from_string(std::string_view name);

struct OracleConfig {
    OracleKind kind = OracleKind::scene;
    double inconsistency_sigma = 0.0; ///< scene oracle
    double mu = 0.5;                  ///< gaussian oracle, per-pixel mean in [0,1]
    double tau = 0.25;                ///< gaussian oracle, model-space std
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    SceneSource scene;
    int width = 64;
    int height = 64;
    double hfov_degrees = 40.0;
    PoseSource observed;
    TrajectorySource trajectory;
    SamplingMode mode = SamplingMode::single_image;
    OracleConfig oracle;
    SamplerOptions sampler;
    LossConfig recon;
    std::optional<Box> bounds; ///< defaults to a box around the scene
    PoseSource holdout{"ring", 8, 3.0, 0.8, 60.0, {}};
    int threads = 1;
    std::filesystem::path output_dir = "viewforge_out";

    /// Checks everything that can be checked without running a stage.
    void validate() const;
    Intrinsics intrinsics() const;
    Box scene_bounds(const SceneSpec &scene) const;
};

/// Final status written to report.json.
struct PipelineReport {
    std::string status = "ok";
    std::string failed_stage; ///< set when status is "error"
    std::string error;
    std::uint64_t seed = 0;
    std::size_t observed_views = 0;
    std::size_t anchor_views = 0;
    std::size_t generated_views = 0;
    double final_loss = 0.0;
    MetricReport metrics;
};

/// Workspace layout shared by the pipeline and the subcommands.
struct Workspace {
    std::filesystem::path root;

    std::filesystem::path views_dir() const { return root / "views"; }
    std::filesystem::path manifest() const { return views_dir() / "manifest.json"; }
    std::filesystem::path trajectory() const { return root / "trajectory.json"; }
    std::filesystem::path plan() const { return root / "plan.json"; }
    std::filesystem::path checkpoint() const { return root / "grid.ckpt"; }
    std::filesystem::path training() const { return root / "training.json"; }
    std::filesystem::path holdout() const { return root / "holdout.json"; }
    std::filesystem::path truth_dir() const { return root / "truth"; }
    std::filesystem::path renders_dir() const { return root / "renders"; }
    std::filesystem::path report() const { return root / "report.json"; }
};

std::string view_file_name(std::size_t id);

/// Expands a trajectory source against the poses it is fitted to.
std::vector<Pose> trajectory_poses(const TrajectorySource &source, const std::vector<Pose> &fit);

// Stages. Each reads its inputs from and writes its outputs to the workspace,
// so the pipeline and the chained subcommands see the same 8-bit images.

/// Renders the observed views (views/, manifest) and the held-out ground truth (holdout.json, truth/).
void stage_observe(const PipelineConfig &config, const Workspace &ws);
/// Observed poses from the manifest → trajectory.json.
void stage_trajectory(const PipelineConfig &config, const Workspace &ws);
/// Manifest + trajectory.json → plan.json.
void stage_plan(const PipelineConfig &config, const Workspace &ws);
/// plan.json + observed views → generated views/ and an extended manifest.
void stage_sample(const PipelineConfig &config, const Workspace &ws);
/// All manifest views → grid.ckpt and training.json.
void stage_reconstruct(const PipelineConfig &config, const Workspace &ws);
/// grid.ckpt + holdout.json → renders/.
void stage_render(const PipelineConfig &config, const Workspace &ws);
/// renders/ vs truth/ → report.json.
PipelineReport stage_evaluate(const PipelineConfig &config, const Workspace &ws);

/// Renders a checkpoint from every pose in a pose file into `out_dir`.
void render_checkpoint(const std::filesystem::path &checkpoint, const std::filesystem::path &poses,
                       const Intrinsics &intrinsics, int n_samples, const std::filesystem::path &out_dir);

/// Scores every `*.ppm` in `rendered_dir` against the same-named file in `truth_dir`.
MetricReport evaluate_directories(const std::filesystem::path &rendered_dir, const std::filesystem::path &truth_dir);

/// Runs every stage in order. Failures are caught and recorded in report.json
/// (status "error" plus the stage); artifacts written so far are kept.
PipelineReport run_pipeline(const PipelineConfig &config);

} // namespace viewforge

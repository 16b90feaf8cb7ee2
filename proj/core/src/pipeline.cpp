// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/pipeline.hpp"

#include "viewforge/checkpoint.hpp"
#include "viewforge/errors.hpp"
#include "viewforge/oracles.hpp"
#include "viewforge/random.hpp"
#include "viewforge/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace viewforge {

namespace fs = std::filesystem;

namespace {

// Independent seed streams derived from the run seed.
constexpr std::uint64_t kSamplerStream = 1;
constexpr std::uint64_t kReconStream = 2;
constexpr std::uint64_t kOracleStream = 3;

constexpr double kBoundsMargin = 0.25;

Pose ring_camera(double azimuth, double distance, double height) {
    const Vec3 eye(distance * std::cos(azimuth), height, distance * std::sin(azimuth));
    return look_at(eye, Vec3::Zero());
}

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

void reset_dir(const fs::path &dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
}

std::vector<View> load_views(const ViewManifest &manifest, const fs::path &dir, bool observed_only) {
    std::vector<View> views;
    for (const ManifestEntry &e : manifest.views) {
        if (observed_only && e.kind != ViewKind::observed) {
            continue;
        }
        View v{read_ppm(dir / e.file), e.pose, manifest.intrinsics, e.kind};
        if (v.image.width() != manifest.intrinsics.width || v.image.height() != manifest.intrinsics.height) {
            throw DimensionError("view " + e.file + " does not match the manifest intrinsics");
        }
        views.push_back(std::move(v));
    }
    return views;
}

std::vector<Pose> observed_poses(const ViewManifest &manifest) {
    std::vector<Pose> poses;
    for (const ManifestEntry &e : manifest.views) {
        if (e.kind == ViewKind::observed) {
            poses.push_back(e.pose);
        }
    }
    if (poses.empty()) {
        throw InvalidArgument("manifest lists no observed views");
    }
    return poses;
}

ViewManifest read_manifest(const Workspace &ws) { return manifest_from_json(read_text_file(ws.manifest())); }

std::vector<fs::path> ppm_files(const fs::path &dir) {
    if (!fs::is_directory(dir)) {
        throw Error("not a directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
            files.push_back(entry.path().filename());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace

SceneSpec SceneSource::resolve() const {
    if (custom) {
        custom->validate();
        return *custom;
    }
    return preset_scene(preset, seed);
}

std::vector<Pose> PoseSource::resolve(const std::vector<Pose> &observed) const {
    if (!poses.empty()) {
        return poses;
    }
    if (count < 1) {
        throw InvalidArgument("pose preset \"" + preset + "\": count must be at least 1");
    }
    if (!(distance > 0.0)) {
        throw InvalidArgument("pose preset \"" + preset + "\": distance must be positive");
    }
    std::vector<Pose> out;
    if (preset == "arc") {
        for (int i = 0; i < count; ++i) {
            const double a = count == 1 ? 0.0 : radians(spread_degrees) * (static_cast<double>(i) / (count - 1) - 0.5);
            out.push_back(ring_camera(a, distance, height));
        }
    } else if (preset == "ring") {
        for (int i = 0; i < count; ++i) {
            out.push_back(ring_camera(2.0 * std::numbers::pi * (i + 0.5) / count, distance, height));
        }
    } else if (preset == "near_observed") {
        if (observed.empty()) {
            throw InvalidArgument("pose preset \"near_observed\" needs observed poses");
        }
        for (int i = 0; i < count; ++i) {
            const Pose &o = observed[static_cast<std::size_t>(i) % observed.size()];
            const int k = i / static_cast<int>(observed.size());
            const double swing = radians(spread_degrees) * (k / 2 + 1) * (k % 2 == 0 ? 1.0 : -1.0);
            const Vec3 c = o.center();
            const double r = std::hypot(c.x(), c.z());
            const double a = std::atan2(c.z(), c.x()) + swing;
            out.push_back(ring_camera(a, r, c.y()));
        }
    } else {
        throw InvalidArgument("unknown pose preset \"" + preset + "\" (valid: arc, ring, near_observed)");
    }
    return out;
}

std::string_view to_string(OracleKind kind) { return kind == OracleKind::gaussian ? "gaussian" : "scene"; }

OracleKind oracle_kind_from_string(std::string_view name) {
    if (name == "gaussian") {
        return OracleKind::gaussian;
    }
    if (name == "scene") {
        return OracleKind::scene;
    }
    throw InvalidArgument("unknown oracle \"" + std::string(name) + "\" (valid: gaussian, scene)");
}

Intrinsics PipelineConfig::intrinsics() const { return Intrinsics::from_fov(width, height, hfov_degrees); }

Box PipelineConfig::scene_bounds(const SceneSpec &scene) const {
    if (bounds) {
        return *bounds;
    }
    for (const Sphere &s : scene.spheres) {
        if (s.shell) {
            return Box{s.center.array() - s.radius, s.center.array() + s.radius};
        }
    }
    if (scene.spheres.empty()) {
        return Box{};
    }
    Box box{Vec3::Constant(std::numeric_limits<double>::infinity()),
            Vec3::Constant(-std::numeric_limits<double>::infinity())};
    for (const Sphere &s : scene.spheres) {
        box.min = box.min.cwiseMin((s.center.array() - s.radius).matrix());
        box.max = box.max.cwiseMax((s.center.array() + s.radius).matrix());
    }
    box.min.array() -= kBoundsMargin;
    box.max.array() += kBoundsMargin;
    return box;
}

void PipelineConfig::validate() const {
    const SceneSpec s = scene.resolve();
    intrinsics().validate();
    if (trajectory.paths.empty()) {
        dataset_preset_from_string(trajectory.preset);
    } else {
        for (const PathSpec &p : trajectory.paths) {
            p.validate();
        }
    }
    const std::vector<Pose> obs = observed.resolve();
    if (mode == SamplingMode::single_image && obs.size() != 1) {
        throw InvalidArgument("mode single_image needs exactly 1 observed view, config gives " +
                              std::to_string(obs.size()));
    }
    holdout.resolve(obs);
    if (sampler.steps < 1 || !(sampler.cfg >= 0.0) || sampler.raymap_divisor < 1 || !(sampler.clip > 0.0)) {
        throw InvalidArgument("sampler: need steps >= 1, cfg >= 0, raymap_divisor >= 1 and clip > 0");
    }
    if (width % sampler.raymap_divisor != 0 || height % sampler.raymap_divisor != 0) {
        throw InvalidArgument("sampler: raymap_divisor must divide the image size");
    }
    if (!(oracle.inconsistency_sigma >= 0.0) || !(oracle.tau >= 0.0) || !(oracle.mu >= 0.0 && oracle.mu <= 1.0)) {
        throw InvalidArgument("oracle: need inconsistency_sigma >= 0, tau >= 0 and mu in [0,1]");
    }
    recon.validate();
    if (recon.patch > width || recon.patch > height) {
        throw InvalidArgument("recon: patch exceeds the image size");
    }
    if (!scene_bounds(s).valid()) {
        throw InvalidArgument("recon: bounds must satisfy min < max componentwise");
    }
    if (threads < 1) {
        throw InvalidArgument("threads must be at least 1");
    }
}

std::string view_file_name(std::size_t id) {
    char name[32];
    std::snprintf(name, sizeof name, "view_%04zu.ppm", id);
    return name;
}

void stage_observe(const PipelineConfig &config, const Workspace &ws) {
    const SceneSpec scene = config.scene.resolve();
    const Intrinsics k = config.intrinsics();
    const std::vector<Pose> observed = config.observed.resolve();
    const std::vector<Pose> holdout = config.holdout.resolve(observed);

    reset_dir(ws.views_dir());
    ViewManifest manifest{k, {}};
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const std::string file = view_file_name(i);
        write_ppm(ws.views_dir() / file, render_scene(scene, observed[i], k));
        manifest.views.push_back({i, ViewKind::observed, file, observed[i], std::nullopt});
    }
    write_text_file(ws.manifest(), manifest_to_json(manifest));

    write_text_file(ws.holdout(), poses_to_json(holdout));
    reset_dir(ws.truth_dir());
    for (std::size_t i = 0; i < holdout.size(); ++i) {
        write_ppm(ws.truth_dir() / view_file_name(i), render_scene(scene, holdout[i], k));
    }
}

std::vector<Pose> trajectory_poses(const TrajectorySource &source, const std::vector<Pose> &fit) {
    if (source.paths.empty()) {
        return dataset_preset(dataset_preset_from_string(source.preset), fit);
    }
    std::vector<Pose> path;
    for (const PathSpec &spec : source.paths) {
        const auto part = generate_path(spec, fit);
        path.insert(path.end(), part.begin(), part.end());
    }
    return path;
}

void stage_trajectory(const PipelineConfig &config, const Workspace &ws) {
    const std::vector<Pose> fit = observed_poses(read_manifest(ws));
    write_text_file(ws.trajectory(), poses_to_json(trajectory_poses(config.trajectory, fit)));
}

void stage_plan(const PipelineConfig &config, const Workspace &ws) {
    const std::vector<Pose> observed = observed_poses(read_manifest(ws));
    const std::vector<Pose> targets = poses_from_json(read_text_file(ws.trajectory()));
    write_text_file(ws.plan(), plan_to_json(build_plan(observed, targets, config.mode)));
}

void stage_sample(const PipelineConfig &config, const Workspace &ws) {
    const SamplingPlan plan = plan_from_json(read_text_file(ws.plan()));
    ViewManifest manifest = read_manifest(ws);
    const std::vector<View> observed = load_views(manifest, ws.views_dir(), true);
    if (observed.size() != plan.observed_ids.size()) {
        throw InvalidArgument("plan expects " + std::to_string(plan.observed_ids.size()) +
                              " observed views, manifest has " + std::to_string(observed.size()));
    }

    SamplerOptions opts = config.sampler;
    opts.seed = mix_seed(config.seed, kSamplerStream);
    opts.threads = config.threads;

    std::vector<View> views;
    if (config.oracle.kind == OracleKind::scene) {
        const SceneOracle oracle(config.scene.resolve(), config.oracle.inconsistency_sigma,
                                 mix_seed(config.seed, kOracleStream));
        views = execute_plan(oracle, plan, observed, opts);
    } else {
        const GaussianOracle oracle(Array{2.0 * config.oracle.mu - 1.0}, config.oracle.tau);
        views = execute_plan(oracle, plan, observed, opts);
    }

    std::vector<std::size_t> step_of(views.size(), 0);
    for (std::size_t s = 0; s < plan.steps.size(); ++s) {
        for (std::size_t id : plan.steps[s].target_ids) {
            step_of[id] = s;
        }
    }
    manifest.views.resize(observed.size());
    for (std::size_t id = observed.size(); id < views.size(); ++id) {
        const std::string file = view_file_name(id);
        write_ppm(ws.views_dir() / file, views[id].image);
        manifest.views.push_back({id, views[id].kind, file, views[id].pose, step_of[id]});
    }
    write_text_file(ws.manifest(), manifest_to_json(manifest));
}

void stage_reconstruct(const PipelineConfig &config, const Workspace &ws) {
    const SceneSpec scene = config.scene.resolve();
    const ViewManifest manifest = read_manifest(ws);
    const std::vector<View> views = load_views(manifest, ws.views_dir(), false);
    LossConfig cfg = config.recon;
    cfg.background = scene.background;
    cfg.threads = config.threads;
    const ReconstructionResult result =
        reconstruct(views, config.scene_bounds(scene), cfg, mix_seed(config.seed, kReconStream));
    write_checkpoint(ws.checkpoint(), result.grid);
    write_text_file(ws.training(), training_to_json(result.loss_history, result.photometric_history));
}

void render_checkpoint(const fs::path &checkpoint, const fs::path &poses, const Intrinsics &intrinsics, int n_samples,
                       const fs::path &out_dir) {
    const VoxelGrid grid = read_checkpoint(checkpoint);
    const std::vector<Pose> list = poses_from_json(read_text_file(poses));
    reset_dir(out_dir);
    for (std::size_t i = 0; i < list.size(); ++i) {
        write_ppm(out_dir / view_file_name(i), render_image(grid, list[i], intrinsics, n_samples));
    }
}

void stage_render(const PipelineConfig &config, const Workspace &ws) {
    render_checkpoint(ws.checkpoint(), ws.holdout(), config.intrinsics(), config.recon.n_samples, ws.renders_dir());
}

MetricReport evaluate_directories(const fs::path &rendered_dir, const fs::path &truth_dir) {
    const std::vector<fs::path> truth_files = ppm_files(truth_dir);
    if (truth_files.empty()) {
        throw InvalidArgument("no .ppm images in " + truth_dir.string());
    }
    std::vector<Image> rendered;
    std::vector<Image> truth;
    std::vector<std::int64_t> ids;
    for (std::size_t i = 0; i < truth_files.size(); ++i) {
        const fs::path r = rendered_dir / truth_files[i];
        if (!fs::exists(r)) {
            throw InvalidArgument("missing rendered image " + r.string());
        }
        rendered.push_back(read_ppm(r));
        truth.push_back(read_ppm(truth_dir / truth_files[i]));
        ids.push_back(static_cast<std::int64_t>(i));
    }
    return evaluate_views(rendered, truth, ids);
}

PipelineReport stage_evaluate(const PipelineConfig &config, const Workspace &ws) {
    PipelineReport report;
    report.seed = config.seed;
    report.metrics = evaluate_directories(ws.renders_dir(), ws.truth_dir());
    for (const ManifestEntry &e : read_manifest(ws).views) {
        ++(e.kind == ViewKind::observed ? report.observed_views
           : e.kind == ViewKind::anchor ? report.anchor_views
                                        : report.generated_views);
    }
    if (fs::exists(ws.training())) {
        const std::vector<double> loss = training_loss_from_json(read_text_file(ws.training()));
        report.final_loss = loss.empty() ? 0.0 : loss.back();
    }
    write_text_file(ws.report(), report_to_json(report));
    return report;
}

PipelineReport run_pipeline(const PipelineConfig &config) {
    const Workspace ws{config.output_dir};
    std::string stage = "config";
    try {
        config.validate();
        fs::create_directories(ws.root);
        stage = "observe";
        stage_observe(config, ws);
        stage = "trajectory";
        stage_trajectory(config, ws);
        stage = "plan";
        stage_plan(config, ws);
        stage = "sample";
        stage_sample(config, ws);
        stage = "reconstruct";
        stage_reconstruct(config, ws);
        stage = "render";
        stage_render(config, ws);
        stage = "evaluate";
        return stage_evaluate(config, ws);
    } catch (const std::exception &e) {
        PipelineReport report;
        report.status = "error";
        report.failed_stage = stage;
        report.error = e.what();
        report.seed = config.seed;
        std::error_code ec;
        if (fs::create_directories(ws.root, ec); fs::is_directory(ws.root)) {
            try {
                write_text_file(ws.report(), report_to_json(report));
            } catch (const Error &) {
                // The error itself is still returned to the caller.
            }
        }
        return report;
    }
}

} // namespace viewforge

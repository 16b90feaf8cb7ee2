// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

// viewforge: command-line driver for the generate-then-reconstruct pipeline.
//
//   viewforge run --config cfg.json --out ws
//   viewforge observe|trajectory|plan|sample|reconstruct|render|evaluate --config cfg.json --out ws
//
// The stage subcommands operate on the same workspace layout as `run`, so
// chaining them reproduces the pipeline byte for byte.

#include "viewforge/errors.hpp"
#include "viewforge/pipeline.hpp"
#include "viewforge/serialization.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace viewforge;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> steps;
    std::optional<double> cfg;
    std::string out;
};

void add_common(CLI::App &cmd, CommonOptions &o) {
    cmd.add_option("--config", o.config, "Pipeline config (JSON)")->check(CLI::ExistingFile);
    cmd.add_option("--seed", o.seed, "Run seed (overrides the config)");
    cmd.add_option("--threads", o.threads, "Worker thread cap")->check(CLI::PositiveNumber);
    cmd.add_option("--steps", o.steps, "DDIM steps")->check(CLI::PositiveNumber);
    cmd.add_option("--cfg", o.cfg, "Classifier-free guidance weight")->check(CLI::NonNegativeNumber);
    cmd.add_option("--out", o.out, "Workspace / output directory");
}

PipelineConfig load_config(const CommonOptions &o) {
    PipelineConfig c = o.config.empty() ? PipelineConfig{} : config_from_json(read_text_file(o.config));
    if (o.seed) c.seed = *o.seed;
    if (o.threads) c.threads = *o.threads;
    if (o.steps) c.sampler.steps = *o.steps;
    if (o.cfg) c.sampler.cfg = *o.cfg;
    if (!o.out.empty()) c.output_dir = o.out;
    return c;
}

int fail(const std::string &message) {
    std::cerr << "viewforge: " << message << "\n";
    return 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"viewforge: posed novel-view generation and robust voxel reconstruction"};
    app.require_subcommand(1);

    CommonOptions common;
    std::function<int()> action;

    auto *run = app.add_subcommand("run", "Run every stage: observe, trajectory, plan, sample, reconstruct, render, evaluate");
    add_common(*run, common);
    run->callback([&] {
        action = [&] {
            const PipelineConfig config = load_config(common);
            const PipelineReport report = run_pipeline(config);
            if (report.status != "ok") {
                return fail("stage '" + report.failed_stage + "' failed: " + report.error);
            }
            std::printf("%zu observed, %zu anchor, %zu generated views; holdout psnr %.3f dB, ssim %.4f, proxy %.6f\n",
                        report.observed_views, report.anchor_views, report.generated_views,
                        report.metrics.aggregate.psnr, report.metrics.aggregate.ssim, report.metrics.aggregate.proxy);
            std::printf("report: %s\n", Workspace{config.output_dir}.report().string().c_str());
            return 0;
        };
    });

    auto stage_command = [&](const char *name, const char *help, void (*stage)(const PipelineConfig &, const Workspace &)) {
        auto *cmd = app.add_subcommand(name, help);
        add_common(*cmd, common);
        cmd->callback([&, stage] {
            action = [&, stage] {
                const PipelineConfig config = load_config(common);
                config.validate();
                fs::create_directories(config.output_dir);
                stage(config, Workspace{config.output_dir});
                return 0;
            };
        });
        return cmd;
    };
    stage_command("observe", "Render observed views and held-out ground truth into the workspace", stage_observe);
    stage_command("plan", "Build plan.json from the manifest and trajectory.json", stage_plan);
    stage_command("sample", "Execute plan.json and write generated views", stage_sample);
    stage_command("reconstruct", "Fit a voxel grid to the workspace views (grid.ckpt)", stage_reconstruct);

    // trajectory: workspace mode by default, or standalone with --fit/--output.
    std::string preset;
    std::string fit_file;
    std::string output_file;
    auto *traj = app.add_subcommand("trajectory", "Emit a camera trajectory as a pose file");
    add_common(*traj, common);
    traj->add_option("--preset", preset, "Dataset preset (overrides the config)");
    traj->add_option("--fit", fit_file, "Pose file to fit the trajectory to")->check(CLI::ExistingFile);
    traj->add_option("--output", output_file, "Pose file to write (default: <out>/trajectory.json)");
    traj->callback([&] {
        action = [&] {
            PipelineConfig config = load_config(common);
            if (!preset.empty()) {
                config.trajectory.preset = preset;
                config.trajectory.paths.clear();
            }
            const Workspace ws{config.output_dir};
            std::vector<Pose> fit;
            if (!fit_file.empty()) {
                fit = poses_from_json(read_text_file(fit_file));
            } else if (fs::exists(ws.manifest())) {
                for (const ManifestEntry &e : manifest_from_json(read_text_file(ws.manifest())).views) {
                    if (e.kind == ViewKind::observed) fit.push_back(e.pose);
                }
            } else {
                fit = config.observed.resolve();
            }
            const std::vector<Pose> poses = trajectory_poses(config.trajectory, fit);
            const fs::path target = output_file.empty() ? ws.trajectory() : fs::path(output_file);
            if (target.has_parent_path()) fs::create_directories(target.parent_path());
            write_text_file(target, poses_to_json(poses));
            std::printf("%zu poses -> %s\n", poses.size(), target.string().c_str());
            return 0;
        };
    });

    // render: workspace mode, or standalone with --checkpoint/--poses/--images.
    std::string checkpoint_file;
    std::string poses_file;
    std::string images_dir;
    auto *render = app.add_subcommand("render", "Render a checkpoint from a pose file");
    add_common(*render, common);
    render->add_option("--checkpoint", checkpoint_file, "Voxel checkpoint (default: <out>/grid.ckpt)");
    render->add_option("--poses", poses_file, "Pose file (default: <out>/holdout.json)");
    render->add_option("--images", images_dir, "Output image directory (default: <out>/renders)");
    render->callback([&] {
        action = [&] {
            const PipelineConfig config = load_config(common);
            const Workspace ws{config.output_dir};
            render_checkpoint(checkpoint_file.empty() ? ws.checkpoint() : fs::path(checkpoint_file),
                              poses_file.empty() ? ws.holdout() : fs::path(poses_file), config.intrinsics(),
                              config.recon.n_samples, images_dir.empty() ? ws.renders_dir() : fs::path(images_dir));
            return 0;
        };
    });

    // evaluate: workspace mode writes report.json; --renders/--truth compare two directories.
    std::string renders_dir;
    std::string truth_dir;
    std::string report_file;
    std::string csv_file;
    auto *evaluate = app.add_subcommand("evaluate", "Score rendered images against ground truth");
    add_common(*evaluate, common);
    evaluate->add_option("--renders", renders_dir, "Rendered image directory");
    evaluate->add_option("--truth", truth_dir, "Ground-truth image directory");
    evaluate->add_option("--report", report_file, "Metrics JSON to write (directory mode)");
    evaluate->add_option("--csv", csv_file, "Also write the per-view table as CSV");
    evaluate->callback([&] {
        action = [&] {
            const PipelineConfig config = load_config(common);
            MetricReport metrics;
            if (renders_dir.empty() && truth_dir.empty()) {
                metrics = stage_evaluate(config, Workspace{config.output_dir}).metrics;
            } else {
                if (renders_dir.empty() || truth_dir.empty()) {
                    return fail("--renders and --truth must be given together");
                }
                metrics = evaluate_directories(renders_dir, truth_dir);
                if (!report_file.empty()) write_text_file(report_file, metrics_to_json(metrics));
            }
            if (!csv_file.empty()) write_text_file(csv_file, metrics.to_csv());
            std::printf("%lld views: psnr %.3f dB, ssim %.4f, proxy %.6f\n",
                        static_cast<long long>(metrics.aggregate.view_id), metrics.aggregate.psnr,
                        metrics.aggregate.ssim, metrics.aggregate.proxy);
            return 0;
        };
    });

    CLI11_PARSE(app, argc, argv);
    try {
        return action();
    } catch (const ParseError &e) {
        return fail(std::string("malformed input: ") + e.what());
    } catch (const std::exception &e) {
        return fail(e.what());
    }
}

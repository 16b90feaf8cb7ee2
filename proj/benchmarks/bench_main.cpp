// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/metrics.hpp"
#include "viewforge/oracles.hpp"
#include "viewforge/random.hpp"
#include "viewforge/reconstruction.hpp"
#include "viewforge/scene.hpp"
#include "viewforge/scheduler.hpp"
#include "viewforge/trajectories.hpp"
#include "viewforge/volume.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace vf = viewforge;

namespace {

vf::VoxelGrid random_grid(int n) {
    vf::Rng rng(1);
    vf::VoxelGrid grid({n, n, n}, vf::Box{});
    for (double &p : grid.params()) {
        p = rng.uniform(-3.0, 1.0);
    }
    return grid;
}

void BM_VolumeRender(benchmark::State &state) {
    const vf::VoxelGrid grid = random_grid(64);
    const int samples = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(vf::volume_render(grid, {-3, 0.1, 0.2}, {1, 0, 0}, 2.0, 4.0, samples));
    }
    state.SetItemsProcessed(state.iterations() * samples);
}
BENCHMARK(BM_VolumeRender)->Arg(64)->Arg(128);

void BM_RenderGradients(benchmark::State &state) {
    const vf::VoxelGrid grid = random_grid(64);
    std::vector<double> grad(grid.params().size(), 0.0);
    for (auto _ : state) {
        vf::render_gradients(grid, {-3, 0.1, 0.2}, {1, 0, 0}, 2.0, 4.0, 128, vf::Vec3(1, 1, 1), grad);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_RenderGradients);

void BM_RenderScene(benchmark::State &state) {
    const vf::SceneSpec scene = vf::preset_scene("room", 1);
    const vf::Intrinsics k = vf::Intrinsics::from_fov(64, 64, 40.0);
    const vf::Pose pose = vf::look_at({0, 0.8, -3}, vf::Vec3::Zero());
    for (auto _ : state) {
        benchmark::DoNotOptimize(vf::render_scene(scene, pose, k));
    }
}
BENCHMARK(BM_RenderScene);

void BM_Ssim(benchmark::State &state) {
    const auto n = static_cast<int>(state.range(0));
    vf::Rng rng(2);
    vf::Image a(n, n);
    vf::Image b(n, n);
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        a.data()[i] = rng.uniform();
        b.data()[i] = rng.uniform();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(vf::ssim(a, b));
    }
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

void BM_SelectAnchors(benchmark::State &state) {
    const auto poses = vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.5, static_cast<int>(state.range(0)));
    std::vector<vf::Vec3> candidates;
    for (const auto &p : poses) {
        candidates.push_back(p.center());
    }
    const std::vector<vf::Vec3> observed{vf::Vec3(0, 0.5, -3)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(vf::select_anchors(candidates, observed, 7));
    }
}
BENCHMARK(BM_SelectAnchors)->Arg(80)->Arg(720);

void BM_BuildPlan(benchmark::State &state) {
    const std::vector<vf::Pose> observed{vf::look_at({0, 0.8, -3}, vf::Vec3::Zero())};
    const auto targets = vf::dataset_preset(vf::DatasetPreset::single_orbit, observed);
    for (auto _ : state) {
        benchmark::DoNotOptimize(vf::build_plan(observed, targets, vf::SamplingMode::single_image));
    }
}
BENCHMARK(BM_BuildPlan);

void BM_Raymap(benchmark::State &state) {
    const vf::Intrinsics k = vf::Intrinsics::from_fov(256, 256, 50.0);
    const vf::Pose cam = vf::look_at({3, 0.5, 0}, vf::Vec3::Zero());
    const vf::Pose ref = vf::look_at({0, 0.5, -3}, vf::Vec3::Zero());
    for (auto _ : state) {
        benchmark::DoNotOptimize(vf::compute_raymap(cam, k, ref, 8));
    }
}
BENCHMARK(BM_Raymap);

void BM_SampleGroup(benchmark::State &state) {
    const vf::SceneSpec scene = vf::preset_scene("cluster", 3);
    const vf::Intrinsics k = vf::Intrinsics::from_fov(64, 64, 40.0);
    const auto poses = vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.8, 8);
    std::vector<vf::View> cond;
    for (int i = 0; i < 3; ++i) {
        cond.push_back({vf::render_scene(scene, poses[i], k), poses[i], k, vf::ViewKind::observed});
    }
    const std::vector<vf::Pose> targets(poses.begin() + 3, poses.end());
    const vf::SceneOracle oracle(scene, 0.05, 1);
    vf::SamplerOptions opts;
    opts.steps = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(vf::sample_group(oracle, cond, targets, opts, 0));
    }
}
BENCHMARK(BM_SampleGroup)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_PerceptualProxy(benchmark::State &state) {
    vf::Rng rng(3);
    std::vector<double> a(32 * 32 * 3);
    std::vector<double> b(a.size());
    std::vector<double> g(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.uniform();
        b[i] = rng.uniform();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(vf::perceptual_proxy(a, b, 32, 32, g));
    }
}
BENCHMARK(BM_PerceptualProxy);

} // namespace

BENCHMARK_MAIN();

// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"
#include "support/reference.hpp"

#include "viewforge/errors.hpp"
#include "viewforge/oracles.hpp"
#include "viewforge/sampler.hpp"
#include "viewforge/trajectories.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>

namespace vf = viewforge;

namespace {

/// A single-target request of `n` scalars starting from standard normal noise.
vf::DenoiserRequest scalar_request(std::size_t n, std::uint64_t seed) {
    vf::DenoiserRequest req;
    vf::Rng rng(seed);
    vf::Array z(n);
    for (double &v : z) {
        v = rng.normal();
    }
    req.noisy_targets.push_back(std::move(z));
    req.raymaps.emplace_back();
    req.mask.push_back(false);
    return req;
}

double mean_of(const vf::Array &a) {
    double s = 0.0;
    for (double v : a) {
        s += v;
    }
    return s / static_cast<double>(a.size());
}

double variance_of(const vf::Array &a) {
    const double m = mean_of(a);
    double s = 0.0;
    for (double v : a) {
        s += (v - m) * (v - m);
    }
    return s / static_cast<double>(a.size() - 1);
}

double max_abs_diff(const vf::Image &a, const vf::Image &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

double mean_abs_diff(const vf::Image &a, const vf::Image &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        s += std::abs(a.data()[i] - b.data()[i]);
    }
    return s / static_cast<double>(a.data().size());
}

class CountingDenoiser final : public vf::Denoiser {
public:
    explicit CountingDenoiser(const vf::Denoiser &inner) : inner_(inner) {}
    std::vector<vf::Array> predict_noise(const vf::DenoiserRequest &r) const override {
        ++(r.conditional ? conditional : unconditional);
        return inner_.predict_noise(r);
    }
    mutable std::atomic<int> conditional{0};
    mutable std::atomic<int> unconditional{0};

private:
    const vf::Denoiser &inner_;
};

class RecordingDenoiser final : public vf::Denoiser {
public:
    explicit RecordingDenoiser(const vf::Denoiser &inner) : inner_(inner) {}
    std::vector<vf::Array> predict_noise(const vf::DenoiserRequest &r) const override {
        std::lock_guard lock(mutex_);
        if (first.raymaps.empty()) {
            first = r;
        }
        return inner_.predict_noise(r);
    }
    mutable vf::DenoiserRequest first;

private:
    const vf::Denoiser &inner_;
    mutable std::mutex mutex_;
};

const vf::Intrinsics kK = vf::Intrinsics::from_fov(32, 32, 45.0);

vf::View observed_view(const vf::SceneSpec &scene, const vf::Pose &pose) {
    vf::View v;
    v.pose = pose;
    v.intrinsics = kK;
    v.image = vf::render_scene(scene, pose, kK);
    return v;
}

vf::SamplerOptions fast_options(int steps = 50, double cfg = 1.0) {
    vf::SamplerOptions opts;
    opts.steps = steps;
    opts.cfg = cfg;
    opts.seed = 17;
    return opts;
}

} // namespace

TEST(NoiseSchedule, CoefficientsAreUnitNorm) {
    const vf::NoiseSchedule schedule;
    for (int n : {1, 3, 7}) {
        for (int i = 0; i <= 1000; ++i) {
            const auto c = schedule.coefficients(i / 1000.0, n);
            EXPECT_NEAR(c.alpha * c.alpha + c.sigma * c.sigma, 1.0, 1e-12);
        }
    }
}

TEST(NoiseSchedule, StrictlyDecreasingAndShifted) {
    const vf::NoiseSchedule schedule;
    for (int n : {1, 2, 7}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 1000; ++i) {
            const double l = vf::shifted_logsnr(schedule, i / 1000.0, n);
            EXPECT_LT(l, prev);
            prev = l;
        }
    }
    vf::Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        const double t = rng.uniform();
        EXPECT_EQ(vf::shifted_logsnr(schedule, t, 1), schedule.base_logsnr(t));
        EXPECT_NEAR(vf::shifted_logsnr(schedule, t, 7) - schedule.base_logsnr(t), -1.9459101490553132, 1e-12);
    }
    EXPECT_EQ(vf::multiview_shift(1), 0.0);
    EXPECT_THROW(vf::multiview_shift(0), vf::InvalidArgument);
}

TEST(NoiseSchedule, TruncatedRangeAndOffset) {
    const vf::NoiseSchedule schedule;
    EXPECT_NEAR(schedule.base_logsnr(0.0), 20.0 + 2.0 * std::log(8.0), 1e-9);
    EXPECT_NEAR(schedule.base_logsnr(1.0), -20.0 + 2.0 * std::log(8.0), 1e-9);
    const vf::NoiseSchedule plain(-20.0, 20.0, 0.0);
    EXPECT_NEAR(plain.base_logsnr(0.5), 0.0, 1e-9);
    EXPECT_GT(schedule.coefficients(1.0, 7).alpha, 0.0);
}

TEST(CfgCombine, Formula) {
    const vf::Array c{2.0, -1.0, 0.3};
    const vf::Array u{1.0, 0.5, 0.7};
    EXPECT_EQ(vf::cfg_combine(c, u, 1.0), c);
    EXPECT_EQ(vf::cfg_combine(c, u, 0.0), u);
    EXPECT_DOUBLE_EQ(vf::cfg_combine(c, u, 3.0)[0], 4.0);
    EXPECT_THROW(vf::cfg_combine(c, vf::Array{1.0}, 3.0), vf::DimensionError);
}

TEST(DdimStep, HandComputedUpdate) {
    const vf::Coefficients at{0.6, 0.8};
    const vf::Coefficients as{0.8, 0.6};
    const vf::Array out = vf::ddim_step(vf::Array{1.0}, vf::Array{0.5}, at, as);
    EXPECT_NEAR(out[0], 1.1, 1e-12);
}

TEST(DdimStep, IdentityAndZeroNoise) {
    const vf::NoiseSchedule schedule;
    const vf::Array x{0.3, -0.2, 0.9};
    const vf::Array eps{0.1, 0.4, -0.3};
    const vf::Array same = vf::ddim_step(x, eps, 0.4, 0.4, schedule, 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(same[i], x[i], 1e-12);
    }
    const auto ct = schedule.coefficients(0.7, 1);
    const auto cs = schedule.coefficients(0.3, 1);
    const vf::Array scaled = vf::ddim_step(x, vf::Array(3, 0.0), 0.7, 0.3, schedule, 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(scaled[i], cs.alpha / ct.alpha * x[i], 1e-12);
    }
    EXPECT_THROW(vf::ddim_step(x, eps, 0.3, 0.4, schedule, 1), vf::InvalidArgument);
    EXPECT_THROW(vf::ddim_step(x, vf::Array{1.0}, 0.5, 0.4, schedule, 1), vf::DimensionError);
}

TEST(DdimStep, ClipsPredictedX0) {
    const vf::Coefficients at{0.5, std::sqrt(0.75)};
    const vf::Coefficients as{1.0, 0.0};
    // x0 = (2 − 0)/0.5 = 4 → clipped to 1.
    EXPECT_DOUBLE_EQ(vf::ddim_step(vf::Array{2.0}, vf::Array{0.0}, at, as)[0], 1.0);
    EXPECT_DOUBLE_EQ(vf::ddim_step(vf::Array{2.0}, vf::Array{0.0}, at, as, 0.0)[0], 4.0);
}

TEST(GaussianOracle, PointMassAndNoiselessLimit) {
    vf::DenoiserRequest req = scalar_request(5, 1);
    req.coefficients = vf::Coefficients{0.6, 0.8};
    const auto eps = vf::gaussian_oracle_denoise(req, vf::Array{0.25}, 0.0);
    for (std::size_t i = 0; i < 5; ++i) {
        const double x0 = (req.noisy_targets[0][i] - 0.8 * eps[0][i]) / 0.6;
        EXPECT_NEAR(x0, 0.25, 1e-12);
    }
    const double sigma = 1e-7;
    req.coefficients = vf::Coefficients{std::sqrt(1.0 - sigma * sigma), sigma};
    const auto eps2 = vf::gaussian_oracle_denoise(req, vf::Array{0.25}, 0.3);
    for (std::size_t i = 0; i < 5; ++i) {
        const double x = req.noisy_targets[0][i];
        const double x0 = (x - sigma * eps2[0][i]) / req.coefficients.alpha;
        EXPECT_NEAR(x0, x / req.coefficients.alpha, 1e-6);
    }
    req.coefficients = vf::Coefficients{1.0, 0.0};
    EXPECT_THROW(vf::gaussian_oracle_denoise(req, vf::Array{0.25}, 0.3), vf::InvalidArgument);
}

TEST(GaussianOracle, SamplerIsTheExactAffineMap) {
    // Deterministic DDIM with the exact posterior is affine in the starting noise;
    // compare against the map composed independently from the update equations.
    vf::SamplerOptions opts = fast_options();
    opts.clip = 0.0;
    const vf::GaussianOracle oracle(vf::Array{0.3}, 0.2);
    const vf::DenoiserRequest req = scalar_request(64, 2);
    const auto out = vf::ddim_sample(oracle, req, opts);
    const auto [a, b] = vf::testing::gaussian_ddim_transfer(opts.schedule, 50, 1, 0.3, 0.2);
    for (std::size_t i = 0; i < 64; ++i) {
        EXPECT_NEAR(out[0][i], a * req.noisy_targets[0][i] + b, 1e-9);
    }
    // Frozen values of the composed map (50 steps, one target).
    EXPECT_NEAR(a, 0.194584235809, 1e-9);
    EXPECT_NEAR(b, 0.299978798131, 1e-9);
}

TEST(GaussianOracle, PopulationMatchesTarget) {
    // 100 steps: at 50 the exact map shrinks the variance by 5.3% (std by 2.7%).
    vf::SamplerOptions opts = fast_options(100);
    const vf::GaussianOracle oracle(vf::Array{0.3}, 0.2);
    const auto out = vf::ddim_sample(oracle, scalar_request(10000, 3), opts);
    EXPECT_NEAR(mean_of(out[0]), 0.3, 0.02 * 0.3);
    EXPECT_NEAR(variance_of(out[0]), 0.04, 0.05 * 0.04);
}

TEST(GaussianOracle, PerElementMeanAndShape) {
    const vf::GaussianOracle oracle(vf::Array{-0.5, 0.5}, 0.0);
    const auto out = vf::ddim_sample(oracle, scalar_request(2, 4), fast_options(20));
    EXPECT_NEAR(out[0][0], -0.5, 1e-6);
    EXPECT_NEAR(out[0][1], 0.5, 1e-6);
    vf::DenoiserRequest bad = scalar_request(3, 4);
    bad.coefficients = vf::Coefficients{0.6, 0.8};
    EXPECT_THROW(oracle.predict_noise(bad), vf::DimensionError);
}

TEST(DenoiserRequest, ValidateCounts) {
    vf::DenoiserRequest req = scalar_request(4, 1);
    EXPECT_NO_THROW(req.validate());
    req.raymaps.emplace_back();
    EXPECT_THROW(req.validate(), vf::InvalidArgument);
    req = scalar_request(4, 1);
    req.mask[0] = true;
    EXPECT_THROW(req.validate(), vf::InvalidArgument);
}

TEST(Sampler, CfgOneSkipsUnconditionalBranchBitIdentically) {
    const vf::SceneSpec scene = vf::preset_scene("single_sphere", 0);
    const vf::SceneOracle oracle(scene, 0.05, 3);
    const CountingDenoiser counting(oracle);
    const auto obs = observed_view(scene, vf::look_at({3, 0.8, 0}, vf::Vec3::Zero()));
    const std::vector<vf::Pose> targets = vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.8, 5);
    const vf::SamplerOptions opts = fast_options(12, 1.0);
    const auto fast = vf::sample_group(counting, {obs}, targets, opts, 4);
    EXPECT_EQ(counting.conditional.load(), 12);
    EXPECT_EQ(counting.unconditional.load(), 0);

    // Two-branch reference loop written out here.
    vf::DenoiserRequest req;
    req.intrinsics = kK;
    req.target_poses = targets;
    req.step_id = 4;
    req.clean_conditioning.push_back(vf::image_to_model(obs.image));
    req.raymaps.push_back(vf::compute_raymap(obs.pose, kK, obs.pose, opts.raymap_divisor));
    req.mask.push_back(true);
    vf::Rng rng(vf::mix_seed(opts.seed, 4));
    for (const auto &p : targets) {
        vf::Array z(32 * 32 * 3);
        for (double &v : z) {
            v = rng.normal();
        }
        req.noisy_targets.push_back(z);
        req.raymaps.push_back(vf::compute_raymap(p, kK, obs.pose, opts.raymap_divisor));
        req.mask.push_back(false);
    }
    for (int k = opts.steps; k >= 1; --k) {
        req.coefficients = opts.schedule.coefficients(static_cast<double>(k) / opts.steps, 5);
        req.t = static_cast<double>(k) / opts.steps;
        const auto next = opts.schedule.coefficients(static_cast<double>(k - 1) / opts.steps, 5);
        req.conditional = true;
        const auto ec = oracle.predict_noise(req);
        req.conditional = false;
        const auto eu = oracle.predict_noise(req);
        for (std::size_t i = 0; i < 5; ++i) {
            req.noisy_targets[i] =
                vf::ddim_step(req.noisy_targets[i], vf::cfg_combine(ec[i], eu[i], 1.0), req.coefficients, next);
        }
    }
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(fast[i], vf::model_to_image(req.noisy_targets[i], 32, 32));
    }

    const CountingDenoiser guided(oracle);
    vf::sample_group(guided, {obs}, targets, fast_options(12, 3.0), 4);
    EXPECT_EQ(guided.unconditional.load(), 12);
}

TEST(Sampler, SceneOracleReproducesRendersWithThreeConditioningViews) {
    const vf::SceneSpec scene = vf::preset_scene("cluster", 5);
    const vf::SceneOracle oracle(scene, 0.0, 9);
    std::vector<vf::View> cond;
    for (const auto &p : vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.8, 3)) {
        cond.push_back(observed_view(scene, p));
    }
    const auto targets = vf::orbit_path(vf::Vec3::Zero(), 2.8, 0.5, 5);
    const auto images = vf::sample_group(oracle, cond, targets, fast_options(), 0);
    ASSERT_EQ(images.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_LT(max_abs_diff(images[i], vf::render_scene(scene, targets[i], kK)), 1e-3);
    }
    // Same seed, same bits.
    EXPECT_EQ(images, vf::sample_group(oracle, cond, targets, fast_options(), 0));
}

TEST(Sampler, StepCountInsensitiveForExactOracle) {
    const vf::SceneSpec scene = vf::preset_scene("single_sphere", 0);
    const vf::SceneOracle oracle(scene, 0.0, 1);
    const auto obs = observed_view(scene, vf::look_at({3, 0.8, 0}, vf::Vec3::Zero()));
    const auto targets = vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.8, 4);
    const auto a = vf::sample_group(oracle, {obs}, targets, fast_options(50), 0);
    const auto b = vf::sample_group(oracle, {obs}, targets, fast_options(25), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_LT(mean_abs_diff(a[i], b[i]), 1e-2);
    }
}

TEST(Sampler, InconsistencyAmplitude) {
    const vf::SceneSpec scene = vf::preset_scene("cluster", 2);
    const vf::SceneOracle oracle(scene, 0.1, 4);
    const auto obs = observed_view(scene, vf::look_at({3, 0.8, 0}, vf::Vec3::Zero()));
    const auto targets = vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.8, 7);
    const auto images = vf::sample_group(oracle, {obs}, targets, fast_options(), 1);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const double mad = mean_abs_diff(images[i], vf::render_scene(scene, targets[i], kK));
        EXPECT_GT(mad, 0.02);
        EXPECT_LT(mad, 0.2);
    }
}

TEST(Sampler, RaymapsFollowTheFirstConditioningView) {
    const vf::SceneSpec scene = vf::preset_scene("single_sphere", 0);
    const vf::SceneOracle oracle(scene, 0.0, 1);
    const auto a = observed_view(scene, vf::look_at({3, 0.8, 0}, vf::Vec3::Zero()));
    const auto b = observed_view(scene, vf::look_at({0, 0.8, 3}, vf::Vec3::Zero()));
    const auto targets = vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.2, 2);
    const RecordingDenoiser ab(oracle);
    const RecordingDenoiser ba(oracle);
    vf::sample_group(ab, {a, b}, targets, fast_options(2), 0);
    vf::sample_group(ba, {b, a}, targets, fast_options(2), 0);
    // Target raymaps (index 2) are expressed in different reference frames.
    EXPECT_GT((ab.first.raymaps[2].origins[0] - ba.first.raymaps[2].origins[0]).norm(), 1e-3);
    EXPECT_LT(ab.first.raymaps[0].origins[0].norm(), 1e-12);
    EXPECT_EQ(ab.first.mask, (std::vector<bool>{true, true, false, false}));
}

TEST(Sampler, GroupSizeLimit) {
    const vf::SceneSpec scene = vf::preset_scene("single_sphere", 0);
    const vf::SceneOracle oracle(scene, 0.0, 1);
    const auto obs = observed_view(scene, vf::look_at({3, 0.8, 0}, vf::Vec3::Zero()));
    EXPECT_THROW(vf::sample_group(oracle, {obs}, vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.8, 8), fast_options(2)),
                 vf::InvalidArgument);
    EXPECT_THROW(vf::sample_group(oracle, {}, vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.8, 2), fast_options(2)),
                 vf::InvalidArgument);
}

TEST(ExecutePlan, SingleImagePlanAndThreadIndependence) {
    const vf::SceneSpec scene = vf::preset_scene("single_sphere", 0);
    const vf::SceneOracle oracle(scene, 0.1, 6);
    const auto obs = observed_view(scene, vf::look_at({3, 0.8, 0}, vf::Vec3::Zero()));
    const auto targets = vf::dataset_preset(vf::DatasetPreset::single_orbit, {obs.pose});
    const auto plan = vf::build_plan({obs.pose}, targets, vf::SamplingMode::single_image);
    vf::SamplerOptions opts = fast_options(4);
    const auto serial = vf::execute_plan(oracle, plan, {obs}, opts);
    ASSERT_EQ(serial.size(), 81u);
    EXPECT_EQ(serial[0].image, obs.image);
    EXPECT_EQ(serial[0].kind, vf::ViewKind::observed);
    std::size_t anchors = 0;
    for (std::size_t i = 1; i < serial.size(); ++i) {
        anchors += serial[i].kind == vf::ViewKind::anchor ? 1 : 0;
        EXPECT_NO_THROW(serial[i].validate());
        EXPECT_LT((serial[i].pose.center() - targets[i - 1].center()).norm(), 1e-15);
    }
    EXPECT_EQ(anchors, 7u);
    opts.threads = 4;
    const auto parallel = vf::execute_plan(oracle, plan, {obs}, opts);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        ASSERT_EQ(serial[i].image, parallel[i].image) << i;
    }
}

TEST(ExecutePlan, FewViewCountAndMismatch) {
    const vf::SceneSpec scene = vf::preset_scene("single_sphere", 0);
    const vf::SceneOracle oracle(scene, 0.0, 1);
    std::vector<vf::View> obs;
    std::vector<vf::Pose> poses;
    for (const auto &p : vf::orbit_path(vf::Vec3::Zero(), 3.0, 0.8, 3)) {
        obs.push_back(observed_view(scene, p));
        poses.push_back(p);
    }
    const auto targets = vf::orbit_path(vf::Vec3::Zero(), 3.5, 0.2, 12);
    const auto plan = vf::build_plan(poses, targets, vf::SamplingMode::few_view);
    EXPECT_EQ(vf::execute_plan(oracle, plan, obs, fast_options(3)).size(), 15u);
    obs.pop_back();
    EXPECT_THROW(vf::execute_plan(oracle, plan, obs, fast_options(3)), vf::InvalidArgument);
}

TEST(SceneOracle, PerturbationDeterministicAndSmooth) {
    const auto a = vf::perturbation_field(32, 32, 0.1, 5, 3, 1);
    EXPECT_EQ(a, vf::perturbation_field(32, 32, 0.1, 5, 3, 1));
    EXPECT_NE(a, vf::perturbation_field(32, 32, 0.1, 5, 4, 1));
    // Low frequency: neighbouring pixels differ far less than the amplitude.
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x + 1 < 32; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * 32 + x) * 3;
            EXPECT_LT(std::abs(a[i] - a[i + 3]), 0.05);
        }
    }
    const vf::SceneSpec scene = vf::preset_scene("single_sphere", 0);
    vf::DenoiserRequest req;
    req.coefficients = vf::Coefficients{1.0, 0.0};
    req.noisy_targets.push_back(vf::Array(3 * 32 * 32, 0.0));
    EXPECT_THROW(vf::scene_oracle_denoise(req, scene, 0.0, 1), vf::InvalidArgument);
}

TEST(SceneOracle, UnconditionalBranchIsMidGray) {
    const vf::SceneSpec scene = vf::preset_scene("single_sphere", 0);
    vf::DenoiserRequest req = scalar_request(3 * 32 * 32, 8);
    req.coefficients = vf::Coefficients{0.6, 0.8};
    req.conditional = false;
    const auto eps = vf::scene_oracle_denoise(req, scene, 0.0, 1);
    for (std::size_t i = 0; i < eps[0].size(); ++i) {
        const double x0 = (req.noisy_targets[0][i] - 0.8 * eps[0][i]) / 0.6;
        ASSERT_NEAR(x0, 0.0, 1e-12);
    }
}

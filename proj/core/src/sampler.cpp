// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/sampler.hpp"

#include "viewforge/errors.hpp"
#include "viewforge/random.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace viewforge {

void DenoiserRequest::validate() const {
    if (raymaps.size() != view_count()) {
        throw InvalidArgument("denoiser request: " + std::to_string(raymaps.size()) + " raymaps for " +
                              std::to_string(view_count()) + " views");
    }
    if (mask.size() != view_count()) {
        throw InvalidArgument("denoiser request: mask length does not match the view count");
    }
    const auto flagged = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    if (flagged != clean_conditioning.size()) {
        throw InvalidArgument("denoiser request: mask marks " + std::to_string(flagged) +
                              " conditioning views, expected " + std::to_string(clean_conditioning.size()));
    }
}

Array cfg_combine(std::span<const double> eps_cond, std::span<const double> eps_uncond, double w) {
    if (eps_cond.size() != eps_uncond.size()) {
        throw DimensionError("cfg_combine: conditional and unconditional predictions differ in size");
    }
    // The endpoints are exact, so skipping the unconditional branch at w = 1 is bit-identical.
    if (w == 1.0) {
        return Array(eps_cond.begin(), eps_cond.end());
    }
    if (w == 0.0) {
        return Array(eps_uncond.begin(), eps_uncond.end());
    }
    Array out(eps_cond.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = eps_uncond[i] + w * (eps_cond[i] - eps_uncond[i]);
    }
    return out;
}

Array ddim_step(std::span<const double> x_t, std::span<const double> eps_hat, const Coefficients &at,
                const Coefficients &as, double clip) {
    if (x_t.size() != eps_hat.size()) {
        throw DimensionError("ddim_step: sample and noise prediction differ in size");
    }
    Array out(x_t.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double x0 = (x_t[i] - at.sigma * eps_hat[i]) / at.alpha;
        if (clip > 0.0) {
            x0 = std::clamp(x0, -clip, clip);
        }
        out[i] = as.alpha * x0 + as.sigma * eps_hat[i];
    }
    return out;
}

Array ddim_step(std::span<const double> x_t, std::span<const double> eps_hat, double t, double s,
                const NoiseSchedule &schedule, int n_targets, double clip) {
    if (!(0.0 <= s && s <= t && t <= 1.0)) {
        throw InvalidArgument("ddim_step: need 0 <= s <= t <= 1");
    }
    return ddim_step(x_t, eps_hat, schedule.coefficients(t, n_targets), schedule.coefficients(s, n_targets), clip);
}

std::vector<Array> ddim_sample(const Denoiser &denoiser, DenoiserRequest request, const SamplerOptions &opts) {
    if (opts.steps < 1) {
        throw InvalidArgument("sampler: steps must be at least 1");
    }
    request.validate();
    const int n_targets = static_cast<int>(request.noisy_targets.size());
    if (n_targets == 0) {
        return {};
    }
    const bool guided = opts.cfg != 1.0;
    for (int k = opts.steps; k >= 1; --k) {
        const double t = static_cast<double>(k) / opts.steps;
        const double s = static_cast<double>(k - 1) / opts.steps;
        request.t = t;
        request.coefficients = opts.schedule.coefficients(t, n_targets);
        const Coefficients next = opts.schedule.coefficients(s, n_targets);

        request.conditional = true;
        std::vector<Array> eps = denoiser.predict_noise(request);
        if (eps.size() != request.noisy_targets.size()) {
            throw DimensionError("denoiser returned " + std::to_string(eps.size()) + " predictions for " +
                                 std::to_string(n_targets) + " targets");
        }
        if (guided) {
            request.conditional = false;
            const std::vector<Array> eps_uncond = denoiser.predict_noise(request);
            if (eps_uncond.size() != eps.size()) {
                throw DimensionError("unconditional denoiser branch returned the wrong number of predictions");
            }
            for (std::size_t i = 0; i < eps.size(); ++i) {
                eps[i] = cfg_combine(eps[i], eps_uncond[i], opts.cfg);
            }
        }
        for (std::size_t i = 0; i < eps.size(); ++i) {
            request.noisy_targets[i] = ddim_step(request.noisy_targets[i], eps[i], request.coefficients, next, opts.clip);
        }
    }
    return std::move(request.noisy_targets);
}

Array image_to_model(const Image &image) {
    Array out(image.data().size());
    std::transform(image.data().begin(), image.data().end(), out.begin(), [](double p) { return 2.0 * p - 1.0; });
    return out;
}

Image model_to_image(std::span<const double> values, int width, int height) {
    Image image(width, height);
    if (values.size() != image.data().size()) {
        throw DimensionError("model_to_image: " + std::to_string(values.size()) + " values for a " +
                             std::to_string(width) + "x" + std::to_string(height) + " image");
    }
    std::transform(values.begin(), values.end(), image.data().begin(),
                   [](double x) { return std::clamp(0.5 * (x + 1.0), 0.0, 1.0); });
    return image;
}

std::vector<Image> sample_group(const Denoiser &denoiser, const std::vector<View> &cond,
                                const std::vector<Pose> &target_poses, const SamplerOptions &opts,
                                std::uint64_t step_id) {
    if (cond.empty()) {
        throw InvalidArgument("sample_group: at least one conditioning view is required");
    }
    if (cond.size() + target_poses.size() > kMaxViewsPerStep) {
        throw InvalidArgument("sample_group: " + std::to_string(cond.size()) + " conditioning + " +
                              std::to_string(target_poses.size()) + " targets exceeds " +
                              std::to_string(kMaxViewsPerStep) + " views");
    }
    const Intrinsics &k = cond.front().intrinsics;
    const Pose &reference = cond.front().pose;
    for (const View &v : cond) {
        if (v.intrinsics != k) {
            throw InvalidArgument("sample_group: conditioning views must share intrinsics");
        }
    }

    DenoiserRequest request;
    request.intrinsics = k;
    request.target_poses = target_poses;
    request.step_id = step_id;
    for (const View &v : cond) {
        request.clean_conditioning.push_back(image_to_model(v.image));
        request.raymaps.push_back(compute_raymap(v.pose, k, reference, opts.raymap_divisor));
        request.mask.push_back(true);
    }
    Rng rng(mix_seed(opts.seed, step_id));
    const std::size_t values = static_cast<std::size_t>(k.width) * k.height * 3;
    for (const Pose &p : target_poses) {
        Array noise(values);
        for (double &x : noise) {
            x = rng.normal();
        }
        request.noisy_targets.push_back(std::move(noise));
        request.raymaps.push_back(compute_raymap(p, k, reference, opts.raymap_divisor));
        request.mask.push_back(false);
    }

    const std::vector<Array> samples = ddim_sample(denoiser, std::move(request), opts);
    std::vector<Image> images;
    images.reserve(samples.size());
    for (const Array &s : samples) {
        images.push_back(model_to_image(s, k.width, k.height));
    }
    return images;
}

std::vector<View> execute_plan(const Denoiser &denoiser, const SamplingPlan &plan, const std::vector<View> &observed,
                               const SamplerOptions &opts) {
    if (observed.size() != plan.observed_ids.size()) {
        throw InvalidArgument("execute_plan: plan expects " + std::to_string(plan.observed_ids.size()) +
                              " observed views, got " + std::to_string(observed.size()));
    }
    plan.validate();
    for (const View &v : observed) {
        v.validate();
    }

    const std::size_t total = observed.size() + plan.pose_table.size();
    std::vector<View> views(total);
    std::vector<bool> ready(total, false);
    for (std::size_t i = 0; i < observed.size(); ++i) {
        views[i] = observed[i];
        ready[i] = true;
    }

    auto run_step = [&](std::size_t step_index) {
        const PlanStep &step = plan.steps[step_index];
        std::vector<View> cond;
        for (std::size_t id : step.conditioning_ids) {
            cond.push_back(views[id]);
        }
        std::vector<Pose> poses;
        for (std::size_t id : step.target_ids) {
            poses.push_back(plan.target_pose(id));
        }
        const auto images = sample_group(denoiser, cond, poses, opts, step_index);
        const ViewKind kind = step.stage == StepStage::anchor ? ViewKind::anchor : ViewKind::generated;
        for (std::size_t j = 0; j < step.target_ids.size(); ++j) {
            View &v = views[step.target_ids[j]];
            v.image = images[j];
            v.pose = poses[j];
            v.intrinsics = cond.front().intrinsics;
            v.kind = kind;
        }
    };

    // Steps are processed in waves; a step joins the current wave once all of its
    // conditioning views exist. Group steps of a plan form a single wave.
    std::vector<bool> done(plan.steps.size(), false);
    std::size_t remaining = plan.steps.size();
    while (remaining > 0) {
        std::vector<std::size_t> wave;
        for (std::size_t s = 0; s < plan.steps.size(); ++s) {
            if (done[s]) {
                continue;
            }
            const auto &ids = plan.steps[s].conditioning_ids;
            if (std::all_of(ids.begin(), ids.end(), [&](std::size_t id) { return ready[id]; })) {
                wave.push_back(s);
            }
        }
        if (wave.empty()) {
            throw InvalidArgument("execute_plan: plan has unsatisfiable conditioning dependencies");
        }

        const auto workers = static_cast<std::size_t>(std::max(1, opts.threads));
        if (workers == 1 || wave.size() == 1) {
            for (std::size_t s : wave) {
                run_step(s);
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::exception_ptr failure;
            std::mutex failure_mutex;
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < std::min(workers, wave.size()); ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < wave.size(); i = next++) {
                        try {
                            run_step(wave[i]);
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) {
                                failure = std::current_exception();
                            }
                        }
                    }
                });
            }
            for (auto &th : pool) {
                th.join();
            }
            if (failure) {
                std::rethrow_exception(failure);
            }
        }
        for (std::size_t s : wave) {
            done[s] = true;
            for (std::size_t id : plan.steps[s].target_ids) {
                ready[id] = true;
            }
            --remaining;
        }
    }
    return views;
}

} // namespace viewforge

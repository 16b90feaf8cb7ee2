// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/reconstruction.hpp"

#include "viewforge/errors.hpp"
#include "viewforge/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

namespace viewforge {

namespace {

constexpr int kProxyScales = 3;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.99;
constexpr double kAdamEpsilon = 1e-8;

struct Level {
    int width = 0;
    int height = 0;
    std::vector<double> values; // interleaved RGB
};

Level downsample(const Level &in) {
    Level out;
    out.width = in.width / 2;
    out.height = in.height / 2;
    out.values.assign(static_cast<std::size_t>(out.width) * out.height * 3, 0.0);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double sum = 0.0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        sum += in.values[(static_cast<std::size_t>(2 * y + dy) * in.width + 2 * x + dx) * 3 + c];
                    }
                }
                out.values[(static_cast<std::size_t>(y) * out.width + x) * 3 + c] = 0.25 * sum;
            }
        }
    }
    return out;
}

// Runs fn(begin, end) over [0, n) split into contiguous chunks.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn &&fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n < 2 * workers) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        pool.emplace_back([&fn, begin, end = std::min(n, begin + chunk)] { fn(begin, end); });
    }
    for (auto &t : pool) {
        t.join();
    }
}

// Adds the total-variation penalty over axis-adjacent voxel pairs; returns its value.
double add_total_variation(const VoxelGrid &grid, double weight, std::span<double> gradient) {
    if (weight <= 0.0) {
        return 0.0;
    }
    const auto &res = grid.resolution();
    const auto params = grid.params();
    constexpr int P = VoxelGrid::kParamsPerVoxel;
    const std::size_t pairs = static_cast<std::size_t>(res[0] - 1) * res[1] * res[2] +
                              static_cast<std::size_t>(res[0]) * (res[1] - 1) * res[2] +
                              static_cast<std::size_t>(res[0]) * res[1] * (res[2] - 1);
    const double scale = weight / static_cast<double>(pairs * P);
    const std::size_t strides[3] = {1, static_cast<std::size_t>(res[0]), static_cast<std::size_t>(res[0]) * res[1]};
    double total = 0.0;
    for (int z = 0; z < res[2]; ++z) {
        for (int y = 0; y < res[1]; ++y) {
            for (int x = 0; x < res[0]; ++x) {
                const std::size_t v = grid.voxel_index(x, y, z);
                const bool has_next[3] = {x + 1 < res[0], y + 1 < res[1], z + 1 < res[2]};
                for (int a = 0; a < 3; ++a) {
                    if (!has_next[a]) {
                        continue;
                    }
                    const std::size_t u = v + strides[a];
                    for (int c = 0; c < P; ++c) {
                        const double d = params[v * P + c] - params[u * P + c];
                        total += d * d;
                        gradient[v * P + c] += 2.0 * scale * d;
                        gradient[u * P + c] -= 2.0 * scale * d;
                    }
                }
            }
        }
    }
    return scale * total;
}

} // namespace

void LossConfig::validate() const {
    if (!(lr_start > lr_end && lr_end > 0.0)) {
        throw InvalidArgument("loss config: need lr_start > lr_end > 0");
    }
    if (!(b_max >= 0.0)) {
        throw InvalidArgument("loss config: b_max must be non-negative");
    }
    if (patch < 1) {
        throw InvalidArgument("loss config: patch must be at least 1");
    }
    if (iterations < 1) {
        throw InvalidArgument("loss config: iterations must be at least 1");
    }
    if (grid_resolution < 2 || n_samples < 1 || patches_per_batch < 1) {
        throw InvalidArgument("loss config: grid_resolution >= 2, n_samples >= 1 and patches_per_batch >= 1 required");
    }
    if (!(density_lr_scale > 0.0) || !(color_lr_scale > 0.0)) {
        throw InvalidArgument("loss config: learning-rate scales must be positive");
    }
    if (!(perceptual_weight >= 0.0) || !(tv_weight >= 0.0)) {
        throw InvalidArgument("loss config: loss weights must be non-negative");
    }
}

double distance_weight(double s, double b) {
    if (!(s >= 0.0) || !(b >= 0.0)) {
        throw InvalidArgument("distance_weight: s and b must be non-negative");
    }
    return std::exp(-b * s * s);
}

AnnealState anneal_schedules(int iter, int total, const LossConfig &cfg) {
    if (total < 1 || iter < 0 || iter > total) {
        throw InvalidArgument("anneal_schedules: need 0 <= iter <= total and total >= 1");
    }
    const double frac = static_cast<double>(iter) / total;
    AnnealState s;
    s.b = cfg.b_max * frac;
    s.global_gen_weight = 1.0 + (cfg.global_anneal_end - 1.0) * frac;
    s.lr = iter == 0 ? cfg.lr_start : iter == total ? cfg.lr_end : cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, frac);
    return s;
}

double perceptual_proxy(std::span<const double> a, std::span<const double> b, int width, int height,
                        std::span<double> grad_a) {
    const std::size_t n = static_cast<std::size_t>(width) * height * 3;
    if (width < 1 || height < 1 || a.size() != n || b.size() != n) {
        throw DimensionError("perceptual_proxy: patches must both hold width*height*3 values");
    }
    if (!grad_a.empty() && grad_a.size() != n) {
        throw DimensionError("perceptual_proxy: gradient buffer has the wrong size");
    }

    std::vector<Level> levels;
    Level base{width, height, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        base.values[i] = a[i] - b[i];
    }
    levels.push_back(std::move(base));
    while (static_cast<int>(levels.size()) < kProxyScales && levels.back().width >= 4 && levels.back().height >= 4) {
        levels.push_back(downsample(levels.back()));
    }
    if (std::min(levels.front().width, levels.front().height) < 2) {
        if (!grad_a.empty()) {
            std::fill(grad_a.begin(), grad_a.end(), 0.0);
        }
        return 0.0;
    }

    const double inv_scales = 1.0 / static_cast<double>(levels.size());
    double value = 0.0;
    std::vector<std::vector<double>> grads(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const Level &L = levels[k];
        const double nh = static_cast<double>(L.width - 1) * L.height * 3;
        const double nv = static_cast<double>(L.width) * (L.height - 1) * 3;
        auto &g = grads[k];
        g.assign(L.values.size(), 0.0);
        auto at = [&](int x, int y, int c) { return (static_cast<std::size_t>(y) * L.width + x) * 3 + c; };
        double sh = 0.0;
        double sv = 0.0;
        for (int y = 0; y < L.height; ++y) {
            for (int x = 0; x < L.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    if (x + 1 < L.width) {
                        const double d = L.values[at(x + 1, y, c)] - L.values[at(x, y, c)];
                        sh += d * d;
                        g[at(x + 1, y, c)] += 2.0 * d / nh * inv_scales;
                        g[at(x, y, c)] -= 2.0 * d / nh * inv_scales;
                    }
                    if (y + 1 < L.height) {
                        const double d = L.values[at(x, y + 1, c)] - L.values[at(x, y, c)];
                        sv += d * d;
                        g[at(x, y + 1, c)] += 2.0 * d / nv * inv_scales;
                        g[at(x, y, c)] -= 2.0 * d / nv * inv_scales;
                    }
                }
            }
        }
        value += (sh / nh + sv / nv) * inv_scales;
    }

    if (!grad_a.empty()) {
        // Push coarse gradients back through the box filters.
        for (std::size_t k = levels.size() - 1; k > 0; --k) {
            const Level &fine = levels[k - 1];
            const Level &coarse = levels[k];
            for (int y = 0; y < coarse.height; ++y) {
                for (int x = 0; x < coarse.width; ++x) {
                    for (int c = 0; c < 3; ++c) {
                        const double g = 0.25 * grads[k][(static_cast<std::size_t>(y) * coarse.width + x) * 3 + c];
                        for (int dy = 0; dy < 2; ++dy) {
                            for (int dx = 0; dx < 2; ++dx) {
                                grads[k - 1][(static_cast<std::size_t>(2 * y + dy) * fine.width + 2 * x + dx) * 3 + c] += g;
                            }
                        }
                    }
                }
            }
        }
        std::copy(grads[0].begin(), grads[0].end(), grad_a.begin());
    }
    return value;
}

double perceptual_proxy(const Image &a, const Image &b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionError("perceptual_proxy: patch shapes differ");
    }
    return perceptual_proxy(a.data(), b.data(), a.width(), a.height());
}

std::vector<double> observed_distances(const std::vector<View> &views, double normalizer) {
    if (!(normalizer > 0.0)) {
        throw InvalidArgument("observed_distances: normalizer must be positive");
    }
    std::vector<Vec3> observed;
    for (const View &v : views) {
        if (v.kind == ViewKind::observed) {
            observed.push_back(v.pose.translation);
        }
    }
    std::vector<double> out;
    out.reserve(views.size());
    for (const View &v : views) {
        if (v.kind == ViewKind::observed) {
            out.push_back(0.0);
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3 &o : observed) {
            best = std::min(best, (v.pose.translation - o).norm());
        }
        out.push_back(best / normalizer);
    }
    return out;
}

ReconstructionResult reconstruct(const std::vector<View> &views, const Box &scene_bounds, const LossConfig &cfg,
                                 std::uint64_t seed) {
    cfg.validate();
    if (std::none_of(views.begin(), views.end(), [](const View &v) { return v.kind == ViewKind::observed; })) {
        throw InvalidArgument("reconstruct: at least one observed view is required");
    }
    for (const View &v : views) {
        v.validate();
        if (v.intrinsics.width < cfg.patch || v.intrinsics.height < cfg.patch) {
            throw DimensionError("reconstruct: patch size " + std::to_string(cfg.patch) + " exceeds a " +
                                 std::to_string(v.intrinsics.width) + "x" + std::to_string(v.intrinsics.height) +
                                 " view");
        }
    }

    const int r = cfg.grid_resolution;
    ReconstructionResult result{VoxelGrid({r, r, r}, scene_bounds, cfg.background), {}, {}};
    VoxelGrid &grid = result.grid;
    const std::vector<double> distances = observed_distances(views, scene_bounds.diagonal());

    const std::size_t param_count = grid.params().size();
    std::vector<double> gradient(param_count);
    std::vector<double> moment1(param_count, 0.0);
    std::vector<double> moment2(param_count, 0.0);

    const int patch = cfg.patch;
    const std::size_t rays_per_patch = static_cast<std::size_t>(patch) * patch;
    const std::size_t ray_count = rays_per_patch * cfg.patches_per_batch;
    std::vector<RayTape> tapes(ray_count);
    std::vector<bool> hit(ray_count);
    std::vector<Ray> rays(ray_count);
    std::vector<double> rendered(ray_count * 3);
    std::vector<double> target(ray_count * 3);
    std::vector<double> upstream(ray_count * 3);
    std::vector<double> proxy_grad(rays_per_patch * 3);
    struct PatchChoice {
        std::size_t view;
        int x0;
        int y0;
    };
    std::vector<PatchChoice> choices(cfg.patches_per_batch);

    Rng rng(mix_seed(seed, 0x5eedu));
    result.loss_history.reserve(cfg.iterations);
    result.photometric_history.reserve(cfg.iterations);
    const int schedule_span = std::max(1, cfg.iterations - 1);

    for (int it = 0; it < cfg.iterations; ++it) {
        const AnnealState anneal = anneal_schedules(std::min(it, schedule_span), schedule_span, cfg);

        for (auto &choice : choices) {
            choice.view = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(views.size()) - 1));
            const View &v = views[choice.view];
            // Origins drawn half a patch past each border and clamped, so edge pixels
            // are not starved the way a plain uniform origin would starve them.
            auto origin = [&](int extent) {
                const auto o = rng.integer(-patch / 2, extent - patch / 2);
                return static_cast<int>(std::clamp<std::int64_t>(o, 0, extent - patch));
            };
            choice.x0 = origin(v.intrinsics.width);
            choice.y0 = origin(v.intrinsics.height);
        }
        for (std::size_t p = 0; p < choices.size(); ++p) {
            const View &v = views[choices[p].view];
            for (int py = 0; py < patch; ++py) {
                for (int px = 0; px < patch; ++px) {
                    const std::size_t i = p * rays_per_patch + static_cast<std::size_t>(py) * patch + px;
                    const int x = choices[p].x0 + px;
                    const int y = choices[p].y0 + py;
                    rays[i] = pixel_ray(v.pose, v.intrinsics, x + 0.5, y + 0.5);
                    for (int c = 0; c < 3; ++c) {
                        target[i * 3 + c] = v.image.at(x, y, c);
                    }
                }
            }
        }

        parallel_for(ray_count, cfg.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                Vec3 rgb = grid.background();
                const auto span = grid.bounds().intersect(rays[i].origin, rays[i].direction);
                hit[i] = span.has_value();
                if (span) {
                    rgb = tapes[i].forward(grid, rays[i].origin, rays[i].direction, span->first, span->second,
                                           cfg.n_samples).color;
                }
                for (int c = 0; c < 3; ++c) {
                    rendered[i * 3 + c] = rgb[c];
                }
            }
        });

        double loss = 0.0;
        double photometric = 0.0;
        const double inv_patches = 1.0 / static_cast<double>(choices.size());
        const double inv_values = 1.0 / static_cast<double>(rays_per_patch * 3);
        for (std::size_t p = 0; p < choices.size(); ++p) {
            const View &v = views[choices[p].view];
            const double weight =
                v.kind == ViewKind::observed
                    ? 1.0
                    : distance_weight(distances[choices[p].view], anneal.b) * anneal.global_gen_weight;
            const std::size_t off = p * rays_per_patch * 3;
            const std::span<const double> render_patch(rendered.data() + off, rays_per_patch * 3);
            const std::span<const double> target_patch(target.data() + off, rays_per_patch * 3);
            double mse = 0.0;
            for (std::size_t k = 0; k < rays_per_patch * 3; ++k) {
                const double d = render_patch[k] - target_patch[k];
                mse += d * d;
                upstream[off + k] = 2.0 * d * inv_values;
            }
            mse *= inv_values;
            double proxy = 0.0;
            if (cfg.perceptual_weight > 0.0) {
                proxy = perceptual_proxy(render_patch, target_patch, patch, patch, proxy_grad);
                for (std::size_t k = 0; k < rays_per_patch * 3; ++k) {
                    upstream[off + k] += cfg.perceptual_weight * proxy_grad[k];
                }
            }
            for (std::size_t k = 0; k < rays_per_patch * 3; ++k) {
                upstream[off + k] *= weight * inv_patches;
            }
            loss += weight * (mse + cfg.perceptual_weight * proxy) * inv_patches;
            photometric += mse * inv_patches;
        }

        std::fill(gradient.begin(), gradient.end(), 0.0);
        // Fixed ray order keeps the accumulation bit-identical for any thread count.
        for (std::size_t i = 0; i < ray_count; ++i) {
            if (hit[i]) {
                tapes[i].backward(grid, Vec3(upstream[i * 3], upstream[i * 3 + 1], upstream[i * 3 + 2]), gradient);
            }
        }
        loss += add_total_variation(grid, cfg.tv_weight, gradient);

        const double step = it + 1.0;
        const double correction1 = 1.0 - std::pow(kAdamBeta1, step);
        const double correction2 = 1.0 - std::pow(kAdamBeta2, step);
        auto params = grid.params();
        for (std::size_t k = 0; k < param_count; ++k) {
            const double g = gradient[k];
            moment1[k] = kAdamBeta1 * moment1[k] + (1.0 - kAdamBeta1) * g;
            moment2[k] = kAdamBeta2 * moment2[k] + (1.0 - kAdamBeta2) * g * g;
            const double lr = anneal.lr * (k % VoxelGrid::kParamsPerVoxel == 0 ? cfg.density_lr_scale : cfg.color_lr_scale);
            params[k] -= lr * (moment1[k] / correction1) / (std::sqrt(moment2[k] / correction2) + kAdamEpsilon);
        }

        result.loss_history.push_back(loss);
        result.photometric_history.push_back(photometric);
    }
    grid.round_to_float();
    return result;
}

} // namespace viewforge

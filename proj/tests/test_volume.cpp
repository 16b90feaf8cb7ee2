// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"
#include "support/reference.hpp"

#include "viewforge/checkpoint.hpp"
#include "viewforge/errors.hpp"
#include "viewforge/volume.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace vf = viewforge;

namespace {

vf::VoxelGrid random_grid(vf::Rng &rng, int n = 8) {
    vf::VoxelGrid grid({n, n, n}, vf::Box{vf::Vec3::Constant(-1.0), vf::Vec3::Constant(1.0)}, vf::Vec3(0.2, 0.3, 0.4));
    for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
        grid.params()[v * 4] = rng.uniform(-4.0, 1.0);
        for (int c = 1; c < 4; ++c) {
            grid.params()[v * 4 + c] = rng.uniform(-3.0, 3.0);
        }
    }
    return grid;
}

struct TestRay {
    vf::Vec3 origin;
    vf::Vec3 direction;
    double near;
    double far;
};

TestRay random_ray(vf::Rng &rng, const vf::Box &box) {
    for (;;) {
        vf::Vec3 o(rng.normal(), rng.normal(), rng.normal());
        o = o.normalized() * 3.0;
        const vf::Vec3 target = vf::testing::random_vec(rng, -0.7, 0.7);
        const vf::Vec3 d = (target - o).normalized();
        if (const auto span = box.intersect(o, d)) {
            return {o, d, span->first, span->second};
        }
    }
}

double color_dot(const vf::VoxelGrid &grid, const TestRay &r, int n, const vf::Vec3 &up) {
    return up.dot(vf::volume_render(grid, r.origin, r.direction, r.near, r.far, n).color);
}

} // namespace

TEST(Activations, SoftplusSigmoid) {
    EXPECT_NEAR(vf::softplus(0.0), std::log(2.0), 1e-15);
    EXPECT_NEAR(vf::softplus(50.0), 50.0, 1e-12);
    EXPECT_GE(vf::softplus(-800.0), 0.0);
    EXPECT_NEAR(vf::sigmoid(0.0), 0.5, 1e-15);
    EXPECT_NEAR(vf::sigmoid(3.0) + vf::sigmoid(-3.0), 1.0, 1e-15);
}

TEST(Box, Intersect) {
    const vf::Box box;
    const auto hit = box.intersect({-3, 0, 0}, {1, 0, 0});
    ASSERT_TRUE(hit);
    EXPECT_DOUBLE_EQ(hit->first, 2.0);
    EXPECT_DOUBLE_EQ(hit->second, 4.0);
    EXPECT_FALSE(box.intersect({-3, 2, 0}, {1, 0, 0}));
    const auto inside = box.intersect({0, 0, 0}, {0, 0, 1});
    ASSERT_TRUE(inside);
    EXPECT_EQ(inside->first, 0.0);
    EXPECT_NEAR(box.diagonal(), 2.0 * std::sqrt(3.0), 1e-15);
}

TEST(VoxelGrid, ActivatedFieldsInRange) {
    vf::Rng rng(51);
    const vf::VoxelGrid grid = random_grid(rng, 5);
    for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
        EXPECT_GE(grid.density(v), 0.0);
        const vf::Vec3 c = grid.color(v);
        EXPECT_TRUE((c.array() >= 0.0).all() && (c.array() <= 1.0).all());
    }
    EXPECT_THROW(vf::VoxelGrid({0, 4, 4}, vf::Box{}), vf::InvalidArgument);
    EXPECT_THROW(vf::VoxelGrid({4, 4, 4}, vf::Box{vf::Vec3::Constant(1.0), vf::Vec3::Constant(-1.0)}),
                 vf::InvalidArgument);
}

TEST(Locate, MatchesTentWeights) {
    vf::Rng rng(52);
    const vf::VoxelGrid grid = random_grid(rng, 6);
    for (int i = 0; i < 200; ++i) {
        const vf::Vec3 p = vf::testing::random_vec(rng, -1.0, 1.0);
        const vf::Stencil s = vf::locate(grid, p);
        ASSERT_TRUE(s.inside);
        double wsum = 0.0;
        double value = 0.0;
        for (int k = 0; k < 8; ++k) {
            wsum += s.weight[k];
            value += s.weight[k] * grid.params()[s.voxel[k] * 4 + 2];
        }
        EXPECT_NEAR(wsum, 1.0, 1e-12);
        EXPECT_NEAR(value, vf::testing::reference_raw(grid, p, 2), 1e-12);
    }
    EXPECT_FALSE(vf::locate(grid, {1.5, 0, 0}).inside);
}

TEST(VolumeRender, EmptyMediumShowsBackground) {
    vf::VoxelGrid grid({4, 4, 4}, vf::Box{}, vf::Vec3(0.2, 0.5, 0.7), 25.0, -1000.0);
    const auto r = vf::volume_render(grid, {-3, 0.1, 0.2}, {1, 0, 0}, 2.0, 4.0, 64);
    EXPECT_EQ(r.transmittance, 1.0);
    EXPECT_LT((r.color - vf::Vec3(0.2, 0.5, 0.7)).norm(), 1e-15);
}

TEST(VolumeRender, SingleSampleOpacityIsClosedForm) {
    // σ·δ = ln 2 with δ = 1 → α = 1/2.
    const double raw = std::log(std::expm1(std::log(2.0) / 25.0));
    vf::VoxelGrid grid({3, 3, 3}, vf::Box{}, vf::Vec3::Zero(), 25.0, raw, 0.0);
    const auto r = vf::volume_render(grid, {-1.5, 0, 0}, {1, 0, 0}, 1.0, 2.0, 1);
    EXPECT_NEAR(r.opacity, 0.5, 1e-12);
    EXPECT_NEAR(r.transmittance, 0.5, 1e-12);
    EXPECT_NEAR(r.color.x(), 0.25, 1e-12); // sigmoid(0) · α
}

TEST(VolumeRender, OpaqueLimit) {
    vf::VoxelGrid grid({4, 4, 4}, vf::Box{}, vf::Vec3(1, 1, 1), 25.0, -1000.0);
    // Make the x = 0 slab opaque and red.
    for (int z = 0; z < 4; ++z) {
        for (int y = 0; y < 4; ++y) {
            const std::size_t v = grid.voxel_index(0, y, z);
            grid.params()[v * 4] = 40.0;
            grid.params()[v * 4 + 1] = 30.0;
            grid.params()[v * 4 + 2] = -30.0;
            grid.params()[v * 4 + 3] = -30.0;
        }
    }
    const auto r = vf::volume_render(grid, {-3, 0, 0}, {1, 0, 0}, 2.0, 4.0, 256);
    EXPECT_LT(r.transmittance, 1e-12);
    EXPECT_NEAR(r.color.x(), 1.0, 1e-9);
    EXPECT_NEAR(r.color.y(), 0.0, 1e-9);
}

TEST(VolumeRender, MatchesReferenceQuadratureAndConservesEnergy) {
    vf::Rng rng(53);
    for (int g = 0; g < 4; ++g) {
        const vf::VoxelGrid grid = random_grid(rng, 5);
        for (int i = 0; i < 10; ++i) {
            const TestRay ray = random_ray(rng, grid.bounds());
            const auto got = vf::volume_render(grid, ray.origin, ray.direction, ray.near, ray.far, 48);
            const auto ref = vf::testing::reference_render(grid, ray.origin, ray.direction, ray.near, ray.far, 48);
            EXPECT_LT((got.color - ref.color).norm(), 1e-12);
            EXPECT_NEAR(got.transmittance, ref.transmittance, 1e-12);
            EXPECT_NEAR(got.opacity + got.transmittance, 1.0, 1e-9);
        }
    }
}

TEST(RenderGradients, MatchCentralDifferences) {
    vf::Rng rng(54);
    const int n = 32;
    const double h = 1e-4;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        vf::VoxelGrid grid = random_grid(rng, 8);
        const TestRay ray = random_ray(rng, grid.bounds());
        const vf::Vec3 up(rng.normal(), rng.normal(), rng.normal());
        std::vector<double> grad(grid.params().size(), 0.0);
        vf::render_gradients(grid, ray.origin, ray.direction, ray.near, ray.far, n, up, grad);
        for (std::size_t p = 0; p < grad.size(); ++p) {
            const double keep = grid.params()[p];
            grid.params()[p] = keep + h;
            const double plus = color_dot(grid, ray, n, up);
            grid.params()[p] = keep - h;
            const double minus = color_dot(grid, ray, n, up);
            grid.params()[p] = keep;
            const double fd = (plus - minus) / (2.0 * h);
            const double scale = std::max({std::abs(fd), std::abs(grad[p]), 1e-6});
            const double rel = std::abs(fd - grad[p]) / scale;
            worst = std::max(worst, rel);
            ASSERT_LT(rel, 1e-4) << "trial " << trial << " param " << p << " fd " << fd << " analytic " << grad[p];
        }
    }
    RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(RenderGradients, ZeroUpstreamAndLocality) {
    vf::Rng rng(55);
    const vf::VoxelGrid grid = random_grid(rng, 8);
    std::vector<double> grad(grid.params().size(), 0.0);
    vf::render_gradients(grid, {-3, -0.1, 0.05}, {1, 0, 0}, 2.0, 4.0, 64, vf::Vec3::Zero(), grad);
    for (double g : grad) {
        EXPECT_EQ(g, 0.0);
    }
    // An axis-aligned ray near y = -0.1, z = 0.05 touches only the y/z voxel rows around it.
    vf::render_gradients(grid, {-3, -0.1, 0.05}, {1, 0, 0}, 2.0, 4.0, 64, vf::Vec3(1, 1, 1), grad);
    for (int z = 0; z < 8; ++z) {
        for (int y = 0; y < 8; ++y) {
            const bool near_row = (y == 3 || y == 4) && (z == 3 || z == 4);
            for (int x = 0; x < 8; ++x) {
                const std::size_t v = grid.voxel_index(x, y, z);
                if (!near_row) {
                    for (int c = 0; c < 4; ++c) {
                        ASSERT_EQ(grad[v * 4 + c], 0.0);
                    }
                }
            }
        }
    }
}

TEST(RayTape, MatchesRenderGradients) {
    vf::Rng rng(56);
    const vf::VoxelGrid grid = random_grid(rng, 6);
    const TestRay ray = random_ray(rng, grid.bounds());
    std::vector<double> a(grid.params().size(), 0.0);
    std::vector<double> b(grid.params().size(), 0.0);
    vf::render_gradients(grid, ray.origin, ray.direction, ray.near, ray.far, 40, vf::Vec3(0.3, -1, 2), a);
    vf::RayTape tape;
    tape.forward(grid, ray.origin, ray.direction, ray.near, ray.far, 40);
    tape.backward(grid, vf::Vec3(0.3, -1, 2), b);
    EXPECT_EQ(a, b);
    std::vector<double> wrong(3, 0.0);
    EXPECT_THROW(tape.backward(grid, vf::Vec3(1, 1, 1), wrong), vf::DimensionError);
}

TEST(RenderImage, MissedRaysSeeBackground) {
    vf::VoxelGrid grid({4, 4, 4}, vf::Box{vf::Vec3::Constant(-0.2), vf::Vec3::Constant(0.2)}, vf::Vec3(0.1, 0.6, 0.9));
    const vf::Intrinsics k = vf::Intrinsics::from_fov(16, 16, 60.0);
    const vf::Image img = vf::render_image(grid, vf::look_at({0, 0, -3}, vf::Vec3::Zero()), k, 32);
    EXPECT_NEAR(img.at(0, 0, 1), 0.6, 1e-15);
    EXPECT_TRUE(img.in_unit_range());
}

TEST(Checkpoint, RoundTripAtFloatPrecision) {
    vf::Rng rng(57);
    vf::VoxelGrid grid = random_grid(rng, 5);
    grid.round_to_float();
    std::stringstream buffer;
    vf::write_checkpoint(buffer, grid);
    const vf::VoxelGrid back = vf::read_checkpoint(buffer);
    EXPECT_EQ(back.resolution(), grid.resolution());
    EXPECT_EQ(back.bounds().min, grid.bounds().min);
    EXPECT_EQ(back.bounds().max, grid.bounds().max);
    EXPECT_EQ(back.background(), grid.background());
    EXPECT_EQ(back.density_scale(), grid.density_scale());
    EXPECT_TRUE(std::equal(back.params().begin(), back.params().end(), grid.params().begin()));
}

TEST(Checkpoint, LayoutIsLittleEndianWithSeparateArrays) {
    vf::VoxelGrid grid({2, 2, 2}, vf::Box{}, vf::Vec3::Zero(), 25.0, -2.0, 0.5);
    std::stringstream buffer;
    vf::write_checkpoint(buffer, grid);
    const std::string bytes = buffer.str();
    const std::size_t header = 8 + 3 * 4 + 10 * 8;
    ASSERT_EQ(bytes.size(), header + 8 * 4 + 24 * 4);
    EXPECT_EQ(bytes.substr(0, 8), "VFVOXEL1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2u);
    EXPECT_EQ(bytes[9], 0);
    float first_density = 0.0F;
    float first_color = 0.0F;
    const unsigned char d[4] = {static_cast<unsigned char>(bytes[header]), static_cast<unsigned char>(bytes[header + 1]),
                                static_cast<unsigned char>(bytes[header + 2]),
                                static_cast<unsigned char>(bytes[header + 3])};
    const std::uint32_t dbits = d[0] | (d[1] << 8) | (d[2] << 16) | (static_cast<std::uint32_t>(d[3]) << 24);
    std::memcpy(&first_density, &dbits, 4);
    const std::size_t ci = header + 8 * 4;
    const unsigned char c[4] = {static_cast<unsigned char>(bytes[ci]), static_cast<unsigned char>(bytes[ci + 1]),
                                static_cast<unsigned char>(bytes[ci + 2]), static_cast<unsigned char>(bytes[ci + 3])};
    const std::uint32_t cbits = c[0] | (c[1] << 8) | (c[2] << 16) | (static_cast<std::uint32_t>(c[3]) << 24);
    std::memcpy(&first_color, &cbits, 4);
    EXPECT_EQ(first_density, -2.0F);
    EXPECT_EQ(first_color, 0.5F);
}

TEST(Checkpoint, RejectsCorruptInput) {
    vf::VoxelGrid grid({2, 2, 2}, vf::Box{});
    std::stringstream buffer;
    vf::write_checkpoint(buffer, grid);
    std::string bytes = buffer.str();

    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(vf::read_checkpoint(truncated), vf::ParseError);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream magic(bad_magic);
    try {
        vf::read_checkpoint(magic);
        FAIL();
    } catch (const vf::ParseError &e) {
        EXPECT_EQ(e.where(), "checkpoint:magic");
    }

    std::string bad_res = bytes;
    bad_res[8] = 1; // nx = 1 is below the minimum of 2
    std::stringstream res(bad_res);
    EXPECT_THROW(vf::read_checkpoint(res), vf::ParseError);

    EXPECT_THROW(vf::read_checkpoint(std::filesystem::path("/nonexistent/grid.ckpt")), vf::Error);
}

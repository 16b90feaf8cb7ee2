// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

// Small generators shared by the unit and acceptance tests.

#pragma once

#include "viewforge/geometry.hpp"
#include "viewforge/random.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace viewforge::testing {

inline Vec3 random_vec(Rng &rng, double lo, double hi) {
    return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

/// Uniformly random rotation from a normalised Gaussian quaternion.
inline Mat3 random_rotation(Rng &rng) {
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    return q.toRotationMatrix();
}

inline Pose random_pose(Rng &rng, double extent = 3.0) {
    return {random_rotation(rng), random_vec(rng, -extent, extent)};
}

/// Fresh empty directory under the system temp dir, unique per test name.
inline std::filesystem::path scratch_dir(const std::string &name) {
    const auto dir = std::filesystem::temp_directory_path() / ("viewforge_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace viewforge::testing

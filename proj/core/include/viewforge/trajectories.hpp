// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/geometry.hpp"
#include "viewforge/scene.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace viewforge {

// Azimuth convention: orbits and spirals circle the world-up (+y) axis. Azimuth 0
// lies on +x and increases toward +z, so a unit orbit visits (1,0,0), (0,0,1),
// (-1,0,0), (0,0,-1). "Height" is the offset along +y.

/// n poses equally spaced in azimuth, each looking at `center`.
std::vector<Pose> orbit_path(const Vec3 &center, double radius, double height, int n);

/// Circle in the plane orthogonal to the mean forward axis of `fit_views`, through
/// their centroid, with radius scale × (mean in-plane distance of the centres from
/// the centroid). All poses share the mean orientation and are pushed `z_offset`
/// along the mean forward axis.
std::vector<Pose> forward_circle_path(const std::vector<Pose> &fit_views, double scale, double z_offset,
                                      int n);

/// Endpoint-clamped Catmull-Rom through the control centres with slerped
/// orientations, sampled uniformly in the spline parameter. Every position is then
/// shifted by lateral_offset.x() along the first control pose's x axis and
/// lateral_offset.y() along its z axis.
std::vector<Pose> spline_path(const std::vector<Pose> &control, const Vec2 &lateral_offset, int n);

/// Helix around the vertical axis through `center`. Pose i sits at azimuth
/// 2π·turns·i/(n−1) and looks at the axis point at its own height. With
/// `round_trip` the height goes start → end → start over the path.
std::vector<Pose> spiral_cylinder_path(double radius, double height_start, double height_end, double turns,
                                       const Vec3 &center, int n, bool round_trip = false);

enum class PathFamily { orbit, forward_circle, spline, spiral_cylinder };

std::string_view to_string(PathFamily family);
PathFamily path_family_from_string(std::string_view name);

/// Declarative description of one path; see generate_path for how fields map.
struct PathSpec {
    PathFamily family = PathFamily::orbit;
    Vec3 center = Vec3::Zero();
    double scale = 1.0;          ///< orbit/spiral radius, forward-circle or spline scale factor
    double height_offset = 0.0;  ///< orbit height, forward-circle z offset
    int n_views = 80;
    double turns = 1.0;                       ///< spiral
    Vec2 height_range = Vec2::Zero();         ///< spiral start/end heights
    bool round_trip = false;                  ///< spiral
    Vec2 lateral_offset = Vec2::Zero();       ///< spline
    std::vector<Pose> control;                ///< spline; falls back to the fit poses when empty

    void validate() const;
};

/// Evaluates a PathSpec. `fit` supplies the input poses for the fitted families.
std::vector<Pose> generate_path(const PathSpec &spec, const std::vector<Pose> &fit);

/// Orbit parameters recovered from a set of input cameras.
struct OrbitFit {
    Vec3 target = Vec3::Zero(); ///< point the cameras look at
    double radius = 0.0;        ///< mean horizontal distance of the centres from target
    double height = 0.0;        ///< mean vertical offset of the centres above target
    double reach = 0.0;         ///< mean distance of the centres from target
};

/// Least-squares intersection of the optical axes; with one camera (or parallel
/// axes) the target is the point on the mean axis closest to the world origin.
OrbitFit fit_orbit(const std::vector<Pose> &poses);

/// Positions scaled about their centroid, orientations unchanged.
std::vector<Pose> scale_about_centroid(const std::vector<Pose> &poses, double factor);

enum class DatasetPreset { single_forward, single_orbit, re10k, llff, dtu, co3d, mip360 };

inline constexpr int kViewsPerVariant = 80;

const std::vector<std::string> &dataset_preset_names();
std::string_view to_string(DatasetPreset preset);
DatasetPreset dataset_preset_from_string(std::string_view name);

/// Concatenated path variants fitted to `input_poses`:
/// single_forward 80, single_orbit 80, re10k 800, llff 960, dtu 480, co3d 640, mip360 720.
std::vector<Pose> dataset_preset(DatasetPreset kind, const std::vector<Pose> &input_poses);

/// Indices of poses that sit inside a solid sphere or outside an enclosing shell.
std::vector<std::size_t> validate_path(const std::vector<Pose> &path, const SceneSpec &scene);

} // namespace viewforge

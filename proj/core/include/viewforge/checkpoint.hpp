// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/volume.hpp"

#include <filesystem>
#include <iosfwd>

namespace viewforge {

/// Binary voxel-grid checkpoint, all fields little-endian:
///
///   char[8]  magic "VFVOXEL1"
///   u32[3]   resolution (nx, ny, nz)
///   f64[3]   bounds min, f64[3] bounds max
///   f64[3]   background colour
///   f64      density scale
///   f32[n]   raw density, one per voxel in index order
///   f32[3n]  raw colour, interleaved RGB per voxel
void write_checkpoint(std::ostream &out, const VoxelGrid &grid);
void write_checkpoint(const std::filesystem::path &path, const VoxelGrid &grid);

/// Throws ParseError on a bad magic, truncated data or an invalid header.
VoxelGrid read_checkpoint(std::istream &in);
VoxelGrid read_checkpoint(const std::filesystem::path &path);

} // namespace viewforge

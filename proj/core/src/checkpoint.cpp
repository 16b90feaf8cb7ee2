// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/checkpoint.hpp"

#include "viewforge/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

namespace viewforge {

namespace {

constexpr std::string_view kMagic = "VFVOXEL1";

template <typename T>
void put(std::ostream &out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream &in, const char *field) {
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), sizeof(T))) {
        throw ParseError(std::string("checkpoint:") + field, "unexpected end of data");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

} // namespace

void write_checkpoint(std::ostream &out, const VoxelGrid &grid) {
    out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    for (int r : grid.resolution()) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(r));
    }
    for (const Vec3 *v : {&grid.bounds().min, &grid.bounds().max, &grid.background()}) {
        for (int a = 0; a < 3; ++a) {
            put<double>(out, (*v)[a]);
        }
    }
    put<double>(out, grid.density_scale());
    const auto params = grid.params();
    const std::size_t n = grid.voxel_count();
    for (std::size_t v = 0; v < n; ++v) {
        put<float>(out, static_cast<float>(params[v * VoxelGrid::kParamsPerVoxel]));
    }
    for (std::size_t v = 0; v < n; ++v) {
        for (int c = 1; c < VoxelGrid::kParamsPerVoxel; ++c) {
            put<float>(out, static_cast<float>(params[v * VoxelGrid::kParamsPerVoxel + c]));
        }
    }
    if (!out) {
        throw Error("checkpoint: write failed");
    }
}

void write_checkpoint(const std::filesystem::path &path, const VoxelGrid &grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("checkpoint: cannot open " + path.string() + " for writing");
    }
    write_checkpoint(out, grid);
}

VoxelGrid read_checkpoint(std::istream &in) {
    std::array<char, kMagic.size()> magic{};
    if (!in.read(magic.data(), magic.size()) || std::string_view(magic.data(), magic.size()) != kMagic) {
        throw ParseError("checkpoint:magic", "not a viewforge voxel checkpoint");
    }
    std::array<int, 3> res{};
    for (int &r : res) {
        const auto value = get<std::uint32_t>(in, "resolution");
        if (value < 2 || value > 4096) {
            throw ParseError("checkpoint:resolution", "value " + std::to_string(value) + " outside [2, 4096]");
        }
        r = static_cast<int>(value);
    }
    Box bounds;
    Vec3 background;
    for (Vec3 *v : {&bounds.min, &bounds.max, &background}) {
        for (int a = 0; a < 3; ++a) {
            (*v)[a] = get<double>(in, "header");
        }
    }
    const double density_scale = get<double>(in, "density_scale");
    if (!bounds.valid() || !(density_scale > 0.0)) {
        throw ParseError("checkpoint:header", "invalid bounds or density scale");
    }
    VoxelGrid grid(res, bounds, background, density_scale);
    auto params = grid.params();
    const std::size_t n = grid.voxel_count();
    for (std::size_t v = 0; v < n; ++v) {
        params[v * VoxelGrid::kParamsPerVoxel] = get<float>(in, "density");
    }
    for (std::size_t v = 0; v < n; ++v) {
        for (int c = 1; c < VoxelGrid::kParamsPerVoxel; ++c) {
            params[v * VoxelGrid::kParamsPerVoxel + c] = get<float>(in, "color");
        }
    }
    return grid;
}

VoxelGrid read_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("checkpoint: cannot open " + path.string());
    }
    return read_checkpoint(in);
}

} // namespace viewforge

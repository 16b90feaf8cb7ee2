// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace viewforge {

/// Row-major RGB image with interleaved double-precision channels in [0,1].
class Image {
public:
    Image() = default;
    Image(int width, int height, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const noexcept { return data_.empty(); }

    double &at(int x, int y, int c) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    /// True when every channel value is finite and within [0,1].
    bool in_unit_range() const noexcept;

    bool operator==(const Image &) const = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Rounds every channel to the nearest 8-bit level, as a PPM round trip would.
Image quantize_8bit(const Image &image);

/// Binary PPM (P6, maxval 255). Values are clamped to [0,1] before quantization.
void write_ppm(const std::filesystem::path &path, const Image &image);
Image read_ppm(const std::filesystem::path &path);

} // namespace viewforge

// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/image.hpp"

#include "viewforge/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace viewforge {

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
        throw DimensionError("image dimensions must be positive, got " + std::to_string(width) +
                             "x" + std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

bool Image::in_unit_range() const noexcept {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

namespace {

unsigned char to_byte(double v) {
    const double clamped = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

// Skips whitespace and '#' comments between PPM header tokens.
int read_header_int(std::istream &in, const std::filesystem::path &path) {
    int c = in.peek();
    while (c != EOF) {
        if (c == '#') {
            std::string discard;
            std::getline(in, discard);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
        c = in.peek();
    }
    int value = 0;
    if (!(in >> value)) {
        throw ParseError(path.string(), "truncated PPM header");
    }
    return value;
}

} // namespace

Image quantize_8bit(const Image &image) {
    Image out = image;
    for (double &v : out.data()) {
        v = to_byte(v) / 255.0;
    }
    return out;
}

void write_ppm(const std::filesystem::path &path, const Image &image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<unsigned char> bytes(image.data().size());
    std::transform(image.data().begin(), image.data().end(), bytes.begin(), to_byte);
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

Image read_ppm(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::string magic;
    in >> magic;
    if (magic != "P6") {
        throw ParseError(path.string(), "expected binary PPM magic 'P6', got '" + magic + "'");
    }
    const int width = read_header_int(in, path);
    const int height = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (width <= 0 || height <= 0 || maxval != 255) {
        throw ParseError(path.string(), "unsupported PPM header (need positive size, maxval 255)");
    }
    in.get(); // single whitespace before raster
    Image image(width, height);
    std::vector<unsigned char> bytes(image.data().size());
    in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw ParseError(path.string(), "truncated PPM raster");
    }
    std::transform(bytes.begin(), bytes.end(), image.data().begin(),
                   [](unsigned char b) { return b / 255.0; });
    return image;
}

} // namespace viewforge

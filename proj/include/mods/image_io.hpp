#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "mods/image.hpp"

namespace mods {

/// Thrown for unreadable, unwritable or malformed image files.
class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit interleaved RGB raster, used for visual output only.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* px(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* px(int x, int y) const { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
};

/// Decodes PNG, JPEG or binary PGM (P5, 8/16 bit); format is sniffed from the file header.
RawRaster read_raster(const std::filesystem::path& path);

/// read_raster followed by to_grayscale.
Image read_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG (values rounded from [0,1]).
void write_png(const std::filesystem::path& path, const Image& img);
void write_png(const std::filesystem::path& path, const RgbImage& img);

/// Writes an 8-bit binary PGM (P5).
void write_pgm(const std::filesystem::path& path, const Image& img);

}  // namespace mods

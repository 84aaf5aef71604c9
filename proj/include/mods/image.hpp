#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace mods {

/// Single-channel float raster, row-major, luminance in [0,1].
class Image {
public:
    Image() = default;
    Image(int width, int height, float fill = 0.0f);
    Image(int width, int height, std::vector<float> data);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    /// Edge-replicated lookup.
    float at_clamped(int x, int y) const;

    /// Bilinear sample with (x,y) at pixel centers on integer coordinates.
    /// Points outside [0,w-1]x[0,h-1] return `outside`.
    float sample(double x, double y, float outside = 0.0f) const;

    std::span<float> row(int y) { return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }
    std::span<const float> row(int y) const { return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// 2-D affine map  p' = L p + t  with L = [a11 a12; a21 a22].
struct AffineMap2D {
    double a11 = 1, a12 = 0, a21 = 0, a22 = 1;
    double tx = 0, ty = 0;

    static AffineMap2D identity() { return {}; }
    static AffineMap2D linear(double a11, double a12, double a21, double a22) { return {a11, a12, a21, a22, 0, 0}; }
    static AffineMap2D translation(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
    static AffineMap2D rotation(double radians);
    static AffineMap2D scaling(double sx, double sy) { return {sx, 0, 0, sy, 0, 0}; }

    double det() const { return a11 * a22 - a12 * a21; }
    std::array<double, 2> apply(double x, double y) const { return {a11 * x + a12 * y + tx, a21 * x + a22 * y + ty}; }
    std::array<double, 2> apply_linear(double x, double y) const { return {a11 * x + a12 * y, a21 * x + a22 * y}; }

    /// Throws std::invalid_argument for a singular linear part.
    AffineMap2D inverse() const;

    /// (this ∘ inner)(p) = this(inner(p))
    AffineMap2D after(const AffineMap2D& inner) const;

    /// Row-major 3x3 with last row (0,0,1).
    std::array<double, 9> to_matrix3() const { return {a11, a12, tx, a21, a22, ty, 0, 0, 1}; }
};

/// Raw decoded raster prior to luminance conversion. Samples are interleaved.
struct RawRaster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::variant<std::vector<std::uint8_t>, std::vector<std::uint16_t>, std::vector<float>> samples;
};

/// BT.601 luminance, scaled to [0,1]. Accepts 1, 3 or 4 channels (alpha ignored).
Image to_grayscale(const RawRaster& raw);

/// Separable Gaussian blur, kernel radius ceil(3 sigma), edge replication.
Image gaussian_blur_anisotropic(const Image& img, double sigma_x, double sigma_y);
inline Image gaussian_blur(const Image& img, double sigma) { return gaussian_blur_anisotropic(img, sigma, sigma); }

/// Normalized 1-D Gaussian kernel of radius ceil(3 sigma); {1} for sigma == 0.
std::vector<float> gaussian_kernel(double sigma);

/// Inverse-mapped bilinear warp; `map` takes source to output coordinates.
Image warp_affine(const Image& img, const AffineMap2D& map, int out_w, int out_h);

/// Anti-aliased downsampling by factor 0 < S <= 1 (blur sigma_base/S, then
/// resample to round(S w) x round(S h)). For S == 1 the image is returned
/// untouched unless `presmooth` is set, in which case it is blurred by sigma_base.
Image downsample(const Image& img, double factor, double sigma_base, bool presmooth = false);

}  // namespace mods

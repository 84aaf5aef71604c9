#include "mods/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mods {

Image::Image(int width, int height, float fill)
    : width_(width), height_(height)
{
    if (width < 0 || height < 0)
        throw std::invalid_argument("Image: negative dimensions");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data))
{
    if (width < 0 || height < 0 || data_.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("Image: data length does not match dimensions");
}

float Image::at_clamped(int x, int y) const
{
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return at(x, y);
}

float Image::sample(double x, double y, float outside) const
{
    if (!(x >= 0.0 && y >= 0.0 && x <= width_ - 1 && y <= height_ - 1))
        return outside;
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const float fx = static_cast<float>(x - x0);
    const float fy = static_cast<float>(y - y0);
    const float top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
    const float bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
    return top + fy * (bottom - top);
}

AffineMap2D AffineMap2D::rotation(double radians)
{
    const double c = std::cos(radians), s = std::sin(radians);
    return {c, -s, s, c, 0, 0};
}

AffineMap2D AffineMap2D::inverse() const
{
    const double d = det();
    if (d == 0.0 || !std::isfinite(d))
        throw std::invalid_argument("AffineMap2D: singular map");
    AffineMap2D inv;
    inv.a11 = a22 / d;
    inv.a12 = -a12 / d;
    inv.a21 = -a21 / d;
    inv.a22 = a11 / d;
    inv.tx = -(inv.a11 * tx + inv.a12 * ty);
    inv.ty = -(inv.a21 * tx + inv.a22 * ty);
    return inv;
}

AffineMap2D AffineMap2D::after(const AffineMap2D& in) const
{
    AffineMap2D r;
    r.a11 = a11 * in.a11 + a12 * in.a21;
    r.a12 = a11 * in.a12 + a12 * in.a22;
    r.a21 = a21 * in.a11 + a22 * in.a21;
    r.a22 = a21 * in.a12 + a22 * in.a22;
    r.tx = a11 * in.tx + a12 * in.ty + tx;
    r.ty = a21 * in.tx + a22 * in.ty + ty;
    return r;
}

namespace {

template <typename T>
Image luminance(const std::vector<T>& s, int w, int h, int channels, float scale)
{
    Image out(w, h);
    auto& dst = out.data();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    for (std::size_t i = 0; i < n; ++i) {
        float v;
        if (channels == 1) {
            v = static_cast<float>(s[i]) * scale;
        } else {
            const T* p = &s[i * channels];
            v = (0.299f * static_cast<float>(p[0]) + 0.587f * static_cast<float>(p[1])
                    + 0.114f * static_cast<float>(p[2])) * scale;
        }
        dst[i] = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
    }
    return out;
}

}  // namespace

Image to_grayscale(const RawRaster& raw)
{
    if (raw.channels != 1 && raw.channels != 3 && raw.channels != 4)
        throw std::invalid_argument("to_grayscale: unsupported channel count "
                                    + std::to_string(raw.channels));
    const std::size_t expected = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
    return std::visit([&](const auto& samples) {
        using T = typename std::decay_t<decltype(samples)>::value_type;
        if (samples.size() != expected)
            throw std::invalid_argument("to_grayscale: sample count does not match dimensions");
        float scale = 1.0f;
        if constexpr (std::is_same_v<T, std::uint8_t>)
            scale = 1.0f / 255.0f;
        else if constexpr (std::is_same_v<T, std::uint16_t>)
            scale = 1.0f / 65535.0f;
        return luminance(samples, raw.width, raw.height, raw.channels, scale);
    }, raw.samples);
}

std::vector<float> gaussian_kernel(double sigma)
{
    if (sigma <= 0.0)
        return {1.0f};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + radius];
    }
    std::vector<float> out(k.size());
    for (std::size_t i = 0; i < k.size(); ++i)
        out[i] = static_cast<float>(k[i] / sum);
    return out;
}

namespace {

void blur_rows(const Image& src, Image& dst, const std::vector<float>& k)
{
    const int w = src.width();
    const int r = static_cast<int>(k.size() / 2);
    std::vector<float> padded(w + 2 * r);
    for (int y = 0; y < src.height(); ++y) {
        auto in = src.row(y);
        for (int i = 0; i < r; ++i) {
            padded[i] = in[0];
            padded[w + r + i] = in[w - 1];
        }
        std::copy(in.begin(), in.end(), padded.begin() + r);
        auto out = dst.row(y);
        for (int x = 0; x < w; ++x) {
            const float* p = &padded[x];
            float acc = 0.0f;
            for (std::size_t j = 0; j < k.size(); ++j)
                acc += k[j] * p[j];
            out[x] = acc;
        }
    }
}

void blur_cols(const Image& src, Image& dst, const std::vector<float>& k)
{
    const int w = src.width(), h = src.height();
    const int r = static_cast<int>(k.size() / 2);
    for (int y = 0; y < h; ++y) {
        auto out = dst.row(y);
        std::fill(out.begin(), out.end(), 0.0f);
        for (int j = -r; j <= r; ++j) {
            const float kj = k[j + r];
            auto in = src.row(std::clamp(y + j, 0, h - 1));
            for (int x = 0; x < w; ++x)
                out[x] += kj * in[x];
        }
    }
}

}  // namespace

Image gaussian_blur_anisotropic(const Image& img, double sigma_x, double sigma_y)
{
    if (sigma_x < 0.0 || sigma_y < 0.0)
        throw std::invalid_argument("gaussian_blur: negative sigma");
    if (img.empty())
        return img;
    Image cur = img;
    if (sigma_x > 0.0) {
        Image tmp(img.width(), img.height());
        blur_rows(cur, tmp, gaussian_kernel(sigma_x));
        cur = std::move(tmp);
    }
    if (sigma_y > 0.0) {
        Image tmp(img.width(), img.height());
        blur_cols(cur, tmp, gaussian_kernel(sigma_y));
        cur = std::move(tmp);
    }
    for (auto& v : cur.data())
        v = std::clamp(v, 0.0f, 1.0f);
    return cur;
}

Image warp_affine(const Image& img, const AffineMap2D& map, int out_w, int out_h)
{
    if (out_w < 0 || out_h < 0)
        throw std::invalid_argument("warp_affine: negative output size");
    const AffineMap2D inv = map.inverse();
    Image out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        auto row = out.row(y);
        double sx = inv.a12 * y + inv.tx;
        double sy = inv.a22 * y + inv.ty;
        for (int x = 0; x < out_w; ++x) {
            row[x] = img.sample(sx, sy);
            sx += inv.a11;
            sy += inv.a21;
        }
    }
    return out;
}

Image downsample(const Image& img, double factor, double sigma_base, bool presmooth)
{
    if (!(factor > 0.0) || factor > 1.0)
        throw std::invalid_argument("downsample: factor must lie in (0,1]");
    if (factor == 1.0)
        return presmooth && sigma_base > 0.0 ? gaussian_blur(img, sigma_base) : img;

    const Image blurred = sigma_base > 0.0 ? gaussian_blur(img, sigma_base / factor) : img;
    const int w = std::max(1, static_cast<int>(std::lround(factor * img.width())));
    const int h = std::max(1, static_cast<int>(std::lround(factor * img.height())));
    Image out(w, h);
    const double step = 1.0 / factor;
    for (int y = 0; y < h; ++y) {
        const double sy = std::min(y * step, img.height() - 1.0);
        auto row = out.row(y);
        for (int x = 0; x < w; ++x)
            row[x] = blurred.sample(std::min(x * step, img.width() - 1.0), sy);
    }
    return out;
}

}  // namespace mods

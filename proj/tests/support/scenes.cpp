#include "scenes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mods::testing {

namespace {

// Antialiased coverage by 4x4 supersampling of an inside() predicate.
template <class Inside>
void paint(Image& img, double x0, double y0, double x1, double y1, float value, Inside inside)
{
    const int xa = std::max(0, static_cast<int>(std::floor(x0)));
    const int ya = std::max(0, static_cast<int>(std::floor(y0)));
    const int xb = std::min(img.width() - 1, static_cast<int>(std::ceil(x1)));
    const int yb = std::min(img.height() - 1, static_cast<int>(std::ceil(y1)));
    for (int y = ya; y <= yb; ++y) {
        for (int x = xa; x <= xb; ++x) {
            int hits = 0;
            for (int j = 0; j < 4; ++j)
                for (int i = 0; i < 4; ++i)
                    hits += inside(x - 0.375 + 0.25 * i, y - 0.375 + 0.25 * j) ? 1 : 0;
            if (hits) {
                const float a = hits / 16.0f;
                img.at(x, y) = (1 - a) * img.at(x, y) + a * value;
            }
        }
    }
}

}  // namespace

Image make_scene(int width, int height, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(width, height);
    const double gx = u(rng) - 0.5, gy = u(rng) - 0.5, base = 0.35 + 0.3 * u(rng);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            img.at(x, y) = static_cast<float>(base + 0.2 * (gx * x / width + gy * y / height));

    const double diag = std::hypot(width, height);
    const int shapes = static_cast<int>(width * height / 900);
    for (int k = 0; k < shapes; ++k) {
        const double cx = u(rng) * width, cy = u(rng) * height;
        // Log-uniform size between ~0.4% and ~6% of the diagonal.
        const double size = diag * 0.004 * std::exp(u(rng) * std::log(15.0));
        const float value = static_cast<float>(u(rng));
        const int kind = static_cast<int>(u(rng) * 3);
        if (kind == 0) {
            const double a = size * (0.5 + u(rng)), b = size * (0.5 + u(rng)), th = u(rng) * std::numbers::pi;
            const double c = std::cos(th), s = std::sin(th);
            const double r = std::max(a, b);
            paint(img, cx - r, cy - r, cx + r, cy + r, value, [&](double x, double y) {
                const double dx = x - cx, dy = y - cy;
                const double p = (c * dx + s * dy) / a, q = (-s * dx + c * dy) / b;
                return p * p + q * q <= 1.0;
            });
        } else if (kind == 1) {
            double px[3], py[3];
            for (int i = 0; i < 3; ++i) {
                px[i] = cx + size * 1.5 * (u(rng) - 0.5) * 2;
                py[i] = cy + size * 1.5 * (u(rng) - 0.5) * 2;
            }
            const double x0 = std::min({px[0], px[1], px[2]}), x1 = std::max({px[0], px[1], px[2]});
            const double y0 = std::min({py[0], py[1], py[2]}), y1 = std::max({py[0], py[1], py[2]});
            paint(img, x0, y0, x1, y1, value, [&](double x, double y) {
                double sgn[3];
                for (int i = 0; i < 3; ++i) {
                    const int j = (i + 1) % 3;
                    sgn[i] = (px[j] - px[i]) * (y - py[i]) - (py[j] - py[i]) * (x - px[i]);
                }
                return (sgn[0] >= 0 && sgn[1] >= 0 && sgn[2] >= 0) || (sgn[0] <= 0 && sgn[1] <= 0 && sgn[2] <= 0);
            });
        } else {
            const double len = size * (1 + 2 * u(rng)), wid = size * (0.2 + 0.4 * u(rng));
            const double th = u(rng) * std::numbers::pi, c = std::cos(th), s = std::sin(th);
            const double r = len + wid;
            paint(img, cx - r, cy - r, cx + r, cy + r, value, [&](double x, double y) {
                const double dx = x - cx, dy = y - cy;
                return std::abs(c * dx + s * dy) <= len && std::abs(-s * dx + c * dy) <= wid;
            });
        }
    }
    return gaussian_blur(img, 0.7);
}

Image make_disk(int width, int height, double cx, double cy, double radius, float inside, float outside)
{
    Image img(width, height, outside);
    paint(img, cx - radius - 1, cy - radius - 1, cx + radius + 1, cy + radius + 1, inside,
        [&](double x, double y) { return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius; });
    return img;
}

Image make_blob(int width, int height, double cx, double cy, double sx, double sy, float amplitude,
    float background)
{
    Image img(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double dx = (x - cx) / sx, dy = (y - cy) / sy;
            img.at(x, y) = static_cast<float>(background + amplitude * std::exp(-0.5 * (dx * dx + dy * dy)));
        }
    return img;
}

Image make_noise(int width, int height, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(width, height);
    for (auto& v : img.data())
        v = u(rng);
    return img;
}

}  // namespace mods::testing

#include "scale_space.hpp"

#include <cmath>

namespace mods::detail {

std::vector<Octave> build_octaves(const Image& img, int scales, double sigma0, int min_size)
{
    std::vector<Octave> octaves;
    const int n_levels = scales + 3;
    const double k = std::pow(2.0, 1.0 / scales);

    Image base = gaussian_blur(img, std::sqrt(std::max(0.0, sigma0 * sigma0 - 0.25)));
    double pixel_distance = 1.0;
    while (std::min(base.width(), base.height()) >= min_size) {
        Octave oct;
        oct.pixel_distance = pixel_distance;
        oct.levels.reserve(n_levels);
        oct.levels.push_back(base);
        oct.sigmas.push_back(sigma0);
        for (int i = 1; i < n_levels; ++i) {
            const double s = sigma0 * std::pow(k, i);
            const double prev = oct.sigmas.back();
            oct.levels.push_back(gaussian_blur(oct.levels.back(), std::sqrt(s * s - prev * prev)));
            oct.sigmas.push_back(s);
        }
        // Level `scales` has twice the base blur: subsample it for the next octave.
        const Image& src = oct.levels[scales];
        Image next(src.width() / 2, src.height() / 2);
        for (int y = 0; y < next.height(); ++y)
            for (int x = 0; x < next.width(); ++x)
                next.at(x, y) = src.at(2 * x, 2 * y);
        octaves.push_back(std::move(oct));
        base = std::move(next);
        pixel_distance *= 2.0;
    }
    return octaves;
}

bool is_extremum(const std::vector<Image>& stack, int x, int y, int level, bool maximum)
{
    const float v = stack[level].at(x, y);
    for (int l = level - 1; l <= level + 1; ++l) {
        const Image& im = stack[l];
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (l == level && dx == 0 && dy == 0)
                    continue;
                const float n = im.at(x + dx, y + dy);
                if (maximum ? !(v > n) : !(v < n))
                    return false;
            }
        }
    }
    return true;
}

bool refine_extremum(const std::vector<Image>& stack, int x, int y, int level, int border,
    Extremum& out)
{
    const int w = stack[0].width(), h = stack[0].height();
    const int n = static_cast<int>(stack.size());
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
    Eigen::Vector3d grad;
    for (int iter = 0; iter < 5; ++iter) {
        const Image& c = stack[level];
        const Image& p = stack[level - 1];
        const Image& q = stack[level + 1];
        const double v = c.at(x, y);
        grad << 0.5 * (c.at(x + 1, y) - c.at(x - 1, y)),
            0.5 * (c.at(x, y + 1) - c.at(x, y - 1)),
            0.5 * (q.at(x, y) - p.at(x, y));
        const double dxx = c.at(x + 1, y) + c.at(x - 1, y) - 2 * v;
        const double dyy = c.at(x, y + 1) + c.at(x, y - 1) - 2 * v;
        const double dss = q.at(x, y) + p.at(x, y) - 2 * v;
        const double dxy = 0.25 * (c.at(x + 1, y + 1) - c.at(x - 1, y + 1) - c.at(x + 1, y - 1) + c.at(x - 1, y - 1));
        const double dxs = 0.25 * (q.at(x + 1, y) - q.at(x - 1, y) - p.at(x + 1, y) + p.at(x - 1, y));
        const double dys = 0.25 * (q.at(x, y + 1) - q.at(x, y - 1) - p.at(x, y + 1) + p.at(x, y - 1));
        Eigen::Matrix3d hess;
        hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
        const double det = hess.determinant();
        if (std::abs(det) < 1e-20)
            return false;
        offset = -hess.inverse() * grad;
        if (std::abs(offset(0)) < 0.5 && std::abs(offset(1)) < 0.5 && std::abs(offset(2)) < 0.5) {
            out.xi = x;
            out.yi = y;
            out.li = level;
            out.x = x + offset(0);
            out.y = y + offset(1);
            out.level = level + offset(2);
            out.value = v + 0.5 * grad.dot(offset);
            return true;
        }
        if (!offset.allFinite() || offset.cwiseAbs().maxCoeff() > 1e3)
            return false;
        x += static_cast<int>(std::lround(offset(0)));
        y += static_cast<int>(std::lround(offset(1)));
        level += static_cast<int>(std::lround(offset(2)));
        if (level < 1 || level > n - 2 || x < border || y < border || x >= w - border || y >= h - border)
            return false;
    }
    return false;
}

}  // namespace mods::detail

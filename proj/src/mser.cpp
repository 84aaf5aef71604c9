#include "mods/detectors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mods {

namespace {

// Pixel tree built by union-find over pixels sorted by level (dark regions
// first). Every pixel is a node; a node is an extremal region when its
// parent has a strictly higher level or it is a root.
struct PixelTree {
    std::vector<int> parent;
    std::vector<int> shortcut;
    std::vector<int> area;
    std::vector<std::array<double, 5>> moments;  // sx, sy, sxx, sxy, syy

    int climb(int i)
    {
        int root = i;
        while (shortcut[root] != root)
            root = shortcut[root];
        while (shortcut[i] != root) {
            const int next = shortcut[i];
            shortcut[i] = root;
            i = next;
        }
        return root;
    }
};

struct Region {
    int pixel = 0;
    int level = 0;
    int area = 0;
    int parent = -1;         // region index, -1 for roots
    int largest_child = -1;  // region index
    double variation = 0.0;
    bool stable = false;
};

std::vector<int> sort_by_level(const std::vector<unsigned char>& lv)
{
    std::array<int, 257> start{};
    for (unsigned char v : lv)
        ++start[v + 1];
    for (int i = 1; i < 257; ++i)
        start[i] += start[i - 1];
    std::vector<int> order(lv.size());
    for (std::size_t i = 0; i < lv.size(); ++i)
        order[start[lv[i]]++] = static_cast<int>(i);
    return order;
}

PixelTree build_tree(const std::vector<unsigned char>& lv, const std::vector<int>& order, int w, int h)
{
    const std::size_t n = lv.size();
    PixelTree t;
    t.parent.assign(n, -1);
    t.shortcut.assign(n, -1);
    t.area.assign(n, 0);
    t.moments.assign(n, {});
    std::vector<int> height(n, 0);

    for (int idx : order) {
        const int x = idx % w, y = idx / w;
        t.parent[idx] = idx;
        t.shortcut[idx] = idx;
        t.area[idx] = 1;
        height[idx] = 1;
        t.moments[idx] = {double(x), double(y), double(x) * x, double(x) * y, double(y) * y};
        int root = idx;
        const int nbrs[4] = {x > 0 ? idx - 1 : -1, x + 1 < w ? idx + 1 : -1, y > 0 ? idx - w : -1,
            y + 1 < h ? idx + w : -1};
        for (int nb : nbrs) {
            if (nb < 0 || t.parent[nb] < 0)
                continue;
            const int nroot = t.climb(nb);
            if (nroot == root)
                continue;
            int child = nroot, keep = root;
            if (lv[root] == lv[nroot] && height[root] < height[nroot])
                std::swap(child, keep);
            t.parent[child] = keep;
            t.shortcut[child] = keep;
            t.area[keep] += t.area[child];
            for (int k = 0; k < 5; ++k)
                t.moments[keep][k] += t.moments[child][k];
            height[keep] = std::max(height[keep], height[child] + 1);
            root = keep;
        }
    }
    return t;
}

double area_above(const std::vector<Region>& regions, int r, int level)
{
    while (regions[r].parent >= 0 && regions[regions[r].parent].level <= level)
        r = regions[r].parent;
    return regions[r].area;
}

double area_below(const std::vector<Region>& regions, int r, int level)
{
    while (regions[r].level > level) {
        r = regions[r].largest_child;
        if (r < 0)
            return 0.0;
    }
    return regions[r].area;
}

void detect_polarity(const std::vector<unsigned char>& lv, int w, int h, const DetectorParams& p,
    std::vector<AffineFrame>& out)
{
    const auto order = sort_by_level(lv);
    PixelTree t = build_tree(lv, order, w, h);

    std::vector<int> region_of(lv.size(), -1);
    std::vector<Region> regions;
    for (int idx : order) {
        const int par = t.parent[idx];
        if (par == idx || lv[par] > lv[idx]) {
            region_of[idx] = static_cast<int>(regions.size());
            regions.push_back({idx, lv[idx], t.area[idx]});
        }
    }
    for (auto& r : regions) {
        int q = r.pixel;
        while (t.parent[q] != q) {
            q = t.parent[q];
            if (region_of[q] >= 0 && q != r.pixel)
                break;
        }
        if (q != r.pixel && region_of[q] >= 0)
            r.parent = region_of[q];
    }
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const int par = regions[i].parent;
        if (par < 0)
            continue;
        int& lc = regions[par].largest_child;
        if (lc < 0 || regions[lc].area < regions[i].area)
            lc = static_cast<int>(i);
    }

    // Two-sided area variation, minimized over the levels where the region
    // is the component containing its seed pixel.
    const int delta = p.mser_delta;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        Region& r = regions[i];
        const int top = r.parent >= 0 ? regions[r.parent].level - 1 : 255;
        const int last = std::min(top, r.level + delta);
        double best = INFINITY;
        for (int l = r.level; l <= last; ++l) {
            const double plus = area_above(regions, static_cast<int>(i), l + delta);
            const double minus = area_below(regions, static_cast<int>(i), l - delta);
            best = std::min(best, (plus - minus) / r.area);
        }
        r.variation = best;
    }

    const double max_area = p.mser_max_area_fraction * static_cast<double>(w) * h;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        Region& r = regions[i];
        if (r.area < p.mser_min_area || r.area > max_area || r.variation > p.mser_max_variation)
            continue;
        if (r.parent >= 0 && r.variation > regions[r.parent].variation)
            continue;
        r.stable = true;
    }
    // Children are compared through their parent links.
    for (const auto& r : regions)
        if (r.parent >= 0 && regions[r.parent].stable && regions[r.parent].variation > r.variation)
            regions[r.parent].stable = false;

    // Diversity: among nested stable regions of nearly equal area keep the
    // one with the lower variation.
    std::vector<char> removed(regions.size(), 0);
    const double keep_ratio = 1.0 - p.mser_min_diversity;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (!regions[i].stable)
            continue;
        for (int a = regions[i].parent; a >= 0; a = regions[a].parent) {
            if (regions[i].area < keep_ratio * regions[a].area)
                break;
            if (!regions[a].stable)
                continue;
            if (regions[a].variation < regions[i].variation)
                removed[i] = 1;
            else
                removed[a] = 1;
        }
    }

    for (std::size_t i = 0; i < regions.size(); ++i) {
        const Region& r = regions[i];
        if (!r.stable || removed[i])
            continue;
        const auto& m = t.moments[r.pixel];
        const double n = r.area;
        const double cx = m[0] / n, cy = m[1] / n;
        // Pixel footprint adds 1/12 to each axis variance.
        const double cxx = m[2] / n - cx * cx + 1.0 / 12.0;
        const double cxy = m[3] / n - cx * cy;
        const double cyy = m[4] / n - cy * cy + 1.0 / 12.0;
        const double det = cxx * cyy - cxy * cxy;
        if (!(det > 0.0))
            continue;
        // Symmetric square root of the covariance.
        const double s = std::sqrt(det);
        const double tr = std::sqrt(cxx + cyy + 2.0 * s);
        AffineFrame f;
        f.x = cx;
        f.y = cy;
        f.a11 = 2.0 * (cxx + s) / tr;
        f.a12 = f.a21 = 2.0 * cxy / tr;
        f.a22 = 2.0 * (cyy + s) / tr;
        f.scale = std::sqrt(f.det());
        f.detector = DetectorKind::MSER;
        f.response = 1.0 - r.variation;
        out.push_back(f);
    }
}

}  // namespace

std::vector<AffineFrame> detect_mser_levels(const std::vector<unsigned char>& levels, int width,
    int height, const DetectorParams& p)
{
    p.validate();
    if (width <= 0 || height <= 0 || levels.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("detect_mser_levels: raster size mismatch");
    std::vector<AffineFrame> frames;
    detect_polarity(levels, width, height, p, frames);
    std::vector<unsigned char> inverted(levels.size());
    std::transform(levels.begin(), levels.end(), inverted.begin(), [](unsigned char v) { return 255 - v; });
    detect_polarity(inverted, width, height, p, frames);
    return frames;
}

std::vector<AffineFrame> detect_mser(const Image& img, const DetectorParams& p)
{
    std::vector<unsigned char> lv(img.size());
    for (std::size_t i = 0; i < lv.size(); ++i)
        lv[i] = static_cast<unsigned char>(std::lround(std::clamp(img.data()[i], 0.0f, 1.0f) * 255.0f));
    return detect_mser_levels(lv, img.width(), img.height(), p);
}

}  // namespace mods

#include "mods/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "scale_space.hpp"

namespace mods {

namespace {

constexpr int kMinOctaveSize = 16;
constexpr int kBorder = 5;

void require_size(const Image& img, int min, const char* who)
{
    if (img.width() < min || img.height() < min)
        throw std::invalid_argument(std::string(who) + ": image smaller than "
                                    + std::to_string(min) + "x" + std::to_string(min));
}

}  // namespace

void DetectorParams::validate() const
{
    if (dog_scales_per_octave < 1 || hessian_scales_per_octave < 1)
        throw std::invalid_argument("DetectorParams: scales per octave must be >= 1");
    if (!(dog_initial_sigma > 0.5) || !(hessian_initial_sigma > 0.5))
        throw std::invalid_argument("DetectorParams: initial sigma must exceed the assumed input blur 0.5");
    if (!(dog_contrast_threshold >= 0.0) || !(dog_edge_ratio > 0.0))
        throw std::invalid_argument("DetectorParams: invalid DoG thresholds");
    if (!(hessian_top_k_per_megapixel > 0.0) || !(hessian_min_response >= 0.0))
        throw std::invalid_argument("DetectorParams: invalid Hessian thresholds");
    if (affine_max_iterations < 1 || !(affine_convergence > 0.0) || !(affine_max_anisotropy > 1.0))
        throw std::invalid_argument("DetectorParams: invalid affine adaptation settings");
    if (mser_delta < 1 || mser_min_area < 1 || !(mser_max_area_fraction > 0.0)
        || !(mser_max_variation > 0.0) || !(mser_min_diversity >= 0.0))
        throw std::invalid_argument("DetectorParams: invalid MSER thresholds");
}

// ---------------------------------------------------------------------------
// Difference of Gaussians

std::vector<AffineFrame> detect_dog(const Image& img, const DetectorParams& p)
{
    p.validate();
    require_size(img, 32, "detect_dog");
    const int scales = p.dog_scales_per_octave;
    const auto octaves = detail::build_octaves(img, scales, p.dog_initial_sigma, kMinOctaveSize);

    const double prefilter = 0.5 * p.dog_contrast_threshold;
    const double r = p.dog_edge_ratio;
    std::vector<AffineFrame> frames;
    for (const auto& oct : octaves) {
        const int w = oct.levels[0].width(), h = oct.levels[0].height();
        std::vector<Image> dog;
        for (std::size_t i = 0; i + 1 < oct.levels.size(); ++i) {
            Image d(w, h);
            const auto& a = oct.levels[i].data();
            const auto& b = oct.levels[i + 1].data();
            for (std::size_t k = 0; k < d.size(); ++k)
                d.data()[k] = b[k] - a[k];
            dog.push_back(std::move(d));
        }
        for (int l = 1; l <= scales; ++l) {
            for (int y = kBorder; y < h - kBorder; ++y) {
                for (int x = kBorder; x < w - kBorder; ++x) {
                    const float v = dog[l].at(x, y);
                    if (std::abs(v) <= prefilter)
                        continue;
                    if (!detail::is_extremum(dog, x, y, l, v > 0))
                        continue;
                    detail::Extremum e;
                    if (!detail::refine_extremum(dog, x, y, l, kBorder, e))
                        continue;
                    if (std::abs(e.value) < p.dog_contrast_threshold)
                        continue;
                    const Image& d = dog[e.li];
                    const double c = d.at(e.xi, e.yi);
                    const double dxx = d.at(e.xi + 1, e.yi) + d.at(e.xi - 1, e.yi) - 2 * c;
                    const double dyy = d.at(e.xi, e.yi + 1) + d.at(e.xi, e.yi - 1) - 2 * c;
                    const double dxy = 0.25 * (d.at(e.xi + 1, e.yi + 1) - d.at(e.xi - 1, e.yi + 1)
                                                  - d.at(e.xi + 1, e.yi - 1) + d.at(e.xi - 1, e.yi - 1));
                    const double tr = dxx + dyy, det = dxx * dyy - dxy * dxy;
                    if (det <= 0.0 || tr * tr * r >= (r + 1) * (r + 1) * det)
                        continue;

                    const double sigma = p.dog_initial_sigma * std::pow(2.0, e.level / scales) * oct.pixel_distance;
                    AffineFrame f;
                    f.x = e.x * oct.pixel_distance;
                    f.y = e.y * oct.pixel_distance;
                    f.scale = std::numbers::sqrt2 * sigma;
                    f.a11 = f.a22 = f.scale;
                    f.a12 = f.a21 = 0.0;
                    f.detector = DetectorKind::DOG;
                    f.response = std::abs(e.value);
                    frames.push_back(f);
                }
            }
        }
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Hessian-Affine

namespace {

constexpr int kShapeWindow = 19;

struct Candidate {
    int octave = 0;
    detail::Extremum e;
    double sigma = 0.0;  // octave pixels
};

Image hessian_response(const Image& L, double sigma)
{
    const int w = L.width(), h = L.height();
    Image r(w, h);
    const double norm = sigma * sigma * sigma * sigma;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double c = L.at(x, y);
            const double dxx = L.at(x + 1, y) + L.at(x - 1, y) - 2 * c;
            const double dyy = L.at(x, y + 1) + L.at(x, y - 1) - 2 * c;
            const double dxy = 0.25 * (L.at(x + 1, y + 1) - L.at(x - 1, y + 1) - L.at(x + 1, y - 1) + L.at(x - 1, y - 1));
            r.at(x, y) = static_cast<float>(norm * (dxx * dyy - dxy * dxy));
        }
    }
    return r;
}

// Symmetric 2x2 [a b; b c]: eigenvalues l1 >= l2.
void eigen_sym(double a, double b, double c, double& l1, double& l2)
{
    const double t = 0.5 * (a + c);
    const double d = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    l1 = t + d;
    l2 = t - d;
}

// M^(-1/2) for symmetric positive definite M = [a b; b c].
void inv_sqrt_sym(double a, double b, double c, double& ia, double& ib, double& ic)
{
    double l1, l2;
    eigen_sym(a, b, c, l1, l2);
    // Eigenvector of l1.
    double vx, vy;
    if (std::abs(b) > 1e-15 * (std::abs(a) + std::abs(c))) {
        vx = l1 - c;
        vy = b;
    } else if (a >= c) {
        vx = 1;
        vy = 0;
    } else {
        vx = 0;
        vy = 1;
    }
    const double n = std::hypot(vx, vy);
    vx /= n;
    vy /= n;
    const double s1 = 1.0 / std::sqrt(l1), s2 = 1.0 / std::sqrt(l2);
    // V diag(s1, s2) V^T with V = [vx -vy; vy vx]
    ia = s1 * vx * vx + s2 * vy * vy;
    ib = (s1 - s2) * vx * vy;
    ic = s1 * vy * vy + s2 * vx * vx;
}

// A pyramid level usable for patch sampling; blur in input pixels.
struct Source {
    const Image* image = nullptr;
    double pixel_distance = 1.0;
    double blur = 0.5;
};

struct ShapeAdapter {
    std::vector<float> mask;
    std::vector<float> patch;

    ShapeAdapter() : mask(kShapeWindow * kShapeWindow), patch(kShapeWindow * kShapeWindow)
    {
        const int half = kShapeWindow / 2;
        const double s = half / 2.0;
        for (int j = 0; j < kShapeWindow; ++j)
            for (int i = 0; i < kShapeWindow; ++i) {
                const double dx = i - half, dy = j - half;
                mask[j * kShapeWindow + i] = static_cast<float>(std::exp(-(dx * dx + dy * dy) / (2 * s * s)));
            }
    }

    // (x, y) and sigma are in input pixels.
    bool adapt(const std::vector<Source>& sources, double x, double y, double sigma,
        const DetectorParams& p, double u[4])
    {
        const int half = kShapeWindow / 2;
        const double step = sigma / 1.6;
        double u11 = 1, u12 = 0, u21 = 0, u22 = 1;
        double prev_ratio = 1.0;
        for (int it = 0; it < p.affine_max_iterations; ++it) {
            // The source blur acts as the differentiation scale; it may not
            // exceed the shortest sampling step.
            double g1, g2;
            eigen_sym(u11 * u11 + u21 * u21, u11 * u12 + u21 * u22, u12 * u12 + u22 * u22, g1, g2);
            const double min_step = step * std::sqrt(std::max(g2, 0.0));
            const Source* src = &sources.front();
            for (const auto& s : sources)
                if (s.blur <= min_step && s.blur > src->blur)
                    src = &s;
            const Image& L = *src->image;
            const double inv = 1.0 / src->pixel_distance;
            for (int j = 0; j < kShapeWindow; ++j) {
                for (int i = 0; i < kShapeWindow; ++i) {
                    const double px = (i - half) * step, py = (j - half) * step;
                    const double sx = (x + u11 * px + u12 * py) * inv;
                    const double sy = (y + u21 * px + u22 * py) * inv;
                    patch[j * kShapeWindow + i] = L.sample(std::clamp(sx, 0.0, L.width() - 1.0),
                        std::clamp(sy, 0.0, L.height() - 1.0));
                }
            }
            double a = 0, b = 0, c = 0;
            for (int j = 1; j < kShapeWindow - 1; ++j) {
                for (int i = 1; i < kShapeWindow - 1; ++i) {
                    const int k = j * kShapeWindow + i;
                    const double gx = 0.5 * (patch[k + 1] - patch[k - 1]);
                    const double gy = 0.5 * (patch[k + kShapeWindow] - patch[k - kShapeWindow]);
                    const double wgt = mask[k];
                    a += wgt * gx * gx;
                    b += wgt * gx * gy;
                    c += wgt * gy * gy;
                }
            }
            double l1, l2;
            eigen_sym(a, b, c, l1, l2);
            if (!(l2 > 1e-14 * std::max(1.0, l1)))
                return false;
            const double ratio = 1.0 - l2 / l1;

            double ia, ib, ic;
            inv_sqrt_sym(a, b, c, ia, ib, ic);
            const double n11 = u11 * ia + u12 * ib, n12 = u11 * ib + u12 * ic;
            const double n21 = u21 * ia + u22 * ib, n22 = u21 * ib + u22 * ic;
            const double det = n11 * n22 - n12 * n21;
            if (!(det > 0.0))
                return false;
            const double nrm = 1.0 / std::sqrt(det);
            u11 = n11 * nrm;
            u12 = n12 * nrm;
            u21 = n21 * nrm;
            u22 = n22 * nrm;

            // Canonical form: symmetric square root of U U^T.
            const double sa = u11 * u11 + u12 * u12;
            const double sb = u11 * u21 + u12 * u22;
            const double sc = u21 * u21 + u22 * u22;
            double e1, e2;
            eigen_sym(sa, sb, sc, e1, e2);
            if (!(e2 > 0.0) || std::sqrt(e1 / e2) > p.affine_max_anisotropy)
                return false;

            if (ratio < p.affine_convergence && prev_ratio < p.affine_convergence) {
                // sqrt of [sa sb; sb sc] via the inverse square root of its inverse.
                double ia2, ib2, ic2;
                const double d = sa * sc - sb * sb;
                inv_sqrt_sym(sc / d, -sb / d, sa / d, ia2, ib2, ic2);
                u[0] = ia2;
                u[1] = ib2;
                u[2] = ib2;
                u[3] = ic2;
                return true;
            }
            prev_ratio = ratio;
        }
        return false;
    }
};

}  // namespace

std::vector<AffineFrame> detect_hessian_affine(const Image& img, const DetectorParams& p)
{
    p.validate();
    require_size(img, 32, "detect_hessian_affine");
    const int scales = p.hessian_scales_per_octave;
    const auto octaves = detail::build_octaves(img, scales, p.hessian_initial_sigma, kMinOctaveSize);

    std::vector<Candidate> candidates;
    std::vector<std::vector<Image>> responses(octaves.size());
    for (std::size_t o = 0; o < octaves.size(); ++o) {
        const auto& oct = octaves[o];
        auto& resp = responses[o];
        for (int l = 0; l <= scales + 1; ++l)
            resp.push_back(hessian_response(oct.levels[l], oct.sigmas[l]));
        const int w = resp[0].width(), h = resp[0].height();
        for (int l = 1; l <= scales; ++l) {
            for (int y = kBorder; y < h - kBorder; ++y) {
                for (int x = kBorder; x < w - kBorder; ++x) {
                    const float v = resp[l].at(x, y);
                    if (std::abs(v) <= p.hessian_min_response)
                        continue;
                    if (!detail::is_extremum(resp, x, y, l, v > 0))
                        continue;
                    Candidate c;
                    c.octave = static_cast<int>(o);
                    if (!detail::refine_extremum(resp, x, y, l, kBorder, c.e))
                        continue;
                    if (std::abs(c.e.value) <= p.hessian_min_response)
                        continue;
                    c.sigma = p.hessian_initial_sigma * std::pow(2.0, c.e.level / scales);
                    candidates.push_back(c);
                }
            }
        }
    }

    const double megapixels = static_cast<double>(img.width()) * img.height() / 1e6;
    const auto keep = static_cast<std::size_t>(std::ceil(p.hessian_top_k_per_megapixel * megapixels));
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::abs(a.e.value) > std::abs(b.e.value);
    });
    if (candidates.size() > keep)
        candidates.resize(keep);

    // Patches come from the coarsest level whose blur stays below the sampling
    // step; a fixed detection level would pull shapes toward a circle.
    std::vector<Source> sources{{&img, 1.0, 0.5}};
    for (const auto& oct : octaves)
        for (int l = 0; l < scales; ++l)
            sources.push_back({&oct.levels[l], oct.pixel_distance, oct.sigmas[l] * oct.pixel_distance});

    ShapeAdapter adapter;
    std::vector<AffineFrame> frames;
    for (const auto& c : candidates) {
        const auto& oct = octaves[c.octave];
        double u[4];
        if (!adapter.adapt(sources, c.e.x * oct.pixel_distance, c.e.y * oct.pixel_distance,
                c.sigma * oct.pixel_distance, p, u))
            continue;
        AffineFrame f;
        f.x = c.e.x * oct.pixel_distance;
        f.y = c.e.y * oct.pixel_distance;
        f.scale = std::numbers::sqrt2 * c.sigma * oct.pixel_distance;
        f.a11 = f.scale * u[0];
        f.a12 = f.scale * u[1];
        f.a21 = f.scale * u[2];
        f.a22 = f.scale * u[3];
        f.detector = DetectorKind::HESSAFF;
        f.response = std::abs(c.e.value);
        frames.push_back(f);
    }
    return frames;
}

std::vector<AffineFrame> detect(DetectorKind kind, const Image& img, const DetectorParams& p)
{
    switch (kind) {
    case DetectorKind::MSER: return detect_mser(img, p);
    case DetectorKind::HESSAFF: return detect_hessian_affine(img, p);
    case DetectorKind::DOG: return detect_dog(img, p);
    }
    return {};
}

}  // namespace mods

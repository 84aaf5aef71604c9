#include "mods/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mods {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kOrientationBins = 36;
// Gradients below this are treated as a flat patch.
constexpr float kFlat = 1e-6f;

Image half_size(const Image& img)
{
    // Assumes ~0.5 px prior blur; brings it to 1 px before dropping every other sample.
    const Image b = gaussian_blur(img, std::sqrt(0.75));
    Image out(std::max(1, img.width() / 2), std::max(1, img.height() / 2));
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            out.at(x, y) = b.at(2 * x, 2 * y);
    return out;
}

struct Gradients {
    std::vector<float> mag, ang;
};

Gradients patch_gradients(const Image& patch)
{
    const int n = patch.width();
    Gradients g;
    g.mag.assign(patch.size(), 0.0f);
    g.ang.assign(patch.size(), 0.0f);
    for (int y = 1; y < n - 1; ++y) {
        for (int x = 1; x < n - 1; ++x) {
            const float gx = 0.5f * (patch.at(x + 1, y) - patch.at(x - 1, y));
            const float gy = 0.5f * (patch.at(x, y + 1) - patch.at(x, y - 1));
            const std::size_t k = static_cast<std::size_t>(y) * n + x;
            g.mag[k] = std::hypot(gx, gy);
            float a = std::atan2(gy, gx);
            if (a < 0)
                a += static_cast<float>(kTwoPi);
            g.ang[k] = a;
        }
    }
    return g;
}

void require_square(const Image& patch, int min, const char* who)
{
    if (patch.width() != patch.height() || patch.width() < min)
        throw std::invalid_argument(std::string(who) + ": patch must be square and at least "
                                    + std::to_string(min) + " pixels wide");
}

}  // namespace

PatchExtractor::PatchExtractor(const Image& img)
{
    levels_.push_back(img);
    while (std::min(levels_.back().width(), levels_.back().height()) >= 32)
        levels_.push_back(half_size(levels_.back()));
}

bool measurement_region_inside(const AffineFrame& f, int width, int height)
{
    const double rx = kMagnification * std::hypot(f.a11, f.a12);
    const double ry = kMagnification * std::hypot(f.a21, f.a22);
    return f.x - rx >= 0.0 && f.y - ry >= 0.0 && f.x + rx <= width - 1.0 && f.y + ry <= height - 1.0;
}

std::optional<Image> PatchExtractor::extract(const AffineFrame& f, int size) const
{
    if (!(std::abs(f.det()) > 1e-12))
        throw std::invalid_argument("PatchExtractor: singular frame shape");
    if (size < 2)
        throw std::invalid_argument("PatchExtractor: patch size must be >= 2");
    if (!measurement_region_inside(f, width(), height()))
        return std::nullopt;

    const double c = 0.5 * (size - 1);
    const double k = kMagnification / c;
    // Smallest sampling step in input pixels picks the pyramid level.
    const double p = f.a11 * f.a11 + f.a21 * f.a21, q = f.a11 * f.a12 + f.a21 * f.a22,
                 r = f.a12 * f.a12 + f.a22 * f.a22;
    const double min_sv = std::sqrt(std::max(0.0, 0.5 * (p + r) - std::sqrt(0.25 * (p - r) * (p - r) + q * q)));
    const double step = k * min_sv;
    int level = step >= 1.0 ? static_cast<int>(std::floor(std::log2(step))) : 0;
    level = std::clamp(level, 0, static_cast<int>(levels_.size()) - 1);
    const Image& src = levels_[level];
    const double inv = 1.0 / (1 << level);

    Image patch(size, size);
    for (int j = 0; j < size; ++j) {
        const double v = (j - c) * k;
        for (int i = 0; i < size; ++i) {
            const double u = (i - c) * k;
            const double x = (f.x + f.a11 * u + f.a12 * v) * inv;
            const double y = (f.y + f.a21 * u + f.a22 * v) * inv;
            patch.at(i, j) = src.sample(std::clamp(x, 0.0, src.width() - 1.0), std::clamp(y, 0.0, src.height() - 1.0));
        }
    }
    return patch;
}

std::vector<double> dominant_orientations(const Image& patch)
{
    require_square(patch, 3, "dominant_orientations");
    const int n = patch.width();
    const Gradients g = patch_gradients(patch);
    if (*std::max_element(g.mag.begin(), g.mag.end()) < kFlat)
        return {0.0};

    const double c = 0.5 * (n - 1), sigma = n / 6.0;
    std::array<double, kOrientationBins> hist{};
    for (int y = 1; y < n - 1; ++y) {
        for (int x = 1; x < n - 1; ++x) {
            const std::size_t k = static_cast<std::size_t>(y) * n + x;
            const double dx = x - c, dy = y - c;
            const double w = g.mag[k] * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            const double b = g.ang[k] / kTwoPi * kOrientationBins - 0.5;
            const int b0 = static_cast<int>(std::floor(b));
            const double fr = b - b0;
            hist[(b0 + kOrientationBins) % kOrientationBins] += (1 - fr) * w;
            hist[(b0 + 1) % kOrientationBins] += fr * w;
        }
    }
    for (int pass = 0; pass < 2; ++pass) {
        auto prev = hist;
        for (int i = 0; i < kOrientationBins; ++i)
            hist[i] = (prev[(i + kOrientationBins - 1) % kOrientationBins] + prev[i]
                          + prev[(i + 1) % kOrientationBins]) / 3.0;
    }
    const double top = *std::max_element(hist.begin(), hist.end());
    std::vector<std::pair<double, double>> peaks;  // (value, angle)
    for (int i = 0; i < kOrientationBins; ++i) {
        const double l = hist[(i + kOrientationBins - 1) % kOrientationBins];
        const double m = hist[i];
        const double r = hist[(i + 1) % kOrientationBins];
        if (m < 0.8 * top || m <= l || m < r)
            continue;
        const double denom = l - 2 * m + r;
        const double off = denom != 0.0 ? 0.5 * (l - r) / denom : 0.0;
        double a = (i + 0.5 + off) * kTwoPi / kOrientationBins;
        a = std::fmod(a + kTwoPi, kTwoPi);
        peaks.emplace_back(m, a);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](auto& a, auto& b) { return a.first > b.first; });
    if (peaks.size() > kMaxOrientations)
        peaks.resize(kMaxOrientations);
    std::vector<double> out;
    for (auto& pk : peaks)
        out.push_back(pk.second);
    return out;
}

Descriptor sift_describe(const Image& patch, double orientation)
{
    require_square(patch, 16, "sift_describe");
    const int n = patch.width();
    const Gradients g = patch_gradients(patch);
    Descriptor d;
    d.kind = DescriptorKind::SIFT_L2;

    // The 4x4 grid spans a square inscribed in the patch circle, so no
    // rotation moves it outside the sampled data.
    const double c = 0.5 * (n - 1);
    const double width = n / std::numbers::sqrt2;
    const double bin = width / 4.0;
    const double sigma = 0.5 * width;
    const double co = std::cos(orientation), si = std::sin(orientation);
    std::array<double, 128> h{};
    for (int y = 1; y < n - 1; ++y) {
        for (int x = 1; x < n - 1; ++x) {
            const std::size_t k = static_cast<std::size_t>(y) * n + x;
            if (g.mag[k] == 0.0f)
                continue;
            const double dx = x - c, dy = y - c;
            const double u = co * dx + si * dy, v = -si * dx + co * dy;
            const double bx = u / bin + 1.5, by = v / bin + 1.5;
            if (bx <= -1.0 || bx >= 4.0 || by <= -1.0 || by >= 4.0)
                continue;
            double a = g.ang[k] - orientation;
            a = std::fmod(a, kTwoPi);
            if (a < 0)
                a += kTwoPi;
            const double bo = a / kTwoPi * 8.0;
            const double w = g.mag[k] * std::exp(-(u * u + v * v) / (2 * sigma * sigma));
            const int x0 = static_cast<int>(std::floor(bx)), y0 = static_cast<int>(std::floor(by));
            const int o0 = static_cast<int>(std::floor(bo));
            const double fx = bx - x0, fy = by - y0, fo = bo - o0;
            for (int iy = 0; iy < 2; ++iy) {
                const int yy = y0 + iy;
                if (yy < 0 || yy > 3)
                    continue;
                const double wy = iy ? fy : 1 - fy;
                for (int ix = 0; ix < 2; ++ix) {
                    const int xx = x0 + ix;
                    if (xx < 0 || xx > 3)
                        continue;
                    const double wx = ix ? fx : 1 - fx;
                    for (int io = 0; io < 2; ++io) {
                        const int oo = (o0 + io) & 7;
                        const double wo = io ? fo : 1 - fo;
                        h[(yy * 4 + xx) * 8 + oo] += w * wx * wy * wo;
                    }
                }
            }
        }
    }
    double norm = 0;
    for (double v : h)
        norm += v * v;
    norm = std::sqrt(norm);
    if (norm < kFlat)
        return d;
    double norm2 = 0;
    for (double& v : h) {
        v = std::min(v / norm, 0.2);
        norm2 += v * v;
    }
    norm2 = std::sqrt(norm2);
    for (int i = 0; i < 128; ++i)
        d.values[i] = static_cast<float>(h[i] / norm2);
    return d;
}

Descriptor root_sift(const Descriptor& d)
{
    Descriptor out;
    out.kind = DescriptorKind::ROOTSIFT;
    double l1 = 0;
    for (float v : d.values) {
        if (v < 0.0f)
            throw std::invalid_argument("root_sift: negative descriptor entry");
        l1 += v;
    }
    if (l1 == 0.0)
        return out;
    for (int i = 0; i < 128; ++i)
        out.values[i] = static_cast<float>(std::sqrt(d.values[i] / l1));
    return out;
}

double l2_distance(const Descriptor& a, const Descriptor& b)
{
    double s = 0;
    for (int i = 0; i < 128; ++i) {
        const double t = a.values[i] - b.values[i];
        s += t * t;
    }
    return std::sqrt(s);
}

FeatureSet describe_frames(const PatchExtractor& extractor, const std::vector<AffineFrame>& frames,
    DescriptorKind kind)
{
    FeatureSet out;
    for (const auto& f : frames) {
        const auto patch = extractor.extract(f);
        if (!patch)
            continue;
        for (double o : dominant_orientations(*patch)) {
            AffineFrame g = f;
            g.orientation = o;
            Descriptor d = sift_describe(*patch, o);
            if (kind == DescriptorKind::ROOTSIFT)
                d = root_sift(d);
            out.frames.push_back(g);
            out.descriptors.push_back(d);
        }
    }
    return out;
}

void write_descriptors(std::ostream& out, const FeatureSet& features)
{
    char buf[32];
    for (std::size_t i = 0; i < features.size(); ++i) {
        write_frames(out, {features.frames[i]});
        const auto& v = features.descriptors[i].values;
        for (int k = 0; k < 128; ++k) {
            std::snprintf(buf, sizeof buf, k ? " %.9g" : "%.9g", v[k]);
            out << buf;
        }
        out << '\n';
    }
}

FeatureSet read_descriptors(std::istream& in)
{
    FeatureSet fs;
    std::string frame_line, values_line;
    while (std::getline(in, frame_line)) {
        if (frame_line.empty())
            continue;
        if (!std::getline(in, values_line))
            throw std::runtime_error("read_descriptors: missing descriptor line");
        std::istringstream fl(frame_line);
        auto frames = read_frames(fl);
        if (frames.size() != 1)
            throw std::runtime_error("read_descriptors: malformed frame line");
        Descriptor d;
        std::istringstream vl(values_line);
        for (auto& v : d.values)
            if (!(vl >> v))
                throw std::runtime_error("read_descriptors: expected 128 values");
        // The dump carries no kind tag; the pipeline always writes RootSIFT.
        d.kind = DescriptorKind::ROOTSIFT;
        fs.frames.push_back(frames.front());
        fs.descriptors.push_back(d);
    }
    return fs;
}

}  // namespace mods

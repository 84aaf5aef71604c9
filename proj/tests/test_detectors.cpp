#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mods/detectors.hpp"
#include "mods/image.hpp"
#include "support/scenes.hpp"

using namespace mods;
using mods::testing::make_blob;
using mods::testing::make_disk;
using mods::testing::make_scene;

namespace {

constexpr double kPi = std::numbers::pi;

// Isotropic blobs with sigma in [3, 6] on a regular jittered grid.
Image blob_field(int w, int h, unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> jitter(-6, 6), sig(3, 6), amp(0.3, 0.7);
    Image img(w, h, 0.15f);
    for (int gy = 40; gy < h - 30; gy += 48)
        for (int gx = 40; gx < w - 30; gx += 48) {
            const double cx = gx + jitter(rng), cy = gy + jitter(rng), s = sig(rng), a = amp(rng);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double r2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (s * s);
                    if (r2 < 25)
                        img.at(x, y) += static_cast<float>(a * std::exp(-0.5 * r2));
                }
        }
    for (auto& v : img.data())
        v = std::min(v, 1.0f);
    return img;
}

// Fraction of frames in `a` with a counterpart in `b` after mapping a's centers
// by `map`; the scale is compared after multiplying by `scale_factor`.
double repeatability(const std::vector<AffineFrame>& a, const std::vector<AffineFrame>& b, const AffineMap2D& map,
    double scale_factor, double max_dist, double max_scale_err, int w2, int h2)
{
    int considered = 0, found = 0;
    for (const auto& f : a) {
        const auto [x, y] = map.apply(f.x, f.y);
        if (x < 10 || y < 10 || x > w2 - 11 || y > h2 - 11)
            continue;
        ++considered;
        for (const auto& g : b) {
            if (std::hypot(g.x - x, g.y - y) <= max_dist
                && std::abs(g.scale - f.scale * scale_factor) <= max_scale_err * f.scale * scale_factor) {
                ++found;
                break;
            }
        }
    }
    return considered ? static_cast<double>(found) / considered : 0.0;
}

std::pair<double, double> eigenvalues(const AffineFrame& f)
{
    // Singular values of the shape matrix = ellipse semi-axes.
    const double a = f.a11, b = f.a12, c = f.a21, d = f.a22;
    const double s1 = a * a + b * b + c * c + d * d;
    const double det = std::abs(a * d - b * c);
    const double disc = std::sqrt(std::max(0.0, s1 * s1 - 4 * det * det));
    return {std::sqrt((s1 + disc) / 2), std::sqrt(std::max(0.0, (s1 - disc) / 2))};
}

std::vector<unsigned char> quantize(const Image& img)
{
    std::vector<unsigned char> q(img.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        q[i] = static_cast<unsigned char>(std::lround(std::clamp(img.data()[i], 0.0f, 1.0f) * 255));
    return q;
}

}  // namespace

TEST(Detectors, ConstantImageGivesNothing)
{
    const Image flat(96, 80, 0.42f);
    EXPECT_TRUE(detect_dog(flat).empty());
    EXPECT_TRUE(detect_hessian_affine(flat).empty());
    EXPECT_TRUE(detect_mser(flat).empty());
}

TEST(Detectors, SizeRequirements)
{
    EXPECT_THROW(detect_dog(Image(20, 40)), std::invalid_argument);
    EXPECT_THROW(detect_hessian_affine(Image(40, 31)), std::invalid_argument);
    // MSER has no minimum size; tiny images simply yield few or no regions.
    EXPECT_NO_THROW(detect_mser(Image(15, 40)));
    EXPECT_NO_THROW(detect_mser(Image(16, 16)));
}

TEST(Detectors, ParamsValidation)
{
    DetectorParams p;
    EXPECT_NO_THROW(p.validate());
    p.dog_contrast_threshold = -1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.mser_delta = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.affine_max_iterations = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Detectors, Deterministic)
{
    const Image img = make_scene(200, 160, 9);
    for (auto k : {DetectorKind::DOG, DetectorKind::HESSAFF, DetectorKind::MSER}) {
        const auto a = detect(k, img), b = detect(k, img);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].x, b[i].x);
            EXPECT_EQ(a[i].y, b[i].y);
            EXPECT_EQ(a[i].a11, b[i].a11);
            EXPECT_EQ(a[i].a22, b[i].a22);
        }
    }
}

TEST(Detectors, FramesAreValid)
{
    const Image img = make_scene(240, 180, 4);
    for (auto k : {DetectorKind::DOG, DetectorKind::HESSAFF, DetectorKind::MSER}) {
        const auto frames = detect(k, img);
        EXPECT_FALSE(frames.empty());
        for (const auto& f : frames) {
            EXPECT_GT(f.det(), 0);
            EXPECT_GT(f.scale, 0);
            EXPECT_EQ(f.detector, k);
            EXPECT_GE(f.x, 0);
            EXPECT_GE(f.y, 0);
            EXPECT_LE(f.x, img.width() - 1);
            EXPECT_LE(f.y, img.height() - 1);
        }
    }
}

TEST(Dog, GaussianBlobCenterAndScale)
{
    const Image img = make_blob(128, 128, 64.3, 63.6, 4, 4, 0.8f, 0.1f);
    const auto frames = detect_dog(img);
    ASSERT_FALSE(frames.empty());
    bool hit = false;
    for (const auto& f : frames) {
        if (std::hypot(f.x - 64.3, f.y - 63.6) <= 1.0 && std::abs(f.scale - 4 * std::sqrt(2.0)) <= 0.25 * 4 * std::sqrt(2.0))
            hit = true;
        EXPECT_NEAR(f.a12, 0.0, 1e-12);
        EXPECT_NEAR(f.a11, f.a22, 1e-12);
        EXPECT_NEAR(f.a11, f.scale, 1e-12);
    }
    EXPECT_TRUE(hit);
}

TEST(Dog, RepeatableUnderDownsampling)
{
    const Image img = blob_field(400, 320, 3);
    const Image half = downsample(img, 0.5, 0.5);
    const auto a = detect_dog(img), b = detect_dog(half);
    ASSERT_GE(a.size(), 20u);
    EXPECT_GE(repeatability(a, b, AffineMap2D::scaling(0.5, 0.5), 0.5, 1.5, 0.3, half.width(), half.height()), 0.6);
}

TEST(Dog, CovariantUnderSimilarity)
{
    const Image img = make_scene(320, 320, 12);
    const double ang = 30 * kPi / 180, s = 1.2;
    const AffineMap2D lin = AffineMap2D::linear(s * std::cos(ang), -s * std::sin(ang), s * std::sin(ang), s * std::cos(ang));
    // Keep the image center fixed.
    const auto c = lin.apply(159.5, 159.5);
    const AffineMap2D map{lin.a11, lin.a12, lin.a21, lin.a22, 159.5 - c[0], 159.5 - c[1]};
    const Image warped = warp_affine(img, map, 320, 320);
    std::vector<AffineFrame> a;
    for (const auto& f : detect_dog(img))
        if (std::hypot(f.x - 159.5, f.y - 159.5) < 110)  // stays inside the warped image
            a.push_back(f);
    const auto b = detect_dog(warped);
    ASSERT_GE(a.size(), 20u);
    EXPECT_GE(repeatability(a, b, map, s, 2.0, 0.2, 320, 320), 0.5);
}

TEST(HessianAffine, AnisotropicBlobShape)
{
    const Image img = make_blob(160, 160, 80, 80, 8, 2, 0.8f, 0.1f);
    const auto frames = detect_hessian_affine(img);
    ASSERT_FALSE(frames.empty());
    const AffineFrame* best = nullptr;
    for (const auto& f : frames)
        if (std::hypot(f.x - 80, f.y - 80) < 2 && (!best || f.response > best->response))
            best = &f;
    ASSERT_NE(best, nullptr);
    const auto [major, minor] = eigenvalues(*best);
    EXPECT_NEAR(major / minor, 4.0, 0.3 * 4.0);
    // Long axis along x.
    EXPECT_GT(std::abs(best->a11) + std::abs(best->a12), std::abs(best->a21) + std::abs(best->a22));
    EXPECT_NEAR(best->scale, std::sqrt(best->det()), 1e-9);
}

TEST(HessianAffine, CovariantUnderAffineWarp)
{
    const Image img = make_scene(320, 320, 21);
    const AffineMap2D lin = AffineMap2D::linear(1.25, 0.15, -0.1, 0.9);
    const auto c = lin.apply(159.5, 159.5);
    const AffineMap2D map{lin.a11, lin.a12, lin.a21, lin.a22, 159.5 - c[0], 159.5 - c[1]};
    const Image warped = warp_affine(img, map, 320, 320);
    std::vector<AffineFrame> a;
    for (const auto& f : detect_hessian_affine(img))
        if (std::hypot(f.x - 159.5, f.y - 159.5) < 110)
            a.push_back(f);
    const auto b = detect_hessian_affine(warped);
    ASSERT_GE(a.size(), 20u);

    // Correspondence within 2 px and with the warped shape close in normalized form.
    int found = 0;
    for (const auto& f : a) {
        const auto [x, y] = map.apply(f.x, f.y);
        const AffineMap2D shape = map.after(AffineMap2D::linear(f.a11, f.a12, f.a21, f.a22));
        for (const auto& g : b) {
            if (std::hypot(g.x - x, g.y - y) > 2.0)
                continue;
            // Overlap proxy: the warped ellipse expressed in g's normalized frame
            // should be close to a circle of radius 1.
            const AffineMap2D rel = AffineMap2D::linear(g.a11, g.a12, g.a21, g.a22).inverse().after(
                AffineMap2D::linear(shape.a11, shape.a12, shape.a21, shape.a22));
            AffineFrame r;
            r.a11 = rel.a11;
            r.a12 = rel.a12;
            r.a21 = rel.a21;
            r.a22 = rel.a22;
            const auto [s1, s2] = eigenvalues(r);
            if (s1 < 1.5 && s2 > 1 / 1.5) {
                ++found;
                break;
            }
        }
    }
    EXPECT_GE(static_cast<double>(found) / a.size(), 0.5);
}

TEST(Mser, DarkDiskOnWhite)
{
    const double cx = 100.3, cy = 99.6, r = 40;
    const Image img = make_disk(200, 200, cx, cy, r, 0.0f, 1.0f);
    DetectorParams p;
    p.mser_max_area_fraction = 0.5;  // the disk is larger than 1% of this small image
    const auto frames = detect_mser(img, p);
    ASSERT_EQ(frames.size(), 1u);
    const auto& f = frames[0];
    EXPECT_LT(std::hypot(f.x - cx, f.y - cy), 1.0);
    EXPECT_NEAR(kPi * f.det(), kPi * r * r, 0.05 * kPi * r * r);
}

TEST(Mser, NestedDisksGiveBothPolarities)
{
    Image img = make_disk(200, 200, 100, 100, 50, 0.0f, 1.0f);
    const Image inner = make_disk(200, 200, 100, 100, 20, 1.0f, 0.0f);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = std::max(img.data()[i], inner.data()[i]);
    DetectorParams p;
    p.mser_max_area_fraction = 0.5;
    const auto frames = detect_mser(img, p);
    ASSERT_GE(frames.size(), 2u);
    bool small = false, large = false;
    for (const auto& f : frames) {
        small = small || std::abs(std::sqrt(f.det()) - 20) < 2;
        // The dark ring's extremal region is the ring plus its hole: the disk of radius 50.
        large = large || std::abs(std::sqrt(f.det()) - 50) < 5;
    }
    EXPECT_TRUE(small);
    EXPECT_TRUE(large);
}

TEST(Mser, IntensityShiftAndScaleInLevels)
{
    const Image img = make_scene(160, 120, 8);
    std::vector<unsigned char> q = quantize(img);
    for (auto& v : q)
        v = static_cast<unsigned char>(v / 2);  // 0..127
    std::vector<unsigned char> shifted(q), doubled(q);
    for (auto& v : shifted)
        v = static_cast<unsigned char>(v + 100);
    for (auto& v : doubled)
        v = static_cast<unsigned char>(2 * v);

    auto same = [](const std::vector<AffineFrame>& a, const std::vector<AffineFrame>& b) {
        if (a.size() != b.size())
            return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].x != b[i].x || a[i].y != b[i].y || a[i].a11 != b[i].a11 || a[i].a22 != b[i].a22)
                return false;
        return true;
    };
    DetectorParams p;
    const auto base = detect_mser_levels(q, 160, 120, p);
    ASSERT_FALSE(base.empty());
    EXPECT_TRUE(same(base, detect_mser_levels(shifted, 160, 120, p)));
    DetectorParams p2 = p;
    p2.mser_delta = 2 * p.mser_delta;
    EXPECT_TRUE(same(base, detect_mser_levels(doubled, 160, 120, p2)));
}

TEST(Frames, TextRoundTrip)
{
    const auto frames = detect_hessian_affine(make_scene(120, 100, 2));
    ASSERT_FALSE(frames.empty());
    std::stringstream ss;
    write_frames(ss, frames);
    const auto back = read_frames(ss);
    ASSERT_EQ(back.size(), frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        // Text precision: 6 decimals for centers, 9 significant digits for shapes.
        EXPECT_NEAR(back[i].x, frames[i].x, 1e-6);
        EXPECT_NEAR(back[i].a12, frames[i].a12, 1e-8 * std::max(1.0, std::abs(frames[i].a12)));
        EXPECT_NEAR(back[i].scale, frames[i].scale, 1e-8 * frames[i].scale);
        EXPECT_EQ(back[i].detector, frames[i].detector);
        EXPECT_EQ(back[i].view_id, frames[i].view_id);
    }
    std::stringstream bad("1 2 3\n");
    EXPECT_THROW(read_frames(bad), std::runtime_error);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mods/descriptor.hpp"
#include "mods/detectors.hpp"
#include "support/scenes.hpp"

using namespace mods;
using mods::testing::make_scene;

namespace {

constexpr double kPi = std::numbers::pi;

double angle_diff(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 2 * kPi);
    return std::min(d, 2 * kPi - d);
}

double norm(const Descriptor& d)
{
    double s = 0;
    for (float v : d.values)
        s += double(v) * v;
    return std::sqrt(s);
}

// Smooth step across the direction `theta` (radians, image coordinates).
Image step_patch(int n, double theta)
{
    Image p(n, n);
    const double c = 0.5 * (n - 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double s = std::cos(theta) * (x - c) + std::sin(theta) * (y - c);
            p.at(x, y) = static_cast<float>(0.5 + 0.4 * std::tanh(s / 2));
        }
    return p;
}

Image rotate_quarter(const Image& p)
{
    // new(x, y) = old(y, n-1-x): gradients turn by +90 degrees.
    const int n = p.width();
    Image r(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            r.at(x, y) = p.at(y, n - 1 - x);
    return r;
}

Image crop(const Image& img, int x0, int y0, int n)
{
    Image p(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            p.at(x, y) = img.at(x0 + x, y0 + y);
    return p;
}

AffineFrame circle(double x, double y, double s)
{
    AffineFrame f;
    f.x = x;
    f.y = y;
    f.a11 = f.a22 = f.scale = s;
    return f;
}

// Ratio of the structure-tensor eigenvalues (>= 1).
double anisotropy(const Image& p)
{
    double sxx = 0, syy = 0, sxy = 0;
    for (int y = 1; y < p.height() - 1; ++y)
        for (int x = 1; x < p.width() - 1; ++x) {
            const double gx = p.at(x + 1, y) - p.at(x - 1, y), gy = p.at(x, y + 1) - p.at(x, y - 1);
            sxx += gx * gx;
            syy += gy * gy;
            sxy += gx * gy;
        }
    const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
    const double d = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    return (tr / 2 + d) / (tr / 2 - d);
}

}  // namespace

TEST(Patch, CircularFrameIsPlainCrop)
{
    const Image img = make_scene(200, 150, 3);
    const PatchExtractor ex(img);
    // 3 * scale spans 20 pixels: one image pixel per patch pixel.
    const auto p = ex.extract(circle(100, 70, 20.0 / 3.0));
    ASSERT_TRUE(p);
    ASSERT_EQ(p->width(), kPatchSize);
    for (int y = 0; y < kPatchSize; ++y)
        for (int x = 0; x < kPatchSize; ++x)
            ASSERT_NEAR(p->at(x, y), img.at(80 + x, 50 + y), 1e-6);

    // Half-pixel steps: bilinear resize of the same crop.
    const auto q = ex.extract(circle(100, 70, 10.0 / 3.0));
    ASSERT_TRUE(q);
    for (int y = 0; y < kPatchSize; y += 5)
        for (int x = 0; x < kPatchSize; x += 5)
            EXPECT_NEAR(q->at(x, y), img.sample(90 + 0.5 * x, 60 + 0.5 * y), 1e-6);
}

TEST(Patch, EllipticalFrameMakesRingsIsotropic)
{
    // Rings stretched 2:1 along x become circular in the normalized patch.
    Image img(240, 200);
    for (int y = 0; y < 200; ++y)
        for (int x = 0; x < 240; ++x) {
            const double r = std::hypot((x - 120) / 2.0, y - 100);
            img.at(x, y) = static_cast<float>(0.5 + 0.4 * std::cos(r / 2.5));
        }
    const PatchExtractor ex(img);
    AffineFrame f = circle(120, 100, 0);
    f.a11 = 2 * 8;
    f.a22 = 8;
    f.scale = std::sqrt(f.det());
    const auto p = ex.extract(f);
    ASSERT_TRUE(p);
    EXPECT_LT(anisotropy(*p), 1.1);
    EXPECT_GT(anisotropy(*ex.extract(circle(120, 100, 8))), 1.5);
}

TEST(Patch, BorderFramesAreRejected)
{
    const PatchExtractor ex(make_scene(100, 100, 1));
    EXPECT_FALSE(ex.extract(circle(5, 50, 3)));
    EXPECT_FALSE(ex.extract(circle(50, 95, 3)));
    EXPECT_TRUE(ex.extract(circle(50, 50, 3)));
    EXPECT_THROW(ex.extract(AffineFrame{50, 50, 1, 2, 2, 4}), std::invalid_argument);
}

TEST(Orientation, StepEdgeGradientDirection)
{
    for (double deg : {0.0, 30.0, 135.0, 250.0}) {
        const double th = deg * kPi / 180;
        const auto o = dominant_orientations(step_patch(kPatchSize, th));
        ASSERT_FALSE(o.empty());
        EXPECT_LT(angle_diff(o[0], th), 5 * kPi / 180) << deg;
    }
}

TEST(Orientation, QuarterTurnShiftsByNinetyDegrees)
{
    const Image p = crop(make_scene(200, 200, 5), 60, 70, kPatchSize);
    const auto a = dominant_orientations(p);
    const auto b = dominant_orientations(rotate_quarter(p));
    ASSERT_FALSE(a.empty());
    ASSERT_FALSE(b.empty());
    EXPECT_LT(angle_diff(b[0], a[0] + kPi / 2), 5 * kPi / 180);
}

TEST(Orientation, FlatPatchGivesZero)
{
    const auto o = dominant_orientations(Image(kPatchSize, kPatchSize, 0.3f));
    ASSERT_EQ(o.size(), 1u);
    EXPECT_EQ(o[0], 0.0);
}

TEST(Orientation, AtMostFourPeaksInRange)
{
    std::mt19937 rng(2);
    std::uniform_real_distribution<float> u(0, 1);
    Image noise(kPatchSize, kPatchSize);
    for (auto& v : noise.data())
        v = u(rng);
    const auto o = dominant_orientations(noise);
    EXPECT_GE(o.size(), 1u);
    EXPECT_LE(o.size(), static_cast<std::size_t>(kMaxOrientations));
    for (double a : o) {
        EXPECT_GE(a, 0.0);
        EXPECT_LT(a, 2 * kPi);
    }
}

TEST(Sift, FlatPatchIsZero)
{
    const Descriptor d = sift_describe(Image(kPatchSize, kPatchSize, 0.5f), 0.3);
    for (float v : d.values)
        EXPECT_EQ(v, 0.0f);
    EXPECT_THROW(sift_describe(Image(12, 12), 0), std::invalid_argument);
    EXPECT_THROW(sift_describe(Image(20, 21), 0), std::invalid_argument);
}

TEST(Sift, DeterministicAndNormalized)
{
    const Image p = crop(make_scene(200, 200, 6), 30, 40, kPatchSize);
    const Descriptor a = sift_describe(p, 1.1), b = sift_describe(p, 1.1);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NEAR(norm(a), 1.0, 1e-6);
    for (float v : a.values)
        EXPECT_GE(v, 0.0f);
}

TEST(Sift, IntensityScaleInvariant)
{
    const Image p = crop(make_scene(200, 200, 7), 90, 20, kPatchSize);
    Image q = p;
    for (auto& v : q.data())
        v *= 0.37f;
    const Descriptor a = sift_describe(p, 0.4), b = sift_describe(q, 0.4);
    for (int i = 0; i < 128; ++i)
        EXPECT_NEAR(a.values[i], b.values[i], 1e-6);
    EXPECT_NEAR(dominant_orientations(p)[0], dominant_orientations(q)[0], 1e-6);
}

TEST(Sift, RotationQuasiInvariance)
{
    const Image img = make_scene(300, 300, 8);
    const double ang = 45 * kPi / 180;
    // Rotation by +45 degrees about the image center.
    const AffineMap2D lin = AffineMap2D::linear(std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang));
    const auto c = lin.apply(149.5, 149.5);
    const Image rot = warp_affine(img, {lin.a11, lin.a12, lin.a21, lin.a22, 149.5 - c[0], 149.5 - c[1]}, 300, 300);
    const PatchExtractor e1(img), e2(rot);
    int checked = 0;
    for (double cx : {120.0, 150.0, 180.0}) {
        const auto a = e1.extract(circle(cx, 149.5, 9));
        const auto [rx, ry] = lin.apply(cx - 149.5, 0.0);
        const auto b = e2.extract(circle(149.5 + rx, 149.5 + ry, 9));
        ASSERT_TRUE(a && b);
        EXPECT_LT(l2_distance(sift_describe(*a, 0.0), sift_describe(*b, ang)), 0.35) << cx;
        // The wrong orientation is clearly worse.
        EXPECT_GT(l2_distance(sift_describe(*a, 0.0), sift_describe(*b, 0.0)), 0.35) << cx;
        ++checked;
    }
    EXPECT_EQ(checked, 3);
}

TEST(RootSift, UniformVector)
{
    Descriptor d;
    d.values.fill(0.3f);
    const Descriptor r = root_sift(d);
    EXPECT_EQ(r.kind, DescriptorKind::ROOTSIFT);
    for (float v : r.values)
        EXPECT_NEAR(v, 1.0 / std::sqrt(128.0), 1e-7);
    // Uniform vectors are a fixed point.
    const Descriptor rr = root_sift(r);
    for (int i = 0; i < 128; ++i)
        EXPECT_NEAR(rr.values[i], r.values[i], 1e-7);
}

TEST(RootSift, OneHotUnchanged)
{
    Descriptor d;
    d.values[17] = 0.8f;
    const Descriptor r = root_sift(d);
    for (int i = 0; i < 128; ++i)
        EXPECT_EQ(r.values[i], i == 17 ? 1.0f : 0.0f);
}

TEST(RootSift, MatchesDirectFormula)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> u(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        Descriptor d;
        for (auto& v : d.values)
            v = u(rng);
        const Descriptor r = root_sift(d);
        double l1 = 0;
        for (float v : d.values)
            l1 += v;
        for (int i = 0; i < 128; ++i)
            EXPECT_NEAR(r.values[i], std::sqrt(d.values[i] / l1), 1e-6);
        EXPECT_NEAR(norm(r), 1.0, 1e-6);
    }
}

TEST(RootSift, NotIdempotentInGeneral)
{
    Descriptor d;
    std::mt19937 rng(4);
    std::uniform_real_distribution<float> u(0, 0.01f);
    for (auto& v : d.values)
        v = u(rng);
    d.values[3] = 1.0f;
    const Descriptor once = root_sift(d), twice = root_sift(once);
    EXPECT_GT(l2_distance(once, twice), 1e-3);
}

TEST(RootSift, EdgeCases)
{
    const Descriptor zero = root_sift(Descriptor{});
    for (float v : zero.values)
        EXPECT_EQ(v, 0.0f);
    Descriptor neg;
    neg.values[0] = -0.1f;
    EXPECT_THROW(root_sift(neg), std::invalid_argument);
}

TEST(DescribeFrames, OneDescriptorPerOrientationAndNormalized)
{
    const Image img = make_scene(240, 200, 10);
    const auto frames = detect_hessian_affine(img);
    const PatchExtractor ex(img);
    const FeatureSet fs = describe_frames(ex, frames);
    ASSERT_FALSE(fs.frames.empty());
    ASSERT_EQ(fs.frames.size(), fs.descriptors.size());

    std::size_t expected = 0;
    for (const auto& f : frames)
        if (const auto p = ex.extract(f))
            expected += dominant_orientations(*p).size();
    EXPECT_EQ(fs.size(), expected);

    for (std::size_t i = 0; i < fs.size(); ++i) {
        EXPECT_EQ(fs.descriptors[i].kind, DescriptorKind::ROOTSIFT);
        const double n = norm(fs.descriptors[i]);
        EXPECT_TRUE(std::abs(n - 1.0) < 1e-6 || n == 0.0);
        EXPECT_TRUE(measurement_region_inside(fs.frames[i], img.width(), img.height()));
    }
}

TEST(DescriptorDump, RoundTrip)
{
    const Image img = make_scene(160, 120, 11);
    const FeatureSet fs = describe_frames(PatchExtractor(img), detect_dog(img));
    ASSERT_FALSE(fs.frames.empty());
    std::stringstream ss;
    write_descriptors(ss, fs);
    const FeatureSet back = read_descriptors(ss);
    ASSERT_EQ(back.size(), fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) {
        EXPECT_NEAR(back.frames[i].x, fs.frames[i].x, 1e-6);
        for (int k = 0; k < 128; ++k)
            EXPECT_EQ(back.descriptors[i].values[k], fs.descriptors[i].values[k]);
    }
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "mods/image.hpp"
#include "mods/image_io.hpp"
#include "support/scenes.hpp"

using namespace mods;

namespace {

Image random_image(int w, int h, unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(w, h);
    for (auto& v : img.data())
        v = u(rng);
    return img;
}

// Smooth enough for bilinear interpolation to be nearly exact.
Image smooth_image(int w, int h)
{
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = 0.5f + 0.25f * std::sin(x * 0.11f) * std::cos(y * 0.07f);
    return img;
}

double max_abs_diff(const Image& a, const Image& b, int margin = 0)
{
    double m = 0;
    for (int y = margin; y < a.height() - margin; ++y)
        for (int x = margin; x < a.width() - margin; ++x)
            m = std::max(m, static_cast<double>(std::abs(a.at(x, y) - b.at(x, y))));
    return m;
}

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("mods_test_" + name);
}

}  // namespace

TEST(Grayscale, WhiteIsOne)
{
    RawRaster raw{1, 1, 3, std::vector<std::uint8_t>{255, 255, 255}};
    EXPECT_FLOAT_EQ(to_grayscale(raw).at(0, 0), 1.0f);
}

TEST(Grayscale, RedUsesLumaWeight)
{
    RawRaster raw{1, 1, 3, std::vector<std::uint8_t>{255, 0, 0}};
    EXPECT_NEAR(to_grayscale(raw).at(0, 0), 0.299, 1e-6);
    RawRaster rgba{1, 1, 4, std::vector<std::uint8_t>{0, 255, 0, 17}};
    EXPECT_NEAR(to_grayscale(rgba).at(0, 0), 0.587, 1e-6);
}

TEST(Grayscale, SingleChannelOnlyRescaled)
{
    RawRaster raw{3, 1, 1, std::vector<std::uint16_t>{0, 32768, 65535}};
    const Image g = to_grayscale(raw);
    EXPECT_FLOAT_EQ(g.at(0, 0), 0.0f);
    EXPECT_NEAR(g.at(1, 0), 32768.0 / 65535.0, 1e-6);
    EXPECT_FLOAT_EQ(g.at(2, 0), 1.0f);
}

TEST(Grayscale, RejectsTwoChannels)
{
    RawRaster raw{1, 1, 2, std::vector<std::uint8_t>{1, 2}};
    EXPECT_THROW(to_grayscale(raw), std::invalid_argument);
}

TEST(Blur, ZeroSigmaIsIdentity)
{
    const Image img = random_image(20, 17, 1);
    EXPECT_EQ(gaussian_blur_anisotropic(img, 0, 0), img);
}

TEST(Blur, ConstantImageUnchanged)
{
    const Image img(25, 19, 0.37f);
    const Image b = gaussian_blur_anisotropic(img, 2.5, 0.7);
    EXPECT_LT(max_abs_diff(img, b), 1e-6);
}

TEST(Blur, ImpulseMatchesDenseConvolution)
{
    Image img(31, 31);
    img.at(15, 15) = 1.0f;
    const Image b = gaussian_blur(img, 2.0);
    EXPECT_NEAR(b.at(15, 15), 1.0 / (2 * std::numbers::pi * 4), 0.02 / (2 * std::numbers::pi * 4));

    // Dense 2-D convolution with the normalized truncated kernel.
    const int r = 6;
    double norm = 0;
    for (int i = -r; i <= r; ++i)
        norm += std::exp(-i * i / 8.0);
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx) {
            const double expect = std::exp(-(dx * dx + dy * dy) / 8.0) / (norm * norm);
            EXPECT_NEAR(b.at(15 + dx, 15 + dy), expect, 1e-6);
        }
}

TEST(Blur, KernelRadiusAndMass)
{
    const auto k = gaussian_kernel(1.5);
    EXPECT_EQ(k.size(), 2u * 5 + 1);
    double s = 0;
    for (float v : k)
        s += v;
    EXPECT_NEAR(s, 1.0, 1e-6);
    EXPECT_EQ(gaussian_kernel(0.0).size(), 1u);
}

TEST(Blur, IsLinear)
{
    const Image a = random_image(32, 32, 2), b = random_image(32, 32, 3);
    const float ca = 0.3f, cb = 0.5f;
    Image mix(32, 32);
    for (std::size_t i = 0; i < mix.size(); ++i)
        mix.data()[i] = ca * a.data()[i] + cb * b.data()[i];
    const Image bm = gaussian_blur_anisotropic(mix, 1.7, 2.3);
    const Image ba = gaussian_blur_anisotropic(a, 1.7, 2.3), bb = gaussian_blur_anisotropic(b, 1.7, 2.3);
    for (std::size_t i = 0; i < mix.size(); ++i)
        EXPECT_NEAR(bm.data()[i], ca * ba.data()[i] + cb * bb.data()[i], 1e-6);
}

TEST(Blur, ConservesMeanWithConstantBorder)
{
    Image img(40, 40, 0.5f);
    std::mt19937 rng(4);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int y = 12; y < 28; ++y)
        for (int x = 12; x < 28; ++x)
            img.at(x, y) = u(rng);
    auto mean = [](const Image& im) {
        double s = 0;
        for (float v : im.data())
            s += v;
        return s / im.size();
    };
    EXPECT_NEAR(mean(gaussian_blur(img, 1.5)), mean(img), 1e-4);
}

TEST(Blur, OutputStaysInUnitRange)
{
    const Image b = gaussian_blur_anisotropic(random_image(30, 30, 5), 3.0, 0.5);
    for (float v : b.data()) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(Warp, IdentityIsExact)
{
    const Image img = random_image(23, 14, 6);
    EXPECT_EQ(warp_affine(img, AffineMap2D::identity(), 23, 14), img);
}

TEST(Warp, HorizontalShrinkHalvesEdges)
{
    Image img(100, 100);
    for (int y = 0; y < 100; ++y)
        for (int x = 0; x < 100; ++x)
            img.at(x, y) = (x >= 40 && x < 70) ? 1.0f : 0.0f;
    const Image w = warp_affine(img, AffineMap2D::scaling(0.5, 1.0), 50, 100);
    ASSERT_EQ(w.width(), 50);
    ASSERT_EQ(w.height(), 100);
    // Per-pixel inverse-map oracle: output x samples source 2x.
    for (int x = 0; x < 50; ++x)
        EXPECT_FLOAT_EQ(w.at(x, 50), img.sample(2.0 * x, 50)) << x;
    EXPECT_FLOAT_EQ(w.at(19, 50), 0.0f);
    EXPECT_FLOAT_EQ(w.at(20, 50), 1.0f);
    EXPECT_FLOAT_EQ(w.at(34, 50), 1.0f);
    EXPECT_FLOAT_EQ(w.at(35, 50), 0.0f);
}

TEST(Warp, QuarterTurnOfSmallPattern)
{
    Image img(3, 3, std::vector<float>{0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f, 0.8f, 0.9f});
    // Rotation by +90 degrees about the center: (x,y) -> (2 - y, x).
    const AffineMap2D rot{0, -1, 1, 0, 2, 0};
    const Image r = warp_affine(img, rot, 3, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            EXPECT_NEAR(r.at(2 - y, x), img.at(x, y), 1e-6) << x << "," << y;
}

TEST(Warp, OutsideSourceIsZero)
{
    const Image img(10, 10, 1.0f);
    const Image w = warp_affine(img, AffineMap2D::translation(5, 0), 20, 10);
    EXPECT_FLOAT_EQ(w.at(2, 5), 0.0f);
    EXPECT_FLOAT_EQ(w.at(10, 5), 1.0f);
    EXPECT_FLOAT_EQ(w.at(16, 5), 0.0f);
}

TEST(Warp, SingularMapThrows)
{
    EXPECT_THROW(warp_affine(Image(5, 5), AffineMap2D::linear(1, 2, 2, 4), 5, 5), std::invalid_argument);
}

TEST(Warp, CompositionMatchesSingleWarp)
{
    const Image img = smooth_image(120, 100);
    const AffineMap2D a{0.95, 0.1, -0.08, 1.02, 4, -3};
    const AffineMap2D b{1.03, -0.05, 0.06, 0.97, -2, 5};
    const Image twice = warp_affine(warp_affine(img, a, 120, 100), b, 120, 100);
    const Image once = warp_affine(img, b.after(a), 120, 100);
    EXPECT_LT(max_abs_diff(twice, once, 15), 0.02);
}

TEST(Downsample, FactorOneIsIdentity)
{
    const Image img = random_image(16, 12, 7);
    EXPECT_EQ(downsample(img, 1.0, 0.8), img);
    EXPECT_NE(downsample(img, 1.0, 0.8, true), img);
}

TEST(Downsample, OutputDimensions)
{
    const Image img(1000, 800);
    const Image d = downsample(img, 0.25, 0.8);
    EXPECT_EQ(d.width(), 250);
    EXPECT_EQ(d.height(), 200);
}

TEST(Downsample, ScaleSetArea)
{
    const Image img(1000, 800);
    double area = 0;
    for (double s : {1.0, 0.25, 0.125}) {
        const Image d = downsample(img, s, 0.8);
        area += static_cast<double>(d.width()) * d.height();
    }
    EXPECT_NEAR(area / (1000.0 * 800.0), 1.078125, 1e-9);
    EXPECT_NEAR(area / (1000.0 * 800.0), 1.08, 0.005);
}

TEST(Downsample, InvalidFactorThrows)
{
    EXPECT_THROW(downsample(Image(4, 4), 0.0, 0.8), std::invalid_argument);
    EXPECT_THROW(downsample(Image(4, 4), 1.5, 0.8), std::invalid_argument);
}

TEST(ImageIo, PngRoundTripIsExactOn8BitValues)
{
    Image img(7, 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x)
            img.at(x, y) = static_cast<float>((x * 37 + y * 11) % 256) / 255.0f;
    const auto p = temp_path("rt.png");
    write_png(p, img);
    const Image back = read_image(p);
    EXPECT_LT(max_abs_diff(img, back), 1e-6);
    std::filesystem::remove(p);
}

TEST(ImageIo, PgmRoundTrip)
{
    const Image img = mods::testing::make_scene(40, 30, 3);
    const auto p = temp_path("rt.pgm");
    write_pgm(p, img);
    EXPECT_LT(max_abs_diff(img, read_image(p)), 0.5 / 255 + 1e-6);
    std::filesystem::remove(p);
}

TEST(ImageIo, RgbPngDecodesToThreeChannels)
{
    RgbImage rgb(4, 3);
    rgb.px(2, 1)[2] = 255;
    const auto p = temp_path("rgb.png");
    write_png(p, rgb);
    const RawRaster raw = read_raster(p);
    EXPECT_EQ(raw.channels, 3);
    const auto& s = std::get<std::vector<std::uint8_t>>(raw.samples);
    EXPECT_EQ(s[(1 * 4 + 2) * 3 + 2], 255);
    EXPECT_NEAR(read_image(p).at(2, 1), 0.114, 1e-6);
    std::filesystem::remove(p);
}

TEST(ImageIo, MissingAndGarbageFilesThrow)
{
    EXPECT_THROW(read_image(temp_path("does_not_exist.png")), ImageIoError);
    const auto p = temp_path("garbage.png");
    std::ofstream(p) << "not an image at all";
    EXPECT_THROW(read_image(p), ImageIoError);
    std::filesystem::remove(p);
}

TEST(ImageIo, DecodesJpegFixture)
{
    const Image img = read_image(std::filesystem::path(MODS_TEST_DATA) / "ramp.jpg");
    ASSERT_EQ(img.width(), 64);
    ASSERT_EQ(img.height(), 48);
    for (int x = 0; x < 64; x += 9)
        EXPECT_NEAR(img.at(x, 24), x / 63.0, 4.0 / 255) << x;
}

TEST(ImageIo, Decodes16BitPng)
{
    const Image img = read_image(std::filesystem::path(MODS_TEST_DATA) / "ramp16.png");
    ASSERT_EQ(img.width(), 32);
    EXPECT_FLOAT_EQ(img.at(0, 3), 0.0f);
    EXPECT_FLOAT_EQ(img.at(31, 3), 1.0f);
    EXPECT_NEAR(img.at(10, 3), 10 / 31.0, 1e-4);
}

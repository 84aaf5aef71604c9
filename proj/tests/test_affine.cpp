#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mods/affine.hpp"

using namespace mods;

namespace {

constexpr double kPi = std::numbers::pi;

double frobenius_diff(const AffineMap2D& a, const AffineMap2D& b)
{
    return std::hypot(std::hypot(a.a11 - b.a11, a.a12 - b.a12), std::hypot(a.a21 - b.a21, a.a22 - b.a22));
}

AffineMap2D random_positive(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (;;) {
        const AffineMap2D a = AffineMap2D::linear(u(rng), u(rng), u(rng), u(rng));
        if (a.det() > 1e-3)
            return a;
    }
}

}  // namespace

TEST(Decompose, Identity)
{
    const auto d = decompose_affine(AffineMap2D::identity());
    EXPECT_NEAR(d.lambda, 1.0, 1e-12);
    EXPECT_NEAR(d.psi, 0.0, 1e-12);
    EXPECT_NEAR(d.tilt, 1.0, 1e-12);
    EXPECT_NEAR(d.phi, 0.0, 1e-12);
}

TEST(Decompose, CanonicalTilt)
{
    const auto d = decompose_affine(AffineMap2D::linear(2, 0, 0, 1));
    EXPECT_NEAR(d.lambda, 1.0, 1e-12);
    EXPECT_NEAR(d.psi, 0.0, 1e-12);
    EXPECT_NEAR(d.tilt, 2.0, 1e-12);
    EXPECT_NEAR(d.phi, 0.0, 1e-12);
}

TEST(Decompose, KnownFactors)
{
    AffineDecomposition d{1.7, 0.9, 3.2, 0.4};
    const auto back = decompose_affine(compose_affine(d));
    EXPECT_NEAR(back.lambda, d.lambda, 1e-10);
    EXPECT_NEAR(back.psi, d.psi, 1e-10);
    EXPECT_NEAR(back.tilt, d.tilt, 1e-10);
    EXPECT_NEAR(back.phi, d.phi, 1e-10);
}

TEST(Decompose, RoundTripProperty)
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const AffineMap2D a = random_positive(rng);
        const auto d = decompose_affine(a);
        EXPECT_GE(d.tilt, 1.0);
        EXPECT_GT(d.lambda, 0.0);
        EXPECT_GE(d.phi, 0.0);
        EXPECT_LT(d.phi, kPi);
        EXPECT_GE(d.psi, 0.0);
        EXPECT_LT(d.psi, 2 * kPi);
        EXPECT_LT(frobenius_diff(compose_affine(d), a), 1e-9);
    }
}

TEST(Decompose, RejectsBadDeterminant)
{
    EXPECT_THROW(decompose_affine(AffineMap2D::linear(1, 0, 0, -1)), std::invalid_argument);
    EXPECT_THROW(decompose_affine(AffineMap2D::linear(1, 2, 2, 4)), std::invalid_argument);
    EXPECT_THROW(decompose_affine(AffineMap2D::linear(1, 0, 0, 1e-14)), std::invalid_argument);
}

TEST(LatitudeToTilt, PublishedSeries)
{
    const double theta[] = {0, 20, 40, 60, 65, 70, 75, 80, 85};
    const double t[] = {1.00, 1.06, 1.30, 2.00, 2.36, 2.92, 3.86, 5.75, 11.47};
    for (int i = 0; i < 9; ++i)
        EXPECT_NEAR(latitude_to_tilt(theta[i]), t[i], 0.01) << theta[i];
}

TEST(LatitudeToTilt, RejectsOutOfRange)
{
    EXPECT_THROW(latitude_to_tilt(90), std::invalid_argument);
    EXPECT_THROW(latitude_to_tilt(-1), std::invalid_argument);
}

TEST(TransitionTilt, IdentityAndAffine)
{
    const Matrix3 id{1, 0, 0, 0, 1, 0, 0, 0, 1};
    EXPECT_NEAR(transition_tilt(id, 100, 50), 1.0, 1e-12);
    const Matrix3 d3{3, 0, 0, 0, 1, 0, 0, 0, 1};
    for (double c : {0.0, 17.0, 250.0})
        EXPECT_NEAR(transition_tilt(d3, c, 2 * c), 3.0, 1e-12);
}

TEST(TransitionTilt, SymmetricUnderInverseForAffine)
{
    const Matrix3 h{0.8, 0.3, 5, -0.2, 1.4, -7, 0, 0, 1};
    // Inverse of the linear part, translation irrelevant to the Jacobian.
    const double det = 0.8 * 1.4 + 0.3 * 0.2;
    const Matrix3 hi{1.4 / det, -0.3 / det, 0, 0.2 / det, 0.8 / det, 0, 0, 0, 1};
    EXPECT_NEAR(transition_tilt(h, 10, 20), transition_tilt(hi, 40, 60), 1e-9);
    const Matrix3 half{0.5, 0, 0, 0, 1, 0, 0, 0, 1};
    EXPECT_NEAR(transition_tilt(half, 0, 0), 2.0, 1e-12);
}

TEST(LinearizeHomography, MatchesFiniteDifferences)
{
    const Matrix3 h{1.1, 0.2, 30, -0.1, 0.9, 12, 2e-4, -1e-4, 1};
    const double cx = 120, cy = 80, e = 1e-4;
    auto map = [&](double x, double y) {
        const double w = h[6] * x + h[7] * y + h[8];
        return std::array<double, 2>{(h[0] * x + h[1] * y + h[2]) / w, (h[3] * x + h[4] * y + h[5]) / w};
    };
    const auto j = linearize_homography(h, cx, cy);
    const auto px = map(cx + e, cy), mx = map(cx - e, cy), py = map(cx, cy + e), my = map(cx, cy - e);
    EXPECT_NEAR(j.a11, (px[0] - mx[0]) / (2 * e), 1e-6);
    EXPECT_NEAR(j.a21, (px[1] - mx[1]) / (2 * e), 1e-6);
    EXPECT_NEAR(j.a12, (py[0] - my[0]) / (2 * e), 1e-6);
    EXPECT_NEAR(j.a22, (py[1] - my[1]) / (2 * e), 1e-6);
}

TEST(LinearizeHomography, PointAtInfinityThrows)
{
    const Matrix3 h{1, 0, 0, 0, 1, 0, 1, 0, -10};
    EXPECT_THROW(linearize_homography(h, 10, 3), std::domain_error);
}

#include "mods/affine.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace mods {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double angle, double period)
{
    double r = std::fmod(angle, period);
    if (r < 0.0)
        r += period;
    // fmod can return `period` after the correction for tiny negatives.
    return r >= period ? 0.0 : r;
}

}  // namespace

AffineDecomposition decompose_affine(const AffineMap2D& a)
{
    const double det = a.det();
    if (!(det > 0.0))
        throw std::invalid_argument("decompose_affine: determinant must be positive");

    Eigen::Matrix2d m;
    m << a.a11, a.a12, a.a21, a.a22;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector2d s = svd.singularValues();
    if (s(1) <= 0.0 || s(0) / s(1) > 1e12)
        throw std::invalid_argument("decompose_affine: matrix is near-singular");

    Eigen::Matrix2d u = svd.matrixU();
    Eigen::Matrix2d v = svd.matrixV();
    // det(A) > 0 implies det(U) == det(V); make both proper rotations.
    if (u.determinant() < 0.0) {
        u.col(1) *= -1.0;
        v.col(1) *= -1.0;
    }

    AffineDecomposition d;
    d.lambda = s(1);
    d.tilt = s(0) / s(1);
    if (d.tilt - 1.0 < 1e-12) {
        // Similarity: longitude is undefined, fold everything into psi.
        d.tilt = 1.0;
        d.phi = 0.0;
        const Eigen::Matrix2d r = m / d.lambda;
        d.psi = wrap(std::atan2(r(1, 0), r(0, 0)), 2.0 * kPi);
        return d;
    }
    const Eigen::Matrix2d vt = v.transpose();
    double psi = std::atan2(u(1, 0), u(0, 0));
    double phi = std::atan2(vt(1, 0), vt(0, 0));
    // R(phi + pi) = -R(phi): shift both rotations by pi to bring phi into [0, pi).
    if (phi < 0.0 || phi >= kPi) {
        phi += kPi;
        psi += kPi;
    }
    d.psi = wrap(psi, 2.0 * kPi);
    d.phi = wrap(phi, kPi);
    return d;
}

AffineMap2D compose_affine(const AffineDecomposition& d)
{
    const AffineMap2D r1 = AffineMap2D::rotation(d.psi);
    const AffineMap2D r2 = AffineMap2D::rotation(d.phi);
    const AffineMap2D t = AffineMap2D::scaling(d.lambda * d.tilt, d.lambda);
    return r1.after(t).after(r2);
}

double affine_tilt(const AffineMap2D& a)
{
    Eigen::Matrix2d m;
    m << a.a11, a.a12, a.a21, a.a22;
    const Eigen::Vector2d s = Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues();
    if (!(s(1) > 0.0))
        throw std::invalid_argument("affine_tilt: singular matrix");
    return s(0) / s(1);
}

AffineMap2D linearize_homography(const Matrix3& h, double x, double y)
{
    const double u = h[0] * x + h[1] * y + h[2];
    const double v = h[3] * x + h[4] * y + h[5];
    const double w = h[6] * x + h[7] * y + h[8];
    const double scale = std::abs(u) + std::abs(v) + std::abs(w);
    if (!(std::abs(w) > 1e-12 * scale))
        throw std::domain_error("linearize_homography: point maps to the line at infinity");
    const double w2 = w * w;
    AffineMap2D j;
    j.a11 = (h[0] * w - u * h[6]) / w2;
    j.a12 = (h[1] * w - u * h[7]) / w2;
    j.a21 = (h[3] * w - v * h[6]) / w2;
    j.a22 = (h[4] * w - v * h[7]) / w2;
    j.tx = u / w - (j.a11 * x + j.a12 * y);
    j.ty = v / w - (j.a21 * x + j.a22 * y);
    return j;
}

double transition_tilt(const Matrix3& h, double cx, double cy)
{
    const AffineMap2D j = linearize_homography(h, cx, cy);
    if (j.det() > 0.0)
        return decompose_affine(j).tilt;
    return affine_tilt(j);
}

double latitude_to_tilt(double theta_deg)
{
    if (!(theta_deg >= 0.0) || theta_deg >= 90.0)
        throw std::invalid_argument("latitude_to_tilt: latitude must lie in [0, 90)");
    return 1.0 / std::cos(theta_deg * kPi / 180.0);
}

}  // namespace mods

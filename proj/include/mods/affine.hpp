#pragma once

#include <array>

#include "mods/image.hpp"

namespace mods {

/// A = lambda * R(psi) * diag(tilt, 1) * R(phi)
struct AffineDecomposition {
    double lambda = 1.0;
    double psi = 0.0;   // [0, 2pi)
    double tilt = 1.0;  // >= 1
    double phi = 0.0;   // [0, pi)
};

/// 3x3 row-major homography.
using Matrix3 = std::array<double, 9>;

/// Factorizes the linear part of `a` via SVD. Throws std::invalid_argument
/// for det <= 0 or a condition number above 1e12.
AffineDecomposition decompose_affine(const AffineMap2D& a);

/// Inverse of decompose_affine (linear part only, zero translation).
AffineMap2D compose_affine(const AffineDecomposition& d);

/// Ratio of singular values of the linear part; orientation-reversing maps allowed.
double affine_tilt(const AffineMap2D& a);

/// Jacobian of the projective map x -> H x at `center`.
/// Throws std::domain_error when the point maps to infinity.
AffineMap2D linearize_homography(const Matrix3& h, double cx, double cy);

/// Tilt of the affine approximation of H at `center`.
double transition_tilt(const Matrix3& h, double cx, double cy);

/// t = 1 / cos(theta); theta in degrees, [0, 90).
double latitude_to_tilt(double theta_deg);

}  // namespace mods

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mods/affine.hpp"
#include "mods/matcher.hpp"

namespace mods {

enum class GeometryModel { HOMOGRAPHY, FUNDAMENTAL };

struct PointPair {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

std::vector<PointPair> to_point_pairs(const std::vector<TentativeCorrespondence>& tcs);

struct TwoViewGeometry {
    GeometryModel model = GeometryModel::HOMOGRAPHY;
    /// Homography: largest |entry| is exactly 1. Fundamental: rank 2, unit
    /// Frobenius norm.
    Matrix3 M{};
    std::vector<bool> inlier_mask;
    int iterations_run = 0;
    std::uint64_t seed = 0;

    int inlier_count() const;
};

struct RansacParams {
    GeometryModel model = GeometryModel::HOMOGRAPHY;
    double threshold = 3.0;  // pixels
    double confidence = 0.99;
    int max_iterations = 10000;
    std::uint64_t seed = 0;
};

/// Raised when no hypothesis gathers a minimal sample worth of inliers.
class NoModelFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive LO-RANSAC. Throws std::invalid_argument for fewer than 4 (H) or
/// 7 (F) pairs and NoModelFound when verification fails.
TwoViewGeometry estimate_lo_ransac(const std::vector<PointPair>& pairs, const RansacParams& params);

/// Same, returning std::nullopt instead of throwing for either failure.
std::optional<TwoViewGeometry> try_estimate(const std::vector<PointPair>& pairs, const RansacParams& params);

/// Normalized DLT homography through all pairs (least squares for n > 4).
/// Throws std::invalid_argument for fewer than 4 pairs.
Matrix3 fit_homography(const std::vector<PointPair>& pairs);

/// Normalized 8-point fundamental matrix with rank 2 enforced.
Matrix3 fit_fundamental(const std::vector<PointPair>& pairs);

/// Up to three rank-2 solutions through exactly 7 pairs.
std::vector<Matrix3> fundamental_7point(const std::vector<PointPair>& pairs);

/// Applies H to (x, y). Throws std::domain_error when the point maps to infinity.
std::array<double, 2> apply_homography(const Matrix3& h, double x, double y);

Matrix3 invert(const Matrix3& m);

/// sqrt(|x2 - H x1|^2 + |x1 - H^-1 x2|^2). Throws std::domain_error for a
/// point mapped to infinity.
double symmetric_transfer_error(const Matrix3& h, const PointPair& p);

/// First-order geometric error of x2^T F x1 = 0, in pixels.
double sampson_error(const Matrix3& f, const PointPair& p);

struct GroundTruthScore {
    int correct_inliers = 0;
    int inliers = 0;
    int correct_matches = 0;
    int tentatives = 0;
    /// 100 * correct_matches / tentatives (0 for an empty set).
    double correct_pct = 0.0;
};

/// A correspondence is correct when its symmetric transfer error under H_gt is
/// at most `tol`. `geom` may be absent, in which case no pair is an inlier.
GroundTruthScore score_against_ground_truth(const TwoViewGeometry* geom,
    const std::vector<TentativeCorrespondence>& tcs, const Matrix3& h_gt, double tol = 3.0);

/// Three lines of three numbers, row-major.
Matrix3 read_homography(std::istream& in);
void write_homography(std::ostream& out, const Matrix3& h);

}  // namespace mods

#pragma once

#include <vector>

#include "mods/frame.hpp"
#include "mods/image.hpp"

namespace mods {

struct DetectorParams {
    // Difference of Gaussians.
    int dog_scales_per_octave = 3;
    double dog_initial_sigma = 1.6;
    double dog_contrast_threshold = 0.03;  // |DoG| at the refined extremum, [0,1] intensities
    double dog_edge_ratio = 10.0;

    // Hessian-Affine.
    int hessian_scales_per_octave = 3;
    double hessian_initial_sigma = 1.6;
    double hessian_top_k_per_megapixel = 3000.0;
    double hessian_min_response = 1e-5;  // noise floor on the scale-normalized determinant
    int affine_max_iterations = 16;
    double affine_convergence = 0.05;     // 1 - l_min / l_max of the second-moment matrix
    double affine_max_anisotropy = 6.0;   // axis ratio of the adapted shape

    // MSER.
    int mser_delta = 5;                    // in 8-bit levels
    int mser_min_area = 30;                // pixels
    double mser_max_area_fraction = 0.01;  // of the image area
    double mser_max_variation = 0.25;
    double mser_min_diversity = 0.2;

    /// Throws std::invalid_argument when a threshold is out of range.
    void validate() const;
};

/// Similarity-covariant DoG extrema; frames are circular, shape = scale * I
/// with scale = sqrt(2) * sigma. Requires an image of at least 32x32.
std::vector<AffineFrame> detect_dog(const Image& img, const DetectorParams& p = {});

/// Hessian-determinant extrema followed by Baumberg affine shape adaptation;
/// shape = scale * U with det(U) = 1. Requires an image of at least 32x32.
std::vector<AffineFrame> detect_hessian_affine(const Image& img, const DetectorParams& p = {});

/// Maximally stable extremal regions of both polarities on the 8-bit
/// quantized image; each region becomes centroid + 2 * sqrt(covariance).
std::vector<AffineFrame> detect_mser(const Image& img, const DetectorParams& p = {});

/// Same as detect_mser on an already quantized 8-bit raster (row-major).
std::vector<AffineFrame> detect_mser_levels(const std::vector<unsigned char>& levels, int width,
    int height, const DetectorParams& p = {});

std::vector<AffineFrame> detect(DetectorKind kind, const Image& img, const DetectorParams& p = {});

}  // namespace mods

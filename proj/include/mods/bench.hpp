#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mods/affine.hpp"
#include "mods/image_io.hpp"
#include "mods/mods.hpp"

namespace mods {

struct SyntheticPair {
    Image image;
    Matrix3 h_gt{};  // original -> synthetic, last row (0, 0, 1)
};

/// Tilted view at latitude theta: t = 1 / cos(theta), phi = 0, sigma_base 0.8.
/// A positive `noise_sigma` adds seeded Gaussian noise to the output.
/// Throws std::invalid_argument for theta outside [0, 90).
SyntheticPair gen_synthetic_pair(const Image& img, double theta_deg, std::uint64_t seed = 0,
    double noise_sigma = 0.0);

/// Downsampled view by factor lambda >= 1 (sigma_base 0.8).
SyntheticPair gen_scaled_pair(const Image& img, double lambda, std::uint64_t seed = 0, double noise_sigma = 0.0);

/// Nearest-rank quantile: element ceil(q n) - 1 of the sorted values.
/// Throws std::invalid_argument for an empty list or q outside (0, 1).
double robust_quantile(std::vector<double> values, double q);

enum class SweepKind { TILT, SCALE };

struct SweepSpec {
    SweepKind kind = SweepKind::TILT;
    /// Latitudes in degrees (tilt sweep) or downsampling factors (scale sweep).
    std::vector<double> params;
    std::vector<NamedConfig> configs;
    MatchKind match_kind = MatchKind::FIRST_GEOM_INCONSISTENT;
    int n_images = 0;  // 0: all
    double quantile = 0.04;
    double tolerance = 3.0;  // pixels, correctness under H_gt
    std::uint64_t seed = 0;
    int threads = 0;
    bool timing = false;  // wall-clock columns stay 0 unless set

    void validate() const;
};

struct SweepCell {
    std::string config;
    double param = 0;
    int n = 0;                      // images
    double robust_min_correct = 0;  // quantile of the per-image correct matches
    double mean_correct = 0;
    double mean_efficiency = 0;     // correct / query descriptors
    double mean_regions = 0;
    double mean_time_ms = 0;

    friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

struct SweepReport {
    SweepKind kind = SweepKind::TILT;
    std::vector<SweepCell> cells;  // by config order, then parameter

    friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

/// One image's outcome for a (config, parameter) cell.
struct PairOutcome {
    int correct = 0;
    int tentatives = 0;
    int regions1 = 0;
    int regions2 = 0;
    double time_ms = 0;
};

/// Matches `img` against its synthetic counterpart with one configuration
/// applied to both images and counts tentatives that agree with H_gt.
PairOutcome evaluate_pair(const Image& img, const SyntheticPair& pair, const NamedConfig& config,
    MatchKind match_kind, double tolerance, int threads = 0);

SweepReport run_sweep(const SweepSpec& spec, const std::vector<Image>& images);
SweepReport run_tilt_sweep(SweepSpec spec, const std::filesystem::path& image_dir);
SweepReport run_scale_sweep(SweepSpec spec, const std::filesystem::path& image_dir);

/// Image files (png, jpg, jpeg, pgm) in a directory sorted by name; with
/// n > 0 a seeded subset of n files, still sorted. Throws ImageIoError when
/// the directory is missing or holds no images.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir, int n, std::uint64_t seed);

/// Header `kind,config,param,n,robust_min_correct,mean_correct,mean_efficiency,mean_regions,mean_time_ms`.
void write_sweep_csv(std::ostream& out, const SweepReport& report);
SweepReport read_sweep_csv(std::istream& in);

/// Side-by-side canvas (w1 + w2) x max(h1, h2). Inlier pairs are joined by
/// lines and marked with blue dots; with H_gt, the reprojection of each
/// image-1 center is marked in green. A legend sits in the top-left corner
/// unless there is nothing to draw.
RgbImage render_match_overlay(const Image& img1, const Image& img2, const ModsResult& result,
    const Matrix3* h_gt = nullptr);

}  // namespace mods

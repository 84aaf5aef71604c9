#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mods/descriptor.hpp"
#include "mods/detectors.hpp"
#include "mods/matcher.hpp"
#include "mods/verify.hpp"
#include "mods/view_synthesis.hpp"

namespace mods {

struct ModsStage {
    DetectorKind detector = DetectorKind::MSER;
    SynthesisConfig config;
    std::string label;
};

/// The four default steps: MSER scale-only, MSER tilts {1,5,9},
/// Hessian-Affine sparse tilts, Hessian-Affine dense tilts.
std::vector<ModsStage> default_stages();

ModsStage stage_from_preset(const std::string& name);

/// Milliseconds per pipeline phase. View phases are summed over views, so
/// with several threads they can exceed wall-clock time.
struct PhaseTiming {
    double synthesis = 0;
    double detection = 0;
    double description = 0;
    double matching = 0;
    double ransac = 0;

    double total() const { return synthesis + detection + description + matching + ransac; }
    PhaseTiming& operator+=(const PhaseTiming& o);
};

struct StageReport {
    std::string label;
    DetectorKind detector = DetectorKind::MSER;
    int views = 0;          // synthesized in this stage, per image
    int views_skipped = 0;  // already synthesized by an earlier stage
    int regions1 = 0;       // accumulated descriptors after the stage
    int regions2 = 0;
    int tentatives = 0;
    int inliers = 0;
    PhaseTiming timing;
    double wall_ms = 0;
};

struct ModsOptions {
    int theta_m = 15;
    int s_max = 0;  // 0: all stages
    GeometryModel model = GeometryModel::HOMOGRAPHY;
    double ransac_threshold = 3.0;
    double ransac_confidence = 0.99;
    int ransac_max_iterations = 10000;
    std::uint64_t seed = 0;
    MatchKind match_kind = MatchKind::FIRST_GEOM_INCONSISTENT;
    /// Ratio thresholds indexed by DetectorKind (MSER, HESSAFF, DOG).
    std::array<double, 3> ratio{0.85, 0.8, 0.85};
    double inconsistency_radius = 10.0;
    double duplicate_radius = 4.0;
    DetectorParams detector_params;
    IndexParams index_params;
    /// Worker threads for view processing; 0 reads MODS_THREADS, falling back
    /// to the hardware concurrency.
    int threads = 0;

    void validate(std::size_t n_stages) const;
};

struct ModsResult {
    std::optional<TwoViewGeometry> geometry;  // present only with >= theta_m inliers
    std::vector<TentativeCorrespondence> correspondences;
    int stage_reached = 0;  // 1-based
    int n_matches = 0;
    std::vector<StageReport> stages;

    PhaseTiming total_timing() const;
};

ModsResult run_mods(const Image& img1, const Image& img2, const std::vector<ModsStage>& stages,
    const ModsOptions& options = {});

/// Features of one image from every view of a configuration (no matching).
/// Frames are backprojected to image coordinates; `timing` is accumulated.
FeatureSet extract_features(const Image& img, DetectorKind detector, const SynthesisConfig& cfg,
    const DetectorParams& params = {}, PhaseTiming* timing = nullptr, int threads = 0);

/// Number of worker threads: `requested` if > 0, else MODS_THREADS, else the
/// hardware concurrency (at least 1).
int resolve_threads(int requested);

}  // namespace mods

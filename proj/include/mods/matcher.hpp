#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mods/descriptor.hpp"
#include "mods/frame.hpp"

namespace mods {

struct IndexParams {
    int trees = 4;
    int checks = 128;               // leaf points examined per query
    std::size_t exact_below = 2000;  // brute force for smaller sets
    std::uint64_t seed = 0;
};

struct Neighbor {
    int index = 0;
    double distance = 0.0;  // Euclidean
};

/// k-nearest-neighbor search over descriptors: randomized kd-trees with a
/// shared priority queue, or an exact scan for small sets. Immutable after
/// construction, so concurrent queries are safe.
class NNIndex {
public:
    /// Throws std::invalid_argument for an empty set.
    explicit NNIndex(std::vector<Descriptor> descriptors, const IndexParams& params = {});
    ~NNIndex();
    NNIndex(NNIndex&&) noexcept;
    NNIndex& operator=(NNIndex&&) noexcept;

    /// Up to k neighbors sorted by distance, ties by index.
    std::vector<Neighbor> knn(const Descriptor& query, int k) const;
    std::vector<Neighbor> knn_exact(const Descriptor& query, int k) const;

    std::size_t size() const { return data_.size(); }
    bool exact() const { return trees_.empty(); }
    const Descriptor& descriptor(int i) const { return data_[i]; }

    struct Tree;

private:
    std::vector<Descriptor> data_;
    std::vector<Tree> trees_;
    IndexParams params_;
};

enum class MatchKind { SECOND_NEAREST, FIRST_GEOM_INCONSISTENT };

struct MatchStrategy {
    MatchKind kind = MatchKind::FIRST_GEOM_INCONSISTENT;
    double threshold = 0.8;
    double inconsistency_radius = 10.0;  // pixels, in image 2
    int neighbors = 10;
    int widened_neighbors = 50;
    bool mutual = false;  // keep only pairs that are also nearest from image 2

    /// Throws std::invalid_argument unless 0 < threshold < 1 and radius > 0.
    void validate() const;
};

/// Ratio thresholds per detector family: MSER 0.85, DoG 0.85, Hessian-Affine 0.8.
double default_ratio_threshold(DetectorKind kind);

struct TentativeCorrespondence {
    AffineFrame frame1;
    AffineFrame frame2;
    double ratio = 0.0;
    int duplicate_count = 1;
    int index1 = -1;  // into the query feature set
    int index2 = -1;  // into the indexed feature set
};

/// Nearest descriptor over the nearest one whose frame center lies at least
/// inconsistency_radius away from the nearest's center. No such neighbor among
/// `neighbors`, then `widened_neighbors`, gives ratio 0.
std::vector<TentativeCorrespondence> match_first_inconsistent(const FeatureSet& query,
    const FeatureSet& indexed, const NNIndex& index, const MatchStrategy& s);

/// Classic nearest / second-nearest ratio; an index of one entry gives ratio 0.
std::vector<TentativeCorrespondence> match_second_nearest(const FeatureSet& query,
    const FeatureSet& indexed, const NNIndex& index, const MatchStrategy& s);

/// Builds an index over `indexed` and dispatches on the strategy kind.
std::vector<TentativeCorrespondence> match_features(const FeatureSet& query, const FeatureSet& indexed,
    const MatchStrategy& s, const IndexParams& params = {});

/// Greedy merge in (ratio, coordinates) order: a correspondence whose centers
/// lie within `radius` of a kept one in both images is folded into it.
std::vector<TentativeCorrespondence> filter_duplicates(std::vector<TentativeCorrespondence> tcs,
    double radius = 4.0);

/// Header plus `x1,y1,x2,y2,ratio,duplicate_count,detector` rows.
void write_correspondences_csv(std::ostream& out, const std::vector<TentativeCorrespondence>& tcs);
std::vector<TentativeCorrespondence> read_correspondences_csv(std::istream& in);

}  // namespace mods

#include "mods/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace mods {

namespace {

double squared_distance(const Descriptor& a, const Descriptor& b)
{
    double s = 0;
    for (int i = 0; i < 128; ++i) {
        const double t = static_cast<double>(a.values[i]) - b.values[i];
        s += t * t;
    }
    return s;
}

// Best k candidates, kept sorted by (distance, index).
class KnnSet {
public:
    explicit KnnSet(int k) : k_(static_cast<std::size_t>(k)) {}

    bool full() const { return items_.size() >= k_; }
    double worst() const { return full() ? items_.back().distance : INFINITY; }

    void add(int index, double d2)
    {
        if (full() && !less(d2, index, items_.back()))
            return;
        Neighbor n{index, d2};
        auto pos = std::upper_bound(items_.begin(), items_.end(), n,
            [](const Neighbor& a, const Neighbor& b) { return less(a.distance, a.index, b); });
        items_.insert(pos, n);
        if (items_.size() > k_)
            items_.pop_back();
    }

    std::vector<Neighbor> finish()
    {
        for (auto& n : items_)
            n.distance = std::sqrt(n.distance);
        return std::move(items_);
    }

private:
    static bool less(double d, int i, const Neighbor& b) { return d < b.distance || (d == b.distance && i < b.index); }
    std::size_t k_;
    std::vector<Neighbor> items_;
};

double ratio_of(double nearest, double denominator)
{
    if (denominator == 0.0)
        return 1.0;
    return nearest / denominator;
}

}  // namespace

struct NNIndex::Tree {
    struct Node {
        int left = -1, right = -1;  // -1: leaf
        int dim = 0;
        float split = 0.0f;
        int point = -1;
    };
    std::vector<Node> nodes;
};

namespace {

constexpr int kTopDims = 5;
constexpr std::size_t kVarianceSample = 100;

int build_node(NNIndex::Tree& tree, const std::vector<Descriptor>& data, int* idx, int count,
    std::mt19937_64& rng);

}  // namespace

NNIndex::NNIndex(std::vector<Descriptor> descriptors, const IndexParams& params)
    : data_(std::move(descriptors)), params_(params)
{
    if (data_.empty())
        throw std::invalid_argument("NNIndex: empty descriptor set");
    if (params_.trees < 1 || params_.checks < 1)
        throw std::invalid_argument("NNIndex: trees and checks must be >= 1");
    if (data_.size() < params_.exact_below)
        return;
    std::mt19937_64 rng(params_.seed);
    std::vector<int> idx(data_.size());
    for (int t = 0; t < params_.trees; ++t) {
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        Tree tree;
        tree.nodes.reserve(2 * data_.size());
        build_node(tree, data_, idx.data(), static_cast<int>(idx.size()), rng);
        trees_.push_back(std::move(tree));
    }
}

NNIndex::~NNIndex() = default;
NNIndex::NNIndex(NNIndex&&) noexcept = default;
NNIndex& NNIndex::operator=(NNIndex&&) noexcept = default;

namespace {

int build_node(NNIndex::Tree& tree, const std::vector<Descriptor>& data, int* idx, int count,
    std::mt19937_64& rng)
{
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (count == 1) {
        tree.nodes[id].point = idx[0];
        return id;
    }
    const std::size_t n = std::min<std::size_t>(count, kVarianceSample);
    std::array<double, 128> mean{}, var{};
    for (std::size_t i = 0; i < n; ++i)
        for (int d = 0; d < 128; ++d)
            mean[d] += data[idx[i]].values[d];
    for (double& m : mean)
        m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (int d = 0; d < 128; ++d) {
            const double t = data[idx[i]].values[d] - mean[d];
            var[d] += t * t;
        }
    std::array<int, 128> dims;
    std::iota(dims.begin(), dims.end(), 0);
    std::partial_sort(dims.begin(), dims.begin() + kTopDims, dims.end(),
        [&](int a, int b) { return var[a] > var[b] || (var[a] == var[b] && a < b); });
    const int dim = dims[std::uniform_int_distribution<int>(0, kTopDims - 1)(rng)];
    float split = static_cast<float>(mean[dim]);

    int* mid = std::partition(idx, idx + count, [&](int i) { return data[i].values[dim] < split; });
    int left = static_cast<int>(mid - idx);
    if (left == 0 || left == count) {
        left = count / 2;
        std::nth_element(idx, idx + left, idx + count, [&](int a, int b) {
            return data[a].values[dim] < data[b].values[dim] || (data[a].values[dim] == data[b].values[dim] && a < b);
        });
        split = data[idx[left]].values[dim];
    }
    tree.nodes[id].dim = dim;
    tree.nodes[id].split = split;
    const int l = build_node(tree, data, idx, left, rng);
    const int r = build_node(tree, data, idx + left, count - left, rng);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
}

}  // namespace

std::vector<Neighbor> NNIndex::knn_exact(const Descriptor& query, int k) const
{
    KnnSet set(std::max(k, 0));
    if (k <= 0)
        return {};
    for (std::size_t i = 0; i < data_.size(); ++i)
        set.add(static_cast<int>(i), squared_distance(query, data_[i]));
    return set.finish();
}

std::vector<Neighbor> NNIndex::knn(const Descriptor& query, int k) const
{
    if (k <= 0)
        return {};
    if (trees_.empty())
        return knn_exact(query, k);

    struct Branch {
        double mindist;
        int tree, node;
        bool operator>(const Branch& o) const
        {
            return mindist > o.mindist || (mindist == o.mindist && (tree > o.tree || (tree == o.tree && node > o.node)));
        }
    };
    std::priority_queue<Branch, std::vector<Branch>, std::greater<>> heap;
    std::unordered_set<int> visited;
    visited.reserve(2 * params_.checks + 2 * k);
    KnnSet set(k);
    int checks = 0;

    auto descend = [&](int t, int node, double mindist) {
        const auto& nodes = trees_[t].nodes;
        while (nodes[node].left >= 0) {
            const auto& nd = nodes[node];
            const double diff = query.values[nd.dim] - nd.split;
            const int near = diff < 0 ? nd.left : nd.right;
            const int far = diff < 0 ? nd.right : nd.left;
            const double d = mindist + diff * diff;
            if (d < set.worst())
                heap.push({d, t, far});
            node = near;
        }
        const int p = nodes[node].point;
        if (visited.insert(p).second) {
            set.add(p, squared_distance(query, data_[p]));
            ++checks;
        }
    };

    for (int t = 0; t < static_cast<int>(trees_.size()); ++t)
        descend(t, 0, 0.0);
    while (!heap.empty() && (checks < params_.checks || !set.full())) {
        const Branch b = heap.top();
        heap.pop();
        if (set.full() && b.mindist >= set.worst())
            continue;
        descend(b.tree, b.node, b.mindist);
    }
    return set.finish();
}

void MatchStrategy::validate() const
{
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("MatchStrategy: threshold must lie in (0,1)");
    if (!(inconsistency_radius > 0.0))
        throw std::invalid_argument("MatchStrategy: inconsistency radius must be positive");
    if (neighbors < 2 || widened_neighbors < neighbors)
        throw std::invalid_argument("MatchStrategy: invalid neighbor counts");
}

double default_ratio_threshold(DetectorKind kind)
{
    switch (kind) {
    case DetectorKind::MSER: return 0.85;
    case DetectorKind::DOG: return 0.85;
    case DetectorKind::HESSAFF: return 0.8;
    }
    return 0.8;
}

namespace {

void check_inputs(const FeatureSet& query, const FeatureSet& indexed, const NNIndex& index)
{
    if (query.frames.size() != query.descriptors.size() || indexed.frames.size() != indexed.descriptors.size())
        throw std::invalid_argument("matcher: frames and descriptors differ in length");
    if (index.size() != indexed.size())
        throw std::invalid_argument("matcher: index does not cover the indexed feature set");
}

TentativeCorrespondence make_tc(const FeatureSet& query, const FeatureSet& indexed, int i, int j, double ratio)
{
    TentativeCorrespondence tc;
    tc.frame1 = query.frames[i];
    tc.frame2 = indexed.frames[j];
    tc.ratio = ratio;
    tc.index1 = i;
    tc.index2 = j;
    return tc;
}

}  // namespace

std::vector<TentativeCorrespondence> match_first_inconsistent(const FeatureSet& query,
    const FeatureSet& indexed, const NNIndex& index, const MatchStrategy& s)
{
    s.validate();
    check_inputs(query, indexed, index);
    const double r2 = s.inconsistency_radius * s.inconsistency_radius;
    std::vector<TentativeCorrespondence> out;
    for (std::size_t i = 0; i < query.size(); ++i) {
        const Descriptor& q = query.descriptors[i];
        auto nn = index.knn(q, s.neighbors);
        if (nn.empty())
            continue;
        const AffineFrame& first = indexed.frames[nn[0].index];
        auto find_inconsistent = [&](const std::vector<Neighbor>& list) -> const Neighbor* {
            for (std::size_t j = 1; j < list.size(); ++j) {
                const AffineFrame& f = indexed.frames[list[j].index];
                const double dx = f.x - first.x, dy = f.y - first.y;
                if (dx * dx + dy * dy >= r2)
                    return &list[j];
            }
            return nullptr;
        };
        const Neighbor* inc = find_inconsistent(nn);
        if (!inc && nn.size() == static_cast<std::size_t>(s.neighbors) && index.size() > nn.size()) {
            nn = index.knn(q, s.widened_neighbors);
            inc = find_inconsistent(nn);
        }
        const double ratio = inc ? ratio_of(nn[0].distance, inc->distance) : 0.0;
        if (ratio <= s.threshold)
            out.push_back(make_tc(query, indexed, static_cast<int>(i), nn[0].index, ratio));
    }
    return out;
}

std::vector<TentativeCorrespondence> match_second_nearest(const FeatureSet& query,
    const FeatureSet& indexed, const NNIndex& index, const MatchStrategy& s)
{
    s.validate();
    check_inputs(query, indexed, index);
    std::vector<TentativeCorrespondence> out;
    for (std::size_t i = 0; i < query.size(); ++i) {
        const auto nn = index.knn(query.descriptors[i], 2);
        if (nn.empty())
            continue;
        const double ratio = nn.size() < 2 ? 0.0 : ratio_of(nn[0].distance, nn[1].distance);
        if (ratio <= s.threshold)
            out.push_back(make_tc(query, indexed, static_cast<int>(i), nn[0].index, ratio));
    }
    return out;
}

std::vector<TentativeCorrespondence> match_features(const FeatureSet& query, const FeatureSet& indexed,
    const MatchStrategy& s, const IndexParams& params)
{
    if (query.size() == 0 || indexed.size() == 0)
        return {};
    const NNIndex index(indexed.descriptors, params);
    auto out = s.kind == MatchKind::FIRST_GEOM_INCONSISTENT ? match_first_inconsistent(query, indexed, index, s)
                                                            : match_second_nearest(query, indexed, index, s);
    if (s.mutual) {
        const NNIndex back(query.descriptors, params);
        std::erase_if(out, [&](const TentativeCorrespondence& tc) {
            const auto nn = back.knn(indexed.descriptors[tc.index2], 1);
            return nn.empty() || nn[0].index != tc.index1;
        });
    }
    return out;
}

std::vector<TentativeCorrespondence> filter_duplicates(std::vector<TentativeCorrespondence> tcs, double radius)
{
    std::stable_sort(tcs.begin(), tcs.end(), [](const TentativeCorrespondence& a, const TentativeCorrespondence& b) {
        if (a.ratio != b.ratio)
            return a.ratio < b.ratio;
        if (a.frame1.x != b.frame1.x)
            return a.frame1.x < b.frame1.x;
        if (a.frame1.y != b.frame1.y)
            return a.frame1.y < b.frame1.y;
        if (a.frame2.x != b.frame2.x)
            return a.frame2.x < b.frame2.x;
        return a.frame2.y < b.frame2.y;
    });
    if (!(radius > 0.0))
        return tcs;

    // Kept correspondences bucketed by their image-1 center.
    const double cell = radius;
    auto key = [](long long cx, long long cy) { return (cx << 32) ^ (cy & 0xffffffffLL); };
    std::unordered_map<long long, std::vector<int>> grid;
    std::vector<TentativeCorrespondence> kept;
    const double r2 = radius * radius;
    for (auto& tc : tcs) {
        const long long cx = static_cast<long long>(std::floor(tc.frame1.x / cell));
        const long long cy = static_cast<long long>(std::floor(tc.frame1.y / cell));
        int target = -1;
        for (long long gy = cy - 1; gy <= cy + 1; ++gy) {
            for (long long gx = cx - 1; gx <= cx + 1; ++gx) {
                auto it = grid.find(key(gx, gy));
                if (it == grid.end())
                    continue;
                for (int k : it->second) {
                    const auto& o = kept[k];
                    const double d1x = o.frame1.x - tc.frame1.x, d1y = o.frame1.y - tc.frame1.y;
                    const double d2x = o.frame2.x - tc.frame2.x, d2y = o.frame2.y - tc.frame2.y;
                    if (d1x * d1x + d1y * d1y <= r2 && d2x * d2x + d2y * d2y <= r2 && (target < 0 || k < target))
                        target = k;
                }
            }
        }
        if (target >= 0) {
            kept[target].duplicate_count += tc.duplicate_count;
            continue;
        }
        grid[key(cx, cy)].push_back(static_cast<int>(kept.size()));
        kept.push_back(tc);
    }
    return kept;
}

void write_correspondences_csv(std::ostream& out, const std::vector<TentativeCorrespondence>& tcs)
{
    out << "x1,y1,x2,y2,ratio,duplicate_count,detector\n";
    char buf[256];
    for (const auto& tc : tcs) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%d,%s\n", tc.frame1.x, tc.frame1.y, tc.frame2.x,
            tc.frame2.y, tc.ratio, tc.duplicate_count, std::string(to_string(tc.frame1.detector)).c_str());
        out << buf;
    }
}

std::vector<TentativeCorrespondence> read_correspondences_csv(std::istream& in)
{
    std::vector<TentativeCorrespondence> tcs;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (header) {
            header = false;
            if (line.rfind("x1,", 0) == 0)
                continue;
        }
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> f;
        while (std::getline(ls, field, ','))
            f.push_back(field);
        if (f.size() != 7)
            throw std::runtime_error("read_correspondences_csv: expected 7 fields: " + line);
        TentativeCorrespondence tc;
        try {
            tc.frame1.x = std::stod(f[0]);
            tc.frame1.y = std::stod(f[1]);
            tc.frame2.x = std::stod(f[2]);
            tc.frame2.y = std::stod(f[3]);
            tc.ratio = std::stod(f[4]);
            tc.duplicate_count = std::stoi(f[5]);
        } catch (const std::exception&) {
            throw std::runtime_error("read_correspondences_csv: malformed number: " + line);
        }
        const auto det = parse_detector(f[6]);
        if (!det)
            throw std::runtime_error("read_correspondences_csv: unknown detector '" + f[6] + "'");
        tc.frame1.detector = tc.frame2.detector = *det;
        tcs.push_back(tc);
    }
    return tcs;
}

}  // namespace mods

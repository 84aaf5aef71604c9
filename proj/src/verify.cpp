#include "mods/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Dense>

namespace mods {

namespace {

using Mat3 = Eigen::Matrix3d;

Mat3 to_eigen(const Matrix3& m)
{
    Mat3 e;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            e(r, c) = m[r * 3 + c];
    return e;
}

Matrix3 from_eigen(const Mat3& e)
{
    Matrix3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            m[r * 3 + c] = e(r, c);
    return m;
}

// Similarity taking the points to zero mean and mean distance sqrt(2).
Mat3 normalizer(const std::vector<PointPair>& pairs, bool second)
{
    double mx = 0, my = 0;
    for (const auto& p : pairs) {
        mx += second ? p.x2 : p.x1;
        my += second ? p.y2 : p.y1;
    }
    mx /= static_cast<double>(pairs.size());
    my /= static_cast<double>(pairs.size());
    double d = 0;
    for (const auto& p : pairs)
        d += std::hypot((second ? p.x2 : p.x1) - mx, (second ? p.y2 : p.y1) - my);
    d /= static_cast<double>(pairs.size());
    const double s = d > 0 ? std::sqrt(2.0) / d : 1.0;
    Mat3 t;
    t << s, 0, -s * mx, 0, s, -s * my, 0, 0, 1;
    return t;
}

Eigen::Matrix<double, 9, 1> null_vector(const Eigen::Matrix<double, Eigen::Dynamic, 9>& a)
{
    if (a.rows() < 9) {
        Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 9>> svd(a, Eigen::ComputeFullV);
        return svd.matrixV().col(8);
    }
    const Eigen::Matrix<double, 9, 9> ata = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> es(ata);
    return es.eigenvectors().col(0);
}

bool collinear(double ax, double ay, double bx, double by, double cx, double cy)
{
    const double cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    const double scale = std::max({std::hypot(bx - ax, by - ay), std::hypot(cx - ax, cy - ay), 1e-12});
    return std::abs(cross) < 1e-6 * scale * scale;
}

bool degenerate_sample(const std::vector<PointPair>& s)
{
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k)
                if (collinear(s[i].x1, s[i].y1, s[j].x1, s[j].y1, s[k].x1, s[k].y1)
                    || collinear(s[i].x2, s[i].y2, s[j].x2, s[j].y2, s[k].x2, s[k].y2))
                    return true;
    return false;
}

Matrix3 normalize_homography(const Mat3& h)
{
    Matrix3 m = from_eigen(h);
    double big = 0;
    for (double v : m)
        if (std::abs(v) > std::abs(big))
            big = v;
    for (double& v : m)
        v /= big;
    return m;
}

Matrix3 normalize_fundamental(const Mat3& f)
{
    Mat3 g = f / f.norm();
    // Fix the overall sign for reproducible output.
    int arg = 0;
    for (int i = 1; i < 9; ++i)
        if (std::abs(g.data()[i]) > std::abs(g.data()[arg]))
            arg = i;
    if (g.data()[arg] < 0)
        g = -g;
    return from_eigen(g);
}

double transfer_error_or_inf(const Matrix3& h, const Matrix3& hinv, const PointPair& p)
{
    const double w1 = h[6] * p.x1 + h[7] * p.y1 + h[8];
    const double w2 = hinv[6] * p.x2 + hinv[7] * p.y2 + hinv[8];
    if (std::abs(w1) < 1e-12 || std::abs(w2) < 1e-12)
        return std::numeric_limits<double>::infinity();
    const double fx = (h[0] * p.x1 + h[1] * p.y1 + h[2]) / w1 - p.x2;
    const double fy = (h[3] * p.x1 + h[4] * p.y1 + h[5]) / w1 - p.y2;
    const double bx = (hinv[0] * p.x2 + hinv[1] * p.y2 + hinv[2]) / w2 - p.x1;
    const double by = (hinv[3] * p.x2 + hinv[4] * p.y2 + hinv[5]) / w2 - p.y1;
    return std::sqrt(fx * fx + fy * fy + bx * bx + by * by);
}

struct Model {
    Matrix3 m{};
    Matrix3 inv{};  // homography only
};

class Estimator {
public:
    Estimator(const std::vector<PointPair>& pairs, const RansacParams& p) : pairs_(pairs), p_(p) {}

    int sample_size() const { return p_.model == GeometryModel::HOMOGRAPHY ? 4 : 7; }
    int refit_size() const { return p_.model == GeometryModel::HOMOGRAPHY ? 4 : 8; }

    double error(const Model& m, const PointPair& pp) const
    {
        return p_.model == GeometryModel::HOMOGRAPHY ? transfer_error_or_inf(m.m, m.inv, pp) : sampson_error(m.m, pp);
    }

    int count(const Model& m, double thr, std::vector<int>* idx = nullptr) const
    {
        int n = 0;
        if (idx)
            idx->clear();
        for (std::size_t i = 0; i < pairs_.size(); ++i) {
            if (error(m, pairs_[i]) <= thr) {
                ++n;
                if (idx)
                    idx->push_back(static_cast<int>(i));
            }
        }
        return n;
    }

    bool make(const Matrix3& raw, Model& out) const
    {
        for (double v : raw)
            if (!std::isfinite(v))
                return false;
        if (p_.model == GeometryModel::HOMOGRAPHY) {
            const Mat3 h = to_eigen(raw);
            const double det = h.determinant();
            if (!(std::abs(det) > 1e-14 * std::pow(h.norm(), 3)))
                return false;
            out.m = normalize_homography(h);
            out.inv = from_eigen(to_eigen(out.m).inverse());
        } else {
            out.m = raw;
        }
        return true;
    }

    std::vector<Model> minimal(const std::vector<PointPair>& s) const
    {
        std::vector<Model> models;
        if (p_.model == GeometryModel::HOMOGRAPHY) {
            if (degenerate_sample(s))
                return models;
            Model m;
            if (make(fit_homography(s), m))
                models.push_back(m);
        } else {
            for (const auto& f : fundamental_7point(s)) {
                Model m;
                if (make(f, m))
                    models.push_back(m);
            }
        }
        return models;
    }

    bool refit(const std::vector<int>& idx, Model& out) const
    {
        if (static_cast<int>(idx.size()) < refit_size())
            return false;
        std::vector<PointPair> sub;
        sub.reserve(idx.size());
        for (int i : idx)
            sub.push_back(pairs_[i]);
        const Matrix3 raw = p_.model == GeometryModel::HOMOGRAPHY ? fit_homography(sub) : fit_fundamental(sub);
        return make(raw, out);
    }

    // Iterated least squares over inliers with a shrinking threshold; the
    // result replaces `best` only if it does not lose inliers.
    void local_optimization(Model& best, int& best_count) const
    {
        Model cur = best;
        std::vector<int> idx;
        for (double mult : {2.0, 1.5, 1.0}) {
            count(cur, mult * p_.threshold, &idx);
            Model next;
            if (!refit(idx, next))
                break;
            cur = next;
        }
        const int n = count(cur, p_.threshold);
        if (n >= best_count) {
            best = cur;
            best_count = n;
        }
    }

private:
    const std::vector<PointPair>& pairs_;
    RansacParams p_;
};

int required_iterations(double inlier_ratio, int m, double conf, int max_iter)
{
    const double wm = std::pow(inlier_ratio, m);
    if (wm >= 1.0)
        return 1;
    if (wm <= 0.0)
        return max_iter;
    const double k = std::log(1.0 - conf) / std::log(1.0 - wm);
    if (!std::isfinite(k) || k > max_iter)
        return max_iter;
    return std::max(1, static_cast<int>(std::ceil(k)));
}

}  // namespace

std::vector<PointPair> to_point_pairs(const std::vector<TentativeCorrespondence>& tcs)
{
    std::vector<PointPair> out;
    out.reserve(tcs.size());
    for (const auto& tc : tcs)
        out.push_back({tc.frame1.x, tc.frame1.y, tc.frame2.x, tc.frame2.y});
    return out;
}

int TwoViewGeometry::inlier_count() const
{
    return static_cast<int>(std::count(inlier_mask.begin(), inlier_mask.end(), true));
}

Matrix3 fit_homography(const std::vector<PointPair>& pairs)
{
    if (pairs.size() < 4)
        throw std::invalid_argument("fit_homography: need at least 4 pairs");
    const Mat3 t1 = normalizer(pairs, false), t2 = normalizer(pairs, true);
    Eigen::Matrix<double, Eigen::Dynamic, 9> a(2 * pairs.size(), 9);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Eigen::Vector3d p = t1 * Eigen::Vector3d(pairs[i].x1, pairs[i].y1, 1);
        const Eigen::Vector3d q = t2 * Eigen::Vector3d(pairs[i].x2, pairs[i].y2, 1);
        a.row(2 * i) << p.x(), p.y(), 1, 0, 0, 0, -q.x() * p.x(), -q.x() * p.y(), -q.x();
        a.row(2 * i + 1) << 0, 0, 0, p.x(), p.y(), 1, -q.y() * p.x(), -q.y() * p.y(), -q.y();
    }
    const auto v = null_vector(a);
    Mat3 hn;
    hn << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
    const Mat3 h = t2.inverse() * hn * t1;
    return from_eigen(h);
}

namespace {

Eigen::Matrix<double, Eigen::Dynamic, 9> epipolar_rows(const std::vector<PointPair>& pairs, const Mat3& t1,
    const Mat3& t2)
{
    Eigen::Matrix<double, Eigen::Dynamic, 9> a(pairs.size(), 9);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Eigen::Vector3d p = t1 * Eigen::Vector3d(pairs[i].x1, pairs[i].y1, 1);
        const Eigen::Vector3d q = t2 * Eigen::Vector3d(pairs[i].x2, pairs[i].y2, 1);
        a.row(i) << q.x() * p.x(), q.x() * p.y(), q.x(), q.y() * p.x(), q.y() * p.y(), q.y(), p.x(), p.y(), 1;
    }
    return a;
}

Mat3 enforce_rank2(const Mat3& f)
{
    Eigen::JacobiSVD<Mat3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = svd.singularValues();
    s(2) = 0;
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace

Matrix3 fit_fundamental(const std::vector<PointPair>& pairs)
{
    if (pairs.size() < 8)
        throw std::invalid_argument("fit_fundamental: need at least 8 pairs");
    const Mat3 t1 = normalizer(pairs, false), t2 = normalizer(pairs, true);
    const auto v = null_vector(epipolar_rows(pairs, t1, t2));
    Mat3 fn;
    fn << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
    const Mat3 f = t2.transpose() * enforce_rank2(fn) * t1;
    return normalize_fundamental(enforce_rank2(f));
}

std::vector<Matrix3> fundamental_7point(const std::vector<PointPair>& pairs)
{
    if (pairs.size() != 7)
        throw std::invalid_argument("fundamental_7point: need exactly 7 pairs");
    const Mat3 t1 = normalizer(pairs, false), t2 = normalizer(pairs, true);
    const auto a = epipolar_rows(pairs, t1, t2);
    Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 9>> svd(a, Eigen::ComputeFullV);
    Mat3 f1, f2;
    const auto v1 = svd.matrixV().col(7), v2 = svd.matrixV().col(8);
    f1 << v1(0), v1(1), v1(2), v1(3), v1(4), v1(5), v1(6), v1(7), v1(8);
    f2 << v2(0), v2(1), v2(2), v2(3), v2(4), v2(5), v2(6), v2(7), v2(8);

    // det(a f1 + (1 - a) f2) is a cubic in a; recover it from four samples.
    auto d = [&](double x) { return (x * f1 + (1 - x) * f2).determinant(); };
    const double d0 = d(0), d1 = d(1), dm = d(-1), d2 = d(2);
    const double c0 = d0;
    const double c2 = 0.5 * (d1 + dm) - d0;
    const double c3 = (d2 - 2 * d1 + d0 - 2 * c2) / 6.0;
    const double c1 = d1 - c0 - c2 - c3;

    std::vector<double> roots;
    if (std::abs(c3) > 1e-12 * (std::abs(c0) + std::abs(c1) + std::abs(c2))) {
        Mat3 comp = Mat3::Zero();
        comp(0, 0) = -c2 / c3;
        comp(0, 1) = -c1 / c3;
        comp(0, 2) = -c0 / c3;
        comp(1, 0) = 1;
        comp(2, 1) = 1;
        Eigen::EigenSolver<Mat3> es(comp, false);
        for (int i = 0; i < 3; ++i) {
            const auto ev = es.eigenvalues()(i);
            if (std::abs(ev.imag()) < 1e-9 * std::max(1.0, std::abs(ev.real())))
                roots.push_back(ev.real());
        }
    } else if (std::abs(c2) > 1e-15) {
        const double disc = c1 * c1 - 4 * c2 * c0;
        if (disc >= 0) {
            roots.push_back((-c1 + std::sqrt(disc)) / (2 * c2));
            roots.push_back((-c1 - std::sqrt(disc)) / (2 * c2));
        }
    } else if (std::abs(c1) > 1e-15) {
        roots.push_back(-c0 / c1);
    }
    std::sort(roots.begin(), roots.end());

    std::vector<Matrix3> out;
    for (double x : roots) {
        const Mat3 fn = x * f1 + (1 - x) * f2;
        const Mat3 f = t2.transpose() * enforce_rank2(fn) * t1;
        if (f.norm() > 0)
            out.push_back(normalize_fundamental(enforce_rank2(f)));
    }
    return out;
}

std::array<double, 2> apply_homography(const Matrix3& h, double x, double y)
{
    const double w = h[6] * x + h[7] * y + h[8];
    if (std::abs(w) < 1e-12)
        throw std::domain_error("apply_homography: point maps to infinity");
    return {(h[0] * x + h[1] * y + h[2]) / w, (h[3] * x + h[4] * y + h[5]) / w};
}

Matrix3 invert(const Matrix3& m)
{
    const Mat3 e = to_eigen(m);
    const double det = e.determinant();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det))
        throw std::invalid_argument("invert: singular matrix");
    return from_eigen(e.inverse());
}

double symmetric_transfer_error(const Matrix3& h, const PointPair& p)
{
    const Matrix3 hinv = invert(h);
    const auto f = apply_homography(h, p.x1, p.y1);
    const auto b = apply_homography(hinv, p.x2, p.y2);
    const double fx = f[0] - p.x2, fy = f[1] - p.y2, bx = b[0] - p.x1, by = b[1] - p.y1;
    return std::sqrt(fx * fx + fy * fy + bx * bx + by * by);
}

double sampson_error(const Matrix3& f, const PointPair& p)
{
    const double fx0 = f[0] * p.x1 + f[1] * p.y1 + f[2];
    const double fx1 = f[3] * p.x1 + f[4] * p.y1 + f[5];
    const double fx2 = f[6] * p.x1 + f[7] * p.y1 + f[8];
    const double ft0 = f[0] * p.x2 + f[3] * p.y2 + f[6];
    const double ft1 = f[1] * p.x2 + f[4] * p.y2 + f[7];
    const double e = p.x2 * fx0 + p.y2 * fx1 + fx2;
    const double denom = fx0 * fx0 + fx1 * fx1 + ft0 * ft0 + ft1 * ft1;
    if (!(denom > 0.0))
        return std::numeric_limits<double>::infinity();
    return std::abs(e) / std::sqrt(denom);
}

TwoViewGeometry estimate_lo_ransac(const std::vector<PointPair>& pairs, const RansacParams& params)
{
    if (!(params.threshold > 0.0) || !(params.confidence > 0.0 && params.confidence < 1.0) || params.max_iterations < 1)
        throw std::invalid_argument("estimate_lo_ransac: invalid parameters");
    Estimator est(pairs, params);
    const int m = est.sample_size();
    if (static_cast<int>(pairs.size()) < m)
        throw std::invalid_argument("estimate_lo_ransac: need at least " + std::to_string(m) + " correspondences");

    std::mt19937_64 rng(params.seed);
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    Model best;
    int best_count = 0;
    int needed = params.max_iterations;
    int it = 0;
    std::vector<std::size_t> idx(m);
    std::vector<PointPair> sample(m);
    for (; it < std::min(needed, params.max_iterations); ++it) {
        for (int i = 0; i < m; ++i) {
            bool fresh;
            do {
                idx[i] = pick(rng);
                fresh = std::find(idx.begin(), idx.begin() + i, idx[i]) == idx.begin() + i;
            } while (!fresh);
            sample[i] = pairs[idx[i]];
        }
        for (const Model& cand : est.minimal(sample)) {
            const int n = est.count(cand, params.threshold);
            if (n <= best_count)
                continue;
            best = cand;
            best_count = n;
            est.local_optimization(best, best_count);
            needed = required_iterations(static_cast<double>(best_count) / pairs.size(), m, params.confidence,
                params.max_iterations);
        }
    }
    if (best_count < m)
        throw NoModelFound("estimate_lo_ransac: no model with a minimal sample of inliers");

    TwoViewGeometry g;
    g.model = params.model;
    g.M = best.m;
    g.iterations_run = it;
    g.seed = params.seed;
    g.inlier_mask.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        g.inlier_mask[i] = est.error(best, pairs[i]) <= params.threshold;
    return g;
}

std::optional<TwoViewGeometry> try_estimate(const std::vector<PointPair>& pairs, const RansacParams& params)
{
    const std::size_t m = params.model == GeometryModel::HOMOGRAPHY ? 4 : 7;
    if (pairs.size() < m)
        return std::nullopt;
    try {
        return estimate_lo_ransac(pairs, params);
    } catch (const NoModelFound&) {
        return std::nullopt;
    }
}

GroundTruthScore score_against_ground_truth(const TwoViewGeometry* geom,
    const std::vector<TentativeCorrespondence>& tcs, const Matrix3& h_gt, double tol)
{
    const Matrix3 inv = invert(h_gt);
    GroundTruthScore s;
    s.tentatives = static_cast<int>(tcs.size());
    for (std::size_t i = 0; i < tcs.size(); ++i) {
        const PointPair p{tcs[i].frame1.x, tcs[i].frame1.y, tcs[i].frame2.x, tcs[i].frame2.y};
        const bool correct = transfer_error_or_inf(h_gt, inv, p) <= tol;
        const bool inlier = geom && i < geom->inlier_mask.size() && geom->inlier_mask[i];
        s.correct_matches += correct;
        s.inliers += inlier;
        s.correct_inliers += correct && inlier;
    }
    s.correct_pct = s.tentatives ? 100.0 * s.correct_matches / s.tentatives : 0.0;
    return s;
}

Matrix3 read_homography(std::istream& in)
{
    Matrix3 h;
    for (double& v : h)
        if (!(in >> v))
            throw std::runtime_error("read_homography: expected 9 numbers");
    return h;
}

void write_homography(std::ostream& out, const Matrix3& h)
{
    char buf[128];
    for (int r = 0; r < 3; ++r) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", h[r * 3], h[r * 3 + 1], h[r * 3 + 2]);
        out << buf;
    }
}

}  // namespace mods

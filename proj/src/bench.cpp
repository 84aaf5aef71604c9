#include "mods/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mods {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kGeneratorSigma = 0.8;

void add_noise(Image& img, std::uint64_t seed, double sigma)
{
    if (!(sigma > 0.0))
        return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    for (float& v : img.data())
        v = static_cast<float>(std::clamp(v + n(rng), 0.0, 1.0));
}

}  // namespace

SyntheticPair gen_synthetic_pair(const Image& img, double theta_deg, std::uint64_t seed, double noise_sigma)
{
    const double t = latitude_to_tilt(theta_deg);
    ViewSpec spec;
    spec.tilt = t;
    spec.frame_map = view_linear_map(1.0, t, 0.0);
    SynthesizedView v = synthesize_view(img, spec, kGeneratorSigma);
    SyntheticPair p{std::move(v.image), v.spec.frame_map.to_matrix3()};
    add_noise(p.image, seed, noise_sigma);
    return p;
}

SyntheticPair gen_scaled_pair(const Image& img, double lambda, std::uint64_t seed, double noise_sigma)
{
    if (!(lambda >= 1.0) || !std::isfinite(lambda))
        throw std::invalid_argument("gen_scaled_pair: lambda must be >= 1");
    const double s = 1.0 / lambda;
    SyntheticPair p;
    p.image = downsample(img, s, kGeneratorSigma, true);
    p.h_gt = AffineMap2D::scaling(s, s).to_matrix3();
    add_noise(p.image, seed, noise_sigma);
    return p;
}

double robust_quantile(std::vector<double> values, double q)
{
    if (values.empty())
        throw std::invalid_argument("robust_quantile: empty list");
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("robust_quantile: q must lie in (0,1)");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n)));
    return values[std::min(rank, values.size()) - 1];
}

void SweepSpec::validate() const
{
    if (params.empty() || configs.empty())
        throw std::invalid_argument("SweepSpec: no parameters or configurations");
    for (double p : params) {
        if (kind == SweepKind::TILT && !(p >= 0.0 && p < 90.0))
            throw std::invalid_argument("SweepSpec: latitudes must lie in [0,90)");
        if (kind == SweepKind::SCALE && !(p >= 1.0))
            throw std::invalid_argument("SweepSpec: scale factors must be >= 1");
    }
    if (!(quantile > 0.0 && quantile < 1.0))
        throw std::invalid_argument("SweepSpec: quantile must lie in (0,1)");
    if (n_images < 0)
        throw std::invalid_argument("SweepSpec: n_images must be >= 0");
}

namespace {

struct Timed {
    FeatureSet features;
    double ms = 0;
};

Timed features_of(const Image& img, const NamedConfig& cfg, int threads)
{
    const auto t0 = Clock::now();
    Timed t;
    t.features = extract_features(img, cfg.detector, cfg.config, {}, nullptr, threads);
    t.ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    return t;
}

PairOutcome score_pair(const Timed& f1, const SyntheticPair& pair, const NamedConfig& cfg, MatchKind kind,
    double tolerance, int threads)
{
    const Timed f2 = features_of(pair.image, cfg, threads);
    const auto t0 = Clock::now();
    MatchStrategy s;
    s.kind = kind;
    s.threshold = default_ratio_threshold(cfg.detector);
    auto tcs = filter_duplicates(match_features(f1.features, f2.features, s));
    const auto gt = score_against_ground_truth(nullptr, tcs, pair.h_gt, tolerance);
    PairOutcome out;
    out.correct = gt.correct_matches;
    out.tentatives = gt.tentatives;
    out.regions1 = static_cast<int>(f1.features.size());
    out.regions2 = static_cast<int>(f2.features.size());
    out.time_ms = f1.ms + f2.ms + std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    return out;
}

}  // namespace

PairOutcome evaluate_pair(const Image& img, const SyntheticPair& pair, const NamedConfig& config,
    MatchKind match_kind, double tolerance, int threads)
{
    return score_pair(features_of(img, config, threads), pair, config, match_kind, tolerance, threads);
}

SweepReport run_sweep(const SweepSpec& spec, const std::vector<Image>& images)
{
    spec.validate();
    if (images.empty())
        throw std::invalid_argument("run_sweep: no images");
    SweepReport report;
    report.kind = spec.kind;
    std::vector<double> params = spec.params;
    std::sort(params.begin(), params.end());

    for (const auto& cfg : spec.configs) {
        std::vector<std::vector<PairOutcome>> per_param(params.size());
        for (std::size_t i = 0; i < images.size(); ++i) {
            const Timed f1 = features_of(images[i], cfg, spec.threads);
            for (std::size_t p = 0; p < params.size(); ++p) {
                const std::uint64_t seed = spec.seed + i;
                const SyntheticPair pair = spec.kind == SweepKind::TILT ? gen_synthetic_pair(images[i], params[p], seed)
                                                                        : gen_scaled_pair(images[i], params[p], seed);
                per_param[p].push_back(score_pair(f1, pair, cfg, spec.match_kind, spec.tolerance, spec.threads));
            }
        }
        for (std::size_t p = 0; p < params.size(); ++p) {
            SweepCell c;
            c.config = cfg.name;
            c.param = params[p];
            c.n = static_cast<int>(images.size());
            std::vector<double> correct;
            for (const auto& o : per_param[p]) {
                correct.push_back(o.correct);
                c.mean_correct += o.correct;
                c.mean_efficiency += o.regions1 ? static_cast<double>(o.correct) / o.regions1 : 0.0;
                c.mean_regions += o.regions1;
                c.mean_time_ms += spec.timing ? o.time_ms : 0.0;
            }
            c.robust_min_correct = robust_quantile(correct, spec.quantile);
            c.mean_correct /= c.n;
            c.mean_efficiency /= c.n;
            c.mean_regions /= c.n;
            c.mean_time_ms /= c.n;
            report.cells.push_back(c);
        }
    }
    return report;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir, int n, std::uint64_t seed)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw ImageIoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file())
            continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pgm")
            files.push_back(e.path());
    }
    if (files.empty())
        throw ImageIoError("no images in " + dir.string());
    std::sort(files.begin(), files.end());
    if (n > 0 && static_cast<std::size_t>(n) < files.size()) {
        std::mt19937_64 rng(seed);
        std::shuffle(files.begin(), files.end(), rng);
        files.resize(n);
        std::sort(files.begin(), files.end());
    }
    return files;
}

namespace {

SweepReport sweep_dir(SweepSpec spec, const std::filesystem::path& dir)
{
    std::vector<Image> images;
    for (const auto& p : list_images(dir, spec.n_images, spec.seed))
        images.push_back(read_image(p));
    return run_sweep(spec, images);
}

}  // namespace

SweepReport run_tilt_sweep(SweepSpec spec, const std::filesystem::path& image_dir)
{
    spec.kind = SweepKind::TILT;
    return sweep_dir(std::move(spec), image_dir);
}

SweepReport run_scale_sweep(SweepSpec spec, const std::filesystem::path& image_dir)
{
    spec.kind = SweepKind::SCALE;
    return sweep_dir(std::move(spec), image_dir);
}

void write_sweep_csv(std::ostream& out, const SweepReport& report)
{
    out << "kind,config,param,n,robust_min_correct,mean_correct,mean_efficiency,mean_regions,mean_time_ms\n";
    const char* kind = report.kind == SweepKind::TILT ? "tilt" : "scale";
    char buf[512];
    for (const auto& c : report.cells) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", kind, c.config.c_str(), c.param,
            c.n, c.robust_min_correct, c.mean_correct, c.mean_efficiency, c.mean_regions, c.mean_time_ms);
        out << buf;
    }
}

SweepReport read_sweep_csv(std::istream& in)
{
    SweepReport r;
    std::string line;
    if (!std::getline(in, line) || line.rfind("kind,", 0) != 0)
        throw std::runtime_error("read_sweep_csv: missing header");
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ','))
            f.push_back(field);
        if (f.size() != 9)
            throw std::runtime_error("read_sweep_csv: expected 9 fields: " + line);
        if (f[0] != "tilt" && f[0] != "scale")
            throw std::runtime_error("read_sweep_csv: unknown kind '" + f[0] + "'");
        r.kind = f[0] == "tilt" ? SweepKind::TILT : SweepKind::SCALE;
        SweepCell c;
        try {
            c.config = f[1];
            c.param = std::stod(f[2]);
            c.n = std::stoi(f[3]);
            c.robust_min_correct = std::stod(f[4]);
            c.mean_correct = std::stod(f[5]);
            c.mean_efficiency = std::stod(f[6]);
            c.mean_regions = std::stod(f[7]);
            c.mean_time_ms = std::stod(f[8]);
        } catch (const std::exception&) {
            throw std::runtime_error("read_sweep_csv: malformed number: " + line);
        }
        r.cells.push_back(c);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Overlay

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kBlue{0, 0, 255};
constexpr Rgb kGreen{0, 255, 0};
constexpr Rgb kYellow{255, 220, 0};
constexpr Rgb kWhite{255, 255, 255};

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
const std::map<char, std::array<std::uint8_t, 7>>& font()
{
    static const std::map<char, std::array<std::uint8_t, 7>> f{
        {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
        {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
        {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
        {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
        {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
        {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
        {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
        {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
        {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
        {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
        {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}}, {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
        {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
        {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    };
    return f;
}

void put(RgbImage& img, int x, int y, Rgb c)
{
    if (x < 0 || y < 0 || x >= img.width || y >= img.height)
        return;
    std::uint8_t* p = img.px(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
}

void line(RgbImage& img, int x0, int y0, int x1, int y1, Rgb c)
{
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        put(img, x0, y0, c);
        if (x0 == x1 && y0 == y1)
            break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void dot(RgbImage& img, int x, int y, Rgb c)
{
    for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i)
            put(img, x + i, y + j, c);
}

void cross(RgbImage& img, int x, int y, Rgb c)
{
    for (int k = -3; k <= 3; ++k) {
        put(img, x + k, y, c);
        put(img, x, y + k, c);
    }
}

int text_width(const std::string& s)
{
    return static_cast<int>(s.size()) * 6;
}

void text(RgbImage& img, int x, int y, const std::string& s, Rgb c)
{
    const auto& f = font();
    for (char ch : s) {
        auto it = f.find(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
        if (it != f.end())
            for (int r = 0; r < 7; ++r)
                for (int b = 0; b < 5; ++b)
                    if (it->second[r] & (0x10 >> b))
                        put(img, x + b, y + r, c);
        x += 6;
    }
}

int px_round(double v)
{
    return static_cast<int>(std::lround(v));
}

}  // namespace

RgbImage render_match_overlay(const Image& img1, const Image& img2, const ModsResult& result, const Matrix3* h_gt)
{
    const int w1 = img1.width();
    RgbImage out(w1 + img2.width(), std::max(img1.height(), img2.height()));
    auto blit = [&](const Image& src, int ox) {
        for (int y = 0; y < src.height(); ++y)
            for (int x = 0; x < src.width(); ++x) {
                const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(src.at(x, y), 0.0f, 1.0f) * 255.0f));
                put(out, x + ox, y, {v, v, v});
            }
    };
    blit(img1, 0);
    blit(img2, w1);

    std::vector<const TentativeCorrespondence*> inliers;
    if (result.geometry)
        for (std::size_t i = 0; i < result.correspondences.size() && i < result.geometry->inlier_mask.size(); ++i)
            if (result.geometry->inlier_mask[i])
                inliers.push_back(&result.correspondences[i]);

    // Nothing to explain without inliers: the canvas stays a plain concatenation.
    if (inliers.empty())
        return out;

    std::vector<std::string> legend{"BLUE: DETECTED CENTERS"};
    if (h_gt)
        legend.push_back("GREEN: REPROJECTED (GT)");
    legend.push_back("INLIERS: " + std::to_string(inliers.size()));
    int lw = 0;
    for (const auto& s : legend)
        lw = std::max(lw, text_width(s));
    for (int y = 0; y < static_cast<int>(legend.size()) * 9 + 3 && y < out.height; ++y)
        for (int x = 0; x < lw + 4 && x < out.width; ++x)
            put(out, x, y, {0, 0, 0});
    for (std::size_t i = 0; i < legend.size(); ++i) {
        const Rgb c = legend[i].rfind("BLUE", 0) == 0 ? kBlue : legend[i].rfind("GREEN", 0) == 0 ? kGreen : kWhite;
        text(out, 2, 2 + static_cast<int>(i) * 9, legend[i], c);
    }

    for (const auto* tc : inliers)
        line(out, px_round(tc->frame1.x), px_round(tc->frame1.y), px_round(tc->frame2.x) + w1, px_round(tc->frame2.y),
            kYellow);
    if (h_gt) {
        for (const auto* tc : inliers) {
            try {
                const auto p = apply_homography(*h_gt, tc->frame1.x, tc->frame1.y);
                cross(out, px_round(p[0]) + w1, px_round(p[1]), kGreen);
            } catch (const std::domain_error&) {
            }
        }
    }
    for (const auto* tc : inliers) {
        dot(out, px_round(tc->frame1.x), px_round(tc->frame1.y), kBlue);
        dot(out, px_round(tc->frame2.x) + w1, px_round(tc->frame2.y), kBlue);
    }
    return out;
}

}  // namespace mods

#include "mods/mods.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace mods {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <class Fn>
void parallel_for(int n, int threads, Fn fn)
{
    threads = std::clamp(threads, 1, std::max(1, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

int min_detector_size(DetectorKind kind)
{
    return kind == DetectorKind::MSER ? 16 : 32;
}

// The magnified ellipse must lie on real image content: the canvas fill
// would otherwise leak into the descriptor.
bool on_valid_content(const AffineFrame& f, const SynthesizedView& v)
{
    if (!measurement_region_inside(f, v.image.width(), v.image.height()))
        return false;
    constexpr int kSamples = 16;
    for (int k = 0; k < kSamples; ++k) {
        const double a = 2.0 * std::numbers::pi * k / kSamples;
        const double u = kMagnification * std::cos(a), w = kMagnification * std::sin(a);
        if (!v.is_valid(f.x + f.a11 * u + f.a12 * w, f.y + f.a21 * u + f.a22 * w))
            return false;
    }
    return v.is_valid(f.x, f.y);
}

struct ViewOutput {
    FeatureSet features;
    PhaseTiming timing;
};

ViewOutput process_view(const Image& img, const ViewSpec& spec, int view_id, DetectorKind detector,
    double sigma_base, const DetectorParams& params)
{
    ViewOutput out;
    auto t0 = Clock::now();
    const SynthesizedView view = synthesize_view(img, spec, sigma_base);
    out.timing.synthesis = ms_since(t0);

    t0 = Clock::now();
    std::vector<AffineFrame> frames;
    if (std::min(view.image.width(), view.image.height()) >= min_detector_size(detector)) {
        frames = detect(detector, view.image, params);
        std::erase_if(frames, [&](const AffineFrame& f) { return !on_valid_content(f, view); });
    }
    out.timing.detection = ms_since(t0);

    t0 = Clock::now();
    if (!frames.empty()) {
        const PatchExtractor extractor(view.image);
        out.features = describe_frames(extractor, frames, DescriptorKind::ROOTSIFT);
        for (auto& f : out.features.frames) {
            f = backproject_frame(f, view.spec);
            f.view_id = view_id;
        }
    }
    out.timing.description = ms_since(t0);
    return out;
}

void append(FeatureSet& dst, FeatureSet&& src)
{
    dst.frames.insert(dst.frames.end(), src.frames.begin(), src.frames.end());
    dst.descriptors.insert(dst.descriptors.end(), src.descriptors.begin(), src.descriptors.end());
}

struct ViewKey {
    DetectorKind detector;
    double scale, tilt, phi;
    bool same(const ViewKey& o) const
    {
        constexpr double eps = 1e-9;
        return detector == o.detector && std::abs(scale - o.scale) < eps && std::abs(tilt - o.tilt) < eps
               && std::abs(phi - o.phi) < eps;
    }
};

}  // namespace

PhaseTiming& PhaseTiming::operator+=(const PhaseTiming& o)
{
    synthesis += o.synthesis;
    detection += o.detection;
    description += o.description;
    matching += o.matching;
    ransac += o.ransac;
    return *this;
}

PhaseTiming ModsResult::total_timing() const
{
    PhaseTiming t;
    for (const auto& s : stages)
        t += s.timing;
    return t;
}

ModsStage stage_from_preset(const std::string& name)
{
    const NamedConfig& p = find_preset(name);
    return {p.detector, p.config, p.name};
}

std::vector<ModsStage> default_stages()
{
    return {stage_from_preset("mods-step1"), stage_from_preset("mods-step2"), stage_from_preset("mods-step3"),
        stage_from_preset("mods-step4")};
}

int resolve_threads(int requested)
{
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("MODS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0)
            return static_cast<int>(std::min(v, 256L));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void ModsOptions::validate(std::size_t n_stages) const
{
    if (n_stages == 0)
        throw std::invalid_argument("run_mods: at least one stage is required");
    const int min_theta = model == GeometryModel::HOMOGRAPHY ? 4 : 7;
    if (theta_m < min_theta)
        throw std::invalid_argument("run_mods: theta_m must be >= " + std::to_string(min_theta));
    if (s_max < 0)
        throw std::invalid_argument("run_mods: s_max must be >= 0");
    if (!(ransac_threshold > 0.0) || !(duplicate_radius >= 0.0))
        throw std::invalid_argument("run_mods: invalid thresholds");
    for (double r : ratio)
        if (!(r > 0.0 && r < 1.0))
            throw std::invalid_argument("run_mods: ratio thresholds must lie in (0,1)");
}

FeatureSet extract_features(const Image& img, DetectorKind detector, const SynthesisConfig& cfg,
    const DetectorParams& params, PhaseTiming* timing, int threads)
{
    const auto views = enumerate_views(cfg);
    std::vector<ViewOutput> outs(views.size());
    parallel_for(static_cast<int>(views.size()), resolve_threads(threads), [&](int i) {
        outs[i] = process_view(img, views[i], i, detector, cfg.sigma_base, params);
    });
    FeatureSet fs;
    for (auto& o : outs) {
        if (timing)
            *timing += o.timing;
        append(fs, std::move(o.features));
    }
    return fs;
}

ModsResult run_mods(const Image& img1, const Image& img2, const std::vector<ModsStage>& stages,
    const ModsOptions& options)
{
    options.validate(stages.size());
    for (std::size_t i = 0; i < stages.size(); ++i) {
        stages[i].config.validate();
        for (std::size_t j = 0; j < i; ++j)
            if (stages[i].label == stages[j].label)
                throw std::invalid_argument("run_mods: duplicate stage label '" + stages[i].label + "'");
    }
    const int threads = resolve_threads(options.threads);
    const int last_stage = options.s_max > 0 ? std::min<int>(options.s_max, static_cast<int>(stages.size()))
                                             : static_cast<int>(stages.size());

    std::array<FeatureSet, 3> acc1, acc2;  // per detector family
    std::vector<ViewKey> done;
    int next_view_id = 0;
    ModsResult result;

    for (int k = 0; k < last_stage; ++k) {
        const auto wall0 = Clock::now();
        const ModsStage& stage = stages[k];
        StageReport rep;
        rep.label = stage.label;
        rep.detector = stage.detector;

        std::vector<ViewSpec> todo;
        for (const auto& v : enumerate_views(stage.config)) {
            const ViewKey key{stage.detector, v.scale, v.tilt, v.phi};
            if (std::any_of(done.begin(), done.end(), [&](const ViewKey& d) { return d.same(key); })) {
                ++rep.views_skipped;
                continue;
            }
            done.push_back(key);
            todo.push_back(v);
        }
        rep.views = static_cast<int>(todo.size());

        const int n = static_cast<int>(todo.size());
        std::vector<ViewOutput> outs(2 * n);
        parallel_for(2 * n, threads, [&](int i) {
            const Image& img = i < n ? img1 : img2;
            const int v = i % n;
            outs[i] = process_view(img, todo[v], next_view_id + v, stage.detector, stage.config.sigma_base,
                options.detector_params);
        });
        next_view_id += n;
        const int fam = static_cast<int>(stage.detector);
        for (int i = 0; i < 2 * n; ++i) {
            rep.timing += outs[i].timing;
            append(i < n ? acc1[fam] : acc2[fam], std::move(outs[i].features));
        }

        auto t0 = Clock::now();
        std::vector<TentativeCorrespondence> pooled;
        for (int f = 0; f < 3; ++f) {
            rep.regions1 += static_cast<int>(acc1[f].size());
            rep.regions2 += static_cast<int>(acc2[f].size());
            if (acc1[f].size() == 0 || acc2[f].size() == 0)
                continue;
            MatchStrategy s;
            s.kind = options.match_kind;
            s.threshold = options.ratio[f];
            s.inconsistency_radius = options.inconsistency_radius;
            auto tcs = match_features(acc1[f], acc2[f], s, options.index_params);
            pooled.insert(pooled.end(), tcs.begin(), tcs.end());
        }
        pooled = filter_duplicates(std::move(pooled), options.duplicate_radius);
        rep.timing.matching = ms_since(t0);
        rep.tentatives = static_cast<int>(pooled.size());

        t0 = Clock::now();
        RansacParams rp;
        rp.model = options.model;
        rp.threshold = options.ransac_threshold;
        rp.confidence = options.ransac_confidence;
        rp.max_iterations = options.ransac_max_iterations;
        rp.seed = options.seed;
        auto geom = try_estimate(to_point_pairs(pooled), rp);
        rep.timing.ransac = ms_since(t0);
        rep.inliers = geom ? geom->inlier_count() : 0;
        rep.wall_ms = ms_since(wall0);

        result.stages.push_back(rep);
        result.stage_reached = k + 1;
        result.correspondences = std::move(pooled);
        result.n_matches = rep.inliers;
        result.geometry.reset();
        if (rep.inliers >= options.theta_m) {
            result.geometry = std::move(geom);
            break;
        }
    }
    return result;
}

}  // namespace mods

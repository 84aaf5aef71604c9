#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mods/bench.hpp"
#include "mods/config.hpp"
#include "mods/image_io.hpp"
#include "mods/mods.hpp"

namespace mods::cli {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shared by the subcommands that run the matcher.
struct RunArgs {
    std::string img1, img2;
    std::string config_path;
    std::string preset;
    std::string model = "homography";
    std::string match = "fginn";
    std::uint64_t seed = 0;
    int threads = 0;
    int theta_m = 15;
    int s_max = 0;
    double ransac_threshold = 3.0;
    double ratio = 0.0;  // 0: per-detector defaults
    std::string csv_path, homography_path, overlay_path, gt_path;
    bool timing = false;
};

void add_run_options(CLI::App* sub, RunArgs& a, bool with_images = true)
{
    if (with_images) {
        sub->add_option("image1", a.img1, "First image")->required();
        sub->add_option("image2", a.img2, "Second image")->required();
    }
    sub->add_option("--config", a.config_path, "Key-value config file");
    sub->add_option("--model", a.model, "homography or fundamental");
    sub->add_option("--match", a.match, "fginn (first geometrically inconsistent) or snn (second nearest)");
    sub->add_option("--seed", a.seed, "RANSAC seed");
    sub->add_option("--threads", a.threads, "Worker threads (default: MODS_THREADS or all cores)");
    sub->add_option("--theta-m", a.theta_m, "Inliers needed to accept a geometry");
    sub->add_option("--ransac-threshold", a.ransac_threshold, "Inlier threshold in pixels");
    sub->add_option("--ratio", a.ratio, "Ratio threshold for every detector");
    sub->add_option("--csv", a.csv_path, "Write correspondences as CSV ('-' for stdout)");
    sub->add_option("--homography", a.homography_path, "Write the estimated 3x3 matrix");
    sub->add_option("--overlay", a.overlay_path, "Write a PNG match overlay");
    sub->add_option("--gt", a.gt_path, "Ground-truth homography (image1 -> image2)");
    sub->add_flag("--timing", a.timing, "Report wall-clock timings");
}

std::optional<ConfigFile> load_config(const std::string& path)
{
    if (path.empty())
        return std::nullopt;
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path);
    ConfigFile cf = ConfigFile::parse(in);
    cf.check_keys();
    return cf;
}

NamedConfig resolve_named(const std::string& name)
{
    const auto dash = name.rfind("-plain");
    if (dash != std::string::npos && dash + 6 == name.size()) {
        if (auto d = parse_detector(name.substr(0, dash)))
            return plain_config(*d);
    }
    try {
        return find_preset(name);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

ModsOptions build_options(const RunArgs& a, const std::optional<ConfigFile>& cf)
{
    ModsOptions o;
    if (cf)
        cf->apply(o);
    const auto model = parse_model(a.model);
    if (!model)
        throw UsageError("unknown model '" + a.model + "'");
    const auto match = parse_match_kind(a.match);
    if (!match)
        throw UsageError("unknown match rule '" + a.match + "'");
    // Command-line values override the config file only when given explicitly;
    // the defaults above equal the library defaults.
    if (a.model != "homography" || !cf || !cf->has("model"))
        o.model = *model;
    if (a.match != "fginn" || !cf || !cf->has("match"))
        o.match_kind = *match;
    if (a.seed != 0 || !cf || !cf->has("seed"))
        o.seed = a.seed;
    if (a.theta_m != 15 || !cf || !cf->has("theta_m"))
        o.theta_m = a.theta_m;
    if (a.s_max != 0 || !cf || !cf->has("s_max"))
        o.s_max = a.s_max;
    if (a.ransac_threshold != 3.0 || !cf || !cf->has("ransac_threshold"))
        o.ransac_threshold = a.ransac_threshold;
    if (a.ratio > 0.0)
        o.ratio = {a.ratio, a.ratio, a.ratio};
    o.threads = a.threads;
    try {
        o.validate(1);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return o;
}

Image load_image(const std::string& path)
{
    try {
        return read_image(path);
    } catch (const ImageIoError& e) {
        throw IoError(e.what());
    }
}

Matrix3 load_homography(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    try {
        return read_homography(in);
    } catch (const std::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

template <class Fn>
void write_text(const std::string& path, std::ostream& out, Fn fn)
{
    if (path == "-") {
        fn(out);
        return;
    }
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot write " + path);
    fn(f);
    if (!f)
        throw IoError("write failed: " + path);
}

std::string fmt(const char* format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

void print_timing(std::ostream& out, const ModsResult& r)
{
    out << "# timing (ms)\n";
    out << "stage synthesis detection description matching ransac wall\n";
    for (std::size_t i = 0; i < r.stages.size(); ++i) {
        const auto& t = r.stages[i].timing;
        out << i + 1 << ' ' << fmt("%.1f", t.synthesis) << ' ' << fmt("%.1f", t.detection) << ' '
            << fmt("%.1f", t.description) << ' ' << fmt("%.1f", t.matching) << ' ' << fmt("%.1f", t.ransac) << ' '
            << fmt("%.1f", r.stages[i].wall_ms) << '\n';
    }
    const PhaseTiming t = r.total_timing();
    const double total = t.total() > 0 ? t.total() : 1.0;
    out << "share synthesis=" << fmt("%.1f%%", 100 * t.synthesis / total)
        << " detection=" << fmt("%.1f%%", 100 * t.detection / total)
        << " description=" << fmt("%.1f%%", 100 * t.description / total)
        << " matching=" << fmt("%.1f%%", 100 * t.matching / total)
        << " ransac=" << fmt("%.1f%%", 100 * t.ransac / total) << '\n';
}

void print_report(std::ostream& out, const std::vector<ModsStage>& stages, const ModsOptions& o, const ModsResult& r,
    bool timing)
{
    out << "# config\n" << describe_run(stages, o);
    out << "# stages\n";
    out << "stage label detector views skipped regions1 regions2 tentatives inliers\n";
    for (std::size_t i = 0; i < r.stages.size(); ++i) {
        const auto& s = r.stages[i];
        out << i + 1 << ' ' << s.label << ' ' << to_string(s.detector) << ' ' << s.views << ' ' << s.views_skipped
            << ' ' << s.regions1 << ' ' << s.regions2 << ' ' << s.tentatives << ' ' << s.inliers << '\n';
    }
    if (timing)
        print_timing(out, r);
    out << "# result\n";
    out << "stage_reached " << r.stage_reached << '\n';
    out << "n_matches " << r.n_matches << '\n';
    if (r.geometry) {
        out << "geometry " << (r.geometry->model == GeometryModel::HOMOGRAPHY ? "homography" : "fundamental") << '\n';
        write_homography(out, r.geometry->M);
    } else {
        out << "geometry none\n";
    }
}

struct RunOutput {
    std::vector<ModsStage> stages;
    ModsOptions options;
    ModsResult result;
};

RunOutput run_pair(const RunArgs& a, bool single_stage, std::ostream& out)
{
    const auto cf = load_config(a.config_path);
    RunOutput ro;
    ro.options = build_options(a, cf);
    if (single_stage) {
        NamedConfig c = resolve_named(a.preset.empty() ? "hessaff-sparse" : a.preset);
        if (cf)
            c = cf->synthesis(c);
        ro.stages = {{c.detector, c.config, c.name}};
    } else {
        if (cf)
            ro.stages = cf->stages();
        if (!a.preset.empty()) {
            if (!ro.stages.empty())
                throw UsageError("--preset conflicts with stages in the config file");
            const NamedConfig c = resolve_named(a.preset);
            ro.stages = {{c.detector, c.config, c.name}};
        }
        if (ro.stages.empty())
            ro.stages = default_stages();
    }
    const Image i1 = load_image(a.img1);
    const Image i2 = load_image(a.img2);
    try {
        ro.result = run_mods(i1, i2, ro.stages, ro.options);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    if (!a.csv_path.empty())
        write_text(a.csv_path, out, [&](std::ostream& s) { write_correspondences_csv(s, ro.result.correspondences); });
    if (!a.homography_path.empty() && ro.result.geometry)
        write_text(a.homography_path, out, [&](std::ostream& s) { write_homography(s, ro.result.geometry->M); });
    if (!a.overlay_path.empty()) {
        std::optional<Matrix3> gt;
        if (!a.gt_path.empty())
            gt = load_homography(a.gt_path);
        try {
            write_png(a.overlay_path, render_match_overlay(i1, i2, ro.result, gt ? &*gt : nullptr));
        } catch (const ImageIoError& e) {
            throw IoError(e.what());
        }
    }
    return ro;
}

int exit_for(const ModsResult& r)
{
    return r.geometry ? OK : NO_GEOMETRY;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Wide-baseline two-view matching with view synthesis"};
    app.require_subcommand(1);

    RunArgs match_args;
    auto* match = app.add_subcommand("match", "Match two images with one configuration");
    add_run_options(match, match_args);
    match->add_option("--preset", match_args.preset, "Named configuration (default hessaff-sparse)");

    RunArgs mods_args;
    auto* mods_cmd = app.add_subcommand("mods", "Run the staged matcher until enough inliers are found");
    add_run_options(mods_cmd, mods_args);
    mods_cmd->add_option("--s-max", mods_args.s_max, "Run at most this many stages");
    mods_cmd->add_option("--preset", mods_args.preset, "Run a single named configuration instead");

    RunArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Score a run against a ground-truth homography");
    add_run_options(eval, eval_args);
    eval->add_option("--preset", eval_args.preset, "Run a single named configuration instead of the stages");
    eval->add_option("--s-max", eval_args.s_max, "Run at most this many stages");
    double eval_tol = 3.0;
    eval->add_option("--tolerance", eval_tol, "Correctness tolerance in pixels");

    struct SweepArgs {
        std::string dir;
        std::vector<double> params;
        std::vector<std::string> configs;
        std::string config_path;
        std::string match = "fginn";
        int n_images = 0;
        double quantile = 0.04;
        double tolerance = 3.0;
        std::uint64_t seed = 0;
        int threads = 0;
        std::string out_path = "-";
        bool timing = false;
    };
    SweepArgs tilt_args, scale_args;
    tilt_args.params = {0, 20, 40, 60, 65, 70, 75, 80, 85};
    scale_args.params = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto add_sweep = [&](const char* name, const char* help, SweepArgs& s, const char* param_flag) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("image_dir", s.dir, "Directory of test images")->required();
        sub->add_option(param_flag, s.params)->delimiter(',');
        sub->add_option("--configs", s.configs, "Named configurations, comma separated (name-plain for none)")
            ->delimiter(',');
        sub->add_option("--config", s.config_path, "Key-value file describing one more configuration");
        sub->add_option("--match", s.match, "fginn or snn");
        sub->add_option("--n-images", s.n_images, "Seeded subset of the directory (0: all)");
        sub->add_option("--quantile", s.quantile, "Quantile for the robust minimum");
        sub->add_option("--tolerance", s.tolerance, "Correctness tolerance in pixels");
        sub->add_option("--seed", s.seed, "Seed for sampling and noise");
        sub->add_option("--threads", s.threads, "Worker threads");
        sub->add_option("-o,--out", s.out_path, "CSV output ('-' for stdout)");
        sub->add_flag("--timing", s.timing, "Fill the timing column");
        return sub;
    };
    auto* sweep_tilt = add_sweep("sweep-tilt", "Correct matches versus latitude on synthetic pairs", tilt_args,
        "--latitudes");
    auto* sweep_scale = add_sweep("sweep-scale", "Correct matches versus downsampling factor", scale_args, "--factors");

    std::string pair_img, pair_out, pair_h;
    double pair_lat = -1, pair_scale = -1, pair_noise = 0;
    std::uint64_t pair_seed = 0;
    auto* gen = app.add_subcommand("gen-pair", "Synthesize a tilted or downsampled view with its homography");
    gen->add_option("image", pair_img)->required();
    auto* lat_opt = gen->add_option("--latitude", pair_lat, "Latitude in degrees");
    auto* scale_opt = gen->add_option("--scale", pair_scale, "Downsampling factor >= 1");
    lat_opt->excludes(scale_opt);
    gen->add_option("-o,--out", pair_out, "Output image (PNG)")->required();
    gen->add_option("--homography", pair_h, "Output homography file")->required();
    gen->add_option("--noise", pair_noise, "Gaussian noise sigma (intensity units)");
    gen->add_option("--seed", pair_seed, "Noise seed");

    std::string det_img, det_preset, det_detector = "hessaff", det_frames, det_desc;
    int det_threads = 0;
    auto* detect_cmd = app.add_subcommand("detect", "Detect and describe regions of one image");
    detect_cmd->add_option("image", det_img)->required();
    detect_cmd->add_option("--detector", det_detector, "mser, hessaff or dog (no synthesis)");
    detect_cmd->add_option("--preset", det_preset, "Named configuration");
    detect_cmd->add_option("--frames", det_frames, "Frame text output ('-' for stdout)");
    detect_cmd->add_option("--descriptors", det_desc, "Descriptor dump output");
    detect_cmd->add_option("--threads", det_threads, "Worker threads");

    auto* presets_cmd = app.add_subcommand("presets", "List the named configurations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? OK : USAGE;
    }

    try {
        if (*presets_cmd) {
            for (const auto& p : presets())
                out << describe_config(p) << '\n';
            return OK;
        }
        if (*match || *mods_cmd) {
            const RunArgs& a = *match ? match_args : mods_args;
            const RunOutput ro = run_pair(a, match->parsed(), out);
            if (a.csv_path != "-")
                print_report(out, ro.stages, ro.options, ro.result, a.timing);
            return exit_for(ro.result);
        }
        if (*eval) {
            if (eval_args.gt_path.empty())
                throw UsageError("eval needs --gt");
            const Matrix3 gt = load_homography(eval_args.gt_path);
            const auto t0 = std::chrono::steady_clock::now();
            const RunOutput ro = run_pair(eval_args, false, out);
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            const auto sc = score_against_ground_truth(ro.result.geometry ? &*ro.result.geometry : nullptr,
                ro.result.correspondences, gt, eval_tol);
            const auto& last = ro.result.stages.back();
            out << "correct_inliers,inliers,correct_matches,tentatives,correct_pct,regions1,regions2,time_ms\n";
            char buf[256];
            std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.2f,%d,%d,%.1f\n", sc.correct_inliers, sc.inliers,
                sc.correct_matches, sc.tentatives, sc.correct_pct, last.regions1, last.regions2,
                eval_args.timing ? ms : 0.0);
            out << buf;
            return OK;
        }
        if (*sweep_tilt || *sweep_scale) {
            const bool tilt = sweep_tilt->parsed();
            const SweepArgs& s = tilt ? tilt_args : scale_args;
            SweepSpec spec;
            spec.kind = tilt ? SweepKind::TILT : SweepKind::SCALE;
            spec.params = s.params;
            for (const auto& name : s.configs)
                spec.configs.push_back(resolve_named(name));
            if (const auto cf = load_config(s.config_path))
                spec.configs.push_back(cf->synthesis(plain_config(DetectorKind::HESSAFF)));
            if (spec.configs.empty())
                spec.configs = tilt ? std::vector<NamedConfig>{plain_config(DetectorKind::HESSAFF),
                                          find_preset("hessaff-sparse"), find_preset("hessaff-dense")}
                                    : std::vector<NamedConfig>{plain_config(DetectorKind::MSER),
                                          find_preset("mods-step1")};
            const auto mk = parse_match_kind(s.match);
            if (!mk)
                throw UsageError("unknown match rule '" + s.match + "'");
            spec.match_kind = *mk;
            spec.n_images = s.n_images;
            spec.quantile = s.quantile;
            spec.tolerance = s.tolerance;
            spec.seed = s.seed;
            spec.threads = s.threads;
            spec.timing = s.timing;
            try {
                spec.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            std::vector<Image> images;
            try {
                for (const auto& p : list_images(s.dir, spec.n_images, spec.seed))
                    images.push_back(read_image(p));
            } catch (const ImageIoError& e) {
                throw IoError(e.what());
            }
            if (s.out_path != "-")
                for (const auto& c : spec.configs)
                    out << describe_config(c) << '\n';
            const SweepReport report = run_sweep(spec, images);
            write_text(s.out_path, out, [&](std::ostream& o) { write_sweep_csv(o, report); });
            return OK;
        }
        if (*gen) {
            if (!*lat_opt && !*scale_opt)
                throw UsageError("gen-pair needs --latitude or --scale");
            const Image img = load_image(pair_img);
            SyntheticPair p;
            try {
                p = *lat_opt ? gen_synthetic_pair(img, pair_lat, pair_seed, pair_noise)
                             : gen_scaled_pair(img, pair_scale, pair_seed, pair_noise);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            try {
                write_png(pair_out, p.image);
            } catch (const ImageIoError& e) {
                throw IoError(e.what());
            }
            write_text(pair_h, out, [&](std::ostream& o) { write_homography(o, p.h_gt); });
            return OK;
        }
        if (*detect_cmd) {
            NamedConfig c;
            if (!det_preset.empty()) {
                c = resolve_named(det_preset);
            } else {
                const auto d = parse_detector(det_detector);
                if (!d)
                    throw UsageError("unknown detector '" + det_detector + "'");
                c = plain_config(*d);
            }
            const Image img = load_image(det_img);
            const FeatureSet fs = extract_features(img, c.detector, c.config, {}, nullptr, det_threads);
            if (!det_frames.empty())
                write_text(det_frames, out, [&](std::ostream& o) { write_frames(o, fs.frames); });
            if (!det_desc.empty())
                write_text(det_desc, out, [&](std::ostream& o) { write_descriptors(o, fs); });
            if (det_frames != "-" && det_desc != "-")
                out << describe_config(c) << '\n' << "regions " << fs.size() << '\n';
            return OK;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return USAGE;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return USAGE;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return IO;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return USAGE;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return IO;
    }
    return USAGE;
}

}  // namespace mods::cli

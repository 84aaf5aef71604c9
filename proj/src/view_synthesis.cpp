#include "mods/view_synthesis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mods {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
// Longitudes closer than this are considered equal.
constexpr double kPhiEps = 1e-9;

}  // namespace

void SynthesisConfig::validate() const
{
    if (scales.empty() || tilts.empty())
        throw std::invalid_argument("SynthesisConfig: empty scale or tilt set");
    for (double s : scales)
        if (!(s > 0.0 && s <= 1.0))
            throw std::invalid_argument("SynthesisConfig: scales must lie in (0,1]");
    for (double t : tilts)
        if (!(t >= 1.0) || !std::isfinite(t))
            throw std::invalid_argument("SynthesisConfig: tilts must be >= 1");
    if (!(delta_phi_base > 0.0 && delta_phi_base <= 360.0))
        throw std::invalid_argument("SynthesisConfig: delta_phi_base must lie in (0,360]");
    if (!(sigma_base >= 0.0))
        throw std::invalid_argument("SynthesisConfig: sigma_base must be >= 0");
}

AffineMap2D view_linear_map(double scale, double tilt, double phi_deg)
{
    const AffineMap2D s = AffineMap2D::scaling(scale, scale);
    const AffineMap2D r = AffineMap2D::rotation(phi_deg * kDeg);
    const AffineMap2D t = AffineMap2D::scaling(1.0 / tilt, 1.0);
    return t.after(r).after(s);
}

std::vector<ViewSpec> enumerate_views(const SynthesisConfig& cfg)
{
    cfg.validate();
    std::vector<double> scales = cfg.scales;
    std::vector<double> tilts = cfg.tilts;
    std::sort(scales.begin(), scales.end(), std::greater<>());
    scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
    std::sort(tilts.begin(), tilts.end());
    tilts.erase(std::unique(tilts.begin(), tilts.end()), tilts.end());

    std::vector<ViewSpec> views;
    for (double s : scales) {
        for (double t : tilts) {
            if (t == 1.0) {
                views.push_back({s, t, 0.0, view_linear_map(s, t, 0.0)});
                continue;
            }
            const double step = cfg.delta_phi_base / t;
            for (int k = 0;; ++k) {
                const double phi = k * step;
                if (phi >= 180.0 - kPhiEps)
                    break;
                views.push_back({s, t, phi, view_linear_map(s, t, phi)});
            }
        }
    }
    return views;
}

ViewPlan plan_view(const ViewSpec& spec, int width, int height)
{
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("plan_view: empty source image");
    if (!(spec.scale > 0.0 && spec.scale <= 1.0) || !(spec.tilt >= 1.0))
        throw std::invalid_argument("plan_view: invalid view parameters");

    ViewPlan plan;
    plan.spec = spec;
    if (spec.scale == 1.0) {
        plan.scaled_width = width;
        plan.scaled_height = height;
    } else {
        plan.scaled_width = std::max(1, static_cast<int>(std::lround(spec.scale * width)));
        plan.scaled_height = std::max(1, static_cast<int>(std::lround(spec.scale * height)));
    }

    plan.rotated_width = plan.scaled_width;
    plan.rotated_height = plan.scaled_height;
    if (spec.phi != 0.0) {
        const AffineMap2D r = AffineMap2D::rotation(spec.phi * kDeg);
        const double w1 = plan.scaled_width - 1.0, h1 = plan.scaled_height - 1.0;
        double minx = 0, miny = 0, maxx = 0, maxy = 0;
        const std::array<std::pair<double, double>, 3> corners{{{w1, 0.0}, {0.0, h1}, {w1, h1}}};
        for (auto [cx, cy] : corners) {
            auto [px, py] = r.apply(cx, cy);
            minx = std::min(minx, px);
            maxx = std::max(maxx, px);
            miny = std::min(miny, py);
            maxy = std::max(maxy, py);
        }
        plan.rotate = AffineMap2D::translation(-minx, -miny).after(r);
        plan.rotated_width = static_cast<int>(std::ceil(maxx - minx - 1e-9)) + 1;
        plan.rotated_height = static_cast<int>(std::ceil(maxy - miny - 1e-9)) + 1;
    }

    plan.width = plan.rotated_width;
    plan.height = plan.rotated_height;
    if (spec.tilt != 1.0)
        plan.width = std::max(1, static_cast<int>(std::lround(plan.rotated_width / spec.tilt)));

    const AffineMap2D scale = AffineMap2D::scaling(spec.scale, spec.scale);
    const AffineMap2D shrink = AffineMap2D::scaling(1.0 / spec.tilt, 1.0);
    plan.spec.frame_map = shrink.after(plan.rotate).after(scale);
    return plan;
}

bool SynthesizedView::is_valid(double x, double y) const
{
    const int xi = static_cast<int>(std::lround(x));
    const int yi = static_cast<int>(std::lround(y));
    if (xi < 0 || yi < 0 || xi >= image.width() || yi >= image.height())
        return false;
    return valid[static_cast<std::size_t>(yi) * image.width() + xi] != 0;
}

SynthesizedView synthesize_view(const Image& img, const ViewSpec& spec, double sigma_base)
{
    const ViewPlan plan = plan_view(spec, img.width(), img.height());

    Image cur = downsample(img, spec.scale, sigma_base);
    if (spec.phi != 0.0)
        cur = warp_affine(cur, plan.rotate, plan.rotated_width, plan.rotated_height);
    if (sigma_base > 0.0)
        cur = gaussian_blur_anisotropic(cur, spec.tilt * sigma_base, sigma_base);
    const AffineMap2D shrink = AffineMap2D::scaling(1.0 / spec.tilt, 1.0);
    if (spec.tilt != 1.0)
        cur = warp_affine(cur, shrink, plan.width, plan.height);

    SynthesizedView view;
    view.spec = plan.spec;
    view.image = std::move(cur);
    view.valid.assign(view.image.size(), 1);
    if (spec.phi != 0.0 || spec.tilt != 1.0) {
        // Valid where the inverse map lands inside the scaled source.
        const AffineMap2D inv = shrink.after(plan.rotate).inverse();
        const double xmax = plan.scaled_width - 1.0, ymax = plan.scaled_height - 1.0;
        for (int y = 0; y < plan.height; ++y) {
            for (int x = 0; x < plan.width; ++x) {
                auto [sx, sy] = inv.apply(x, y);
                const bool inside = sx >= 0.0 && sy >= 0.0 && sx <= xmax && sy <= ymax;
                view.valid[static_cast<std::size_t>(y) * plan.width + x] = inside ? 1 : 0;
            }
        }
    }
    return view;
}

AffineFrame backproject_frame(const AffineFrame& frame, const ViewSpec& view)
{
    const AffineMap2D inv = view.frame_map.inverse();
    AffineFrame out = frame;
    auto [x, y] = inv.apply(frame.x, frame.y);
    out.x = x;
    out.y = y;
    out.a11 = inv.a11 * frame.a11 + inv.a12 * frame.a21;
    out.a12 = inv.a11 * frame.a12 + inv.a12 * frame.a22;
    out.a21 = inv.a21 * frame.a11 + inv.a22 * frame.a21;
    out.a22 = inv.a21 * frame.a12 + inv.a22 * frame.a22;
    out.scale = std::sqrt(std::abs(out.det()));
    return out;
}

double default_sigma_base(DetectorKind kind)
{
    switch (kind) {
    case DetectorKind::MSER: return 0.8;
    case DetectorKind::HESSAFF: return 0.2;
    case DetectorKind::DOG: return 0.4;
    }
    return 0.0;
}

namespace {

NamedConfig make(std::string name, DetectorKind kind, std::vector<double> scales,
    std::vector<double> tilts, double delta_phi_base)
{
    SynthesisConfig cfg;
    cfg.scales = std::move(scales);
    cfg.tilts = std::move(tilts);
    cfg.delta_phi_base = delta_phi_base;
    cfg.sigma_base = default_sigma_base(kind);
    return {std::move(name), kind, std::move(cfg)};
}

std::vector<NamedConfig> build_presets()
{
    const double r2 = std::numbers::sqrt2;
    const std::vector<double> mser_scales{1.0, 0.25, 0.125};
    const std::vector<double> geometric{1.0, r2, 2.0, 2.0 * r2, 4.0, 4.0 * r2, 8.0};
    const std::vector<double> linear{1.0, 2.0, 4.0, 6.0, 8.0};
    using enum DetectorKind;
    return {
        make("mser-sparse", MSER, mser_scales, {1.0, 5.0, 9.0}, 360.0),
        make("mser-dense", MSER, mser_scales, linear, 72.0),
        make("hessaff-sparse", HESSAFF, {1.0}, geometric, 360.0),
        make("hessaff-dense", HESSAFF, {1.0}, linear, 72.0),
        make("dog-sparse", DOG, {1.0}, linear, 120.0),
        make("dog-dense", DOG, {1.0}, geometric, 72.0),
        make("mods-step1", MSER, mser_scales, {1.0}, 360.0),
        make("mods-step2", MSER, mser_scales, {1.0, 5.0, 9.0}, 360.0),
        make("mods-step3", HESSAFF, {1.0}, geometric, 360.0),
        make("mods-step4", HESSAFF, {1.0}, linear, 72.0),
    };
}

}  // namespace

const std::vector<NamedConfig>& presets()
{
    static const std::vector<NamedConfig> all = build_presets();
    return all;
}

const NamedConfig& find_preset(const std::string& name)
{
    for (const auto& p : presets())
        if (p.name == name)
            return p;
    throw std::invalid_argument("unknown preset '" + name + "'");
}

NamedConfig plain_config(DetectorKind kind)
{
    return make(std::string(to_string(kind)) + "-plain", kind, {1.0}, {1.0}, 360.0);
}

}  // namespace mods

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mods/frame.hpp"
#include "mods/image.hpp"

namespace mods {

/// Sampling of the view sphere for one detector.
struct SynthesisConfig {
    std::vector<double> scales{1.0};
    std::vector<double> tilts{1.0};
    double delta_phi_base = 360.0;  // degrees, longitude step at t = 1
    double sigma_base = 0.0;        // pixels, pre-smoothing

    /// Throws std::invalid_argument when a tilt < 1, a scale is outside (0,1]
    /// or the longitude step is outside (0,360].
    void validate() const;
};

/// One synthesized view. `frame_map` takes original image coordinates to view
/// coordinates; enumerate_views() fills only its linear part, plan_view() and
/// synthesize_view() add the canvas translation.
struct ViewSpec {
    double scale = 1.0;
    double tilt = 1.0;
    double phi = 0.0;  // degrees, [0, 180)
    AffineMap2D frame_map;

    bool is_identity() const { return scale == 1.0 && tilt == 1.0 && phi == 0.0; }
};

/// Linear part of the synthesis map: shrink(1/t along x) * R(phi) * S.
AffineMap2D view_linear_map(double scale, double tilt, double phi_deg);

/// Views ordered by scale (descending), tilt (ascending), longitude (ascending).
/// For t = 1 only phi = 0 is emitted; otherwise phi = k * delta_phi_base / t for
/// every k with phi < 180.
std::vector<ViewSpec> enumerate_views(const SynthesisConfig& cfg);

/// Geometry of a view rendered from a width x height source.
struct ViewPlan {
    ViewSpec spec;             // frame_map complete (with canvas translation)
    int scaled_width = 0;      // after the scale step
    int scaled_height = 0;
    AffineMap2D rotate;        // scaled image -> rotated canvas
    int rotated_width = 0;
    int rotated_height = 0;
    int width = 0;             // final canvas
    int height = 0;
};

ViewPlan plan_view(const ViewSpec& spec, int width, int height);

struct SynthesizedView {
    ViewSpec spec;
    Image image;
    /// 1 where the view pixel comes from the source image, 0 on canvas fill.
    std::vector<std::uint8_t> valid;

    bool is_valid(double x, double y) const;
};

/// Scale-space downsample by S, rotate by phi into a canvas holding the whole
/// rotated image, blur (t*sigma_base horizontally, sigma_base vertically) and
/// shrink horizontally by t.
SynthesizedView synthesize_view(const Image& img, const ViewSpec& spec, double sigma_base);

/// Maps a frame detected in the view back into original image coordinates.
AffineFrame backproject_frame(const AffineFrame& frame, const ViewSpec& view);

/// A synthesis configuration bound to a detector, addressable by name.
struct NamedConfig {
    std::string name;
    DetectorKind detector;
    SynthesisConfig config;
};

/// Default pre-smoothing per detector: MSER 0.8, Hessian-Affine 0.2, DoG 0.4.
double default_sigma_base(DetectorKind kind);

/// mser-sparse, mser-dense, hessaff-sparse, hessaff-dense, dog-sparse,
/// dog-dense, then mods-step1 .. mods-step4.
const std::vector<NamedConfig>& presets();

/// Throws std::invalid_argument for unknown names.
const NamedConfig& find_preset(const std::string& name);

/// No synthesis at all: {S}={1}, {t}={1}.
NamedConfig plain_config(DetectorKind kind);

}  // namespace mods

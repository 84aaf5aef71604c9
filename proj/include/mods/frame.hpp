#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mods {

enum class DetectorKind { MSER, HESSAFF, DOG };

std::string_view to_string(DetectorKind kind);
/// Accepts "mser", "hessaff" / "hessian-affine", "dog" (case-insensitive).
std::optional<DetectorKind> parse_detector(std::string_view name);

/// Oriented affine region.
///
/// `shape` maps the unit circle onto the characteristic ellipse of the region
/// (in pixels, in the coordinates of the image the frame currently lives in);
/// `scale` is sqrt(det(shape)). The descriptor measurement region is this
/// ellipse magnified 3x. `orientation` is measured in the normalized patch.
struct AffineFrame {
    double x = 0.0;
    double y = 0.0;
    double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;
    double scale = 1.0;
    double orientation = 0.0;
    DetectorKind detector = DetectorKind::DOG;
    int view_id = 0;
    double response = 0.0;

    double det() const { return a11 * a22 - a12 * a21; }
};

/// `x y a11 a12 a21 a22 scale detector view_id`, one frame per line.
void write_frames(std::ostream& out, const std::vector<AffineFrame>& frames);
std::vector<AffineFrame> read_frames(std::istream& in);

}  // namespace mods

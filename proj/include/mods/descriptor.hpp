#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mods/frame.hpp"
#include "mods/image.hpp"

namespace mods {

inline constexpr int kPatchSize = 41;
/// The patch covers the frame ellipse magnified this many times.
inline constexpr double kMagnification = 3.0;
inline constexpr int kMaxOrientations = 4;

enum class DescriptorKind { SIFT_L2, ROOTSIFT };

struct Descriptor {
    std::array<float, 128> values{};
    DescriptorKind kind = DescriptorKind::SIFT_L2;
};

/// Samples affine-normalized patches from an image. A small dyadic pyramid is
/// kept so that strongly shrinking frames sample a pre-blurred level.
class PatchExtractor {
public:
    explicit PatchExtractor(const Image& img);

    /// Patch of size x size pixels whose inscribed circle is the measurement
    /// ellipse. std::nullopt when the ellipse leaves the image. Throws
    /// std::invalid_argument for a singular shape.
    std::optional<Image> extract(const AffineFrame& frame, int size = kPatchSize) const;

    int width() const { return levels_.front().width(); }
    int height() const { return levels_.front().height(); }

private:
    std::vector<Image> levels_;
};

/// True if the magnified ellipse of `frame` fits into [0,w-1] x [0,h-1].
bool measurement_region_inside(const AffineFrame& frame, int width, int height);

/// Peaks of the 36-bin gradient orientation histogram (radians in [0, 2pi)),
/// strongest first, at most kMaxOrientations. A flat patch gives {0}.
std::vector<double> dominant_orientations(const Image& patch);

/// 4x4x8 SIFT in the frame rotated by `orientation`. Throws
/// std::invalid_argument for non-square patches smaller than 16 pixels.
Descriptor sift_describe(const Image& patch, double orientation);

/// L1 normalization followed by an elementwise square root.
Descriptor root_sift(const Descriptor& d);

double l2_distance(const Descriptor& a, const Descriptor& b);

/// Features of one image: frames (orientation filled in) and their descriptors.
struct FeatureSet {
    std::vector<AffineFrame> frames;
    std::vector<Descriptor> descriptors;
    std::size_t size() const { return frames.size(); }
};

/// Orientation assignment and description for every frame whose measurement
/// region lies inside the image; a frame with k orientations yields k entries.
FeatureSet describe_frames(const PatchExtractor& extractor, const std::vector<AffineFrame>& frames,
    DescriptorKind kind = DescriptorKind::ROOTSIFT);

/// Each entry: a frame line (see write_frames) followed by a line of 128 floats.
void write_descriptors(std::ostream& out, const FeatureSet& features);
FeatureSet read_descriptors(std::istream& in);

}  // namespace mods

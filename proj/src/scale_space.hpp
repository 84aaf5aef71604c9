#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mods/image.hpp"

namespace mods::detail {

/// One octave of a Gaussian scale space. Level i has blur
/// sigmas[i] = sigma0 * 2^(i / scales) in octave pixels.
struct Octave {
    double pixel_distance = 1.0;  // size of an octave pixel in input pixels
    std::vector<Image> levels;
    std::vector<double> sigmas;
};

/// Builds octaves with scales + 3 levels each, assuming an input blur of 0.5.
/// Octaves are added while the shorter side stays >= min_size.
std::vector<Octave> build_octaves(const Image& img, int scales, double sigma0, int min_size);

/// Refined location of an extremum in a stack of response images.
struct Extremum {
    double x = 0.0, y = 0.0;  // octave pixels
    double level = 0.0;       // fractional level index
    double value = 0.0;       // interpolated response
    int xi = 0, yi = 0, li = 0;
};

/// Iterative 3-D quadratic refinement (up to 5 steps). Returns false when the
/// fit diverges or leaves the valid interior.
bool refine_extremum(const std::vector<Image>& stack, int x, int y, int level, int border,
    Extremum& out);

/// True if value at (x,y,level) is strictly greater (or smaller, for
/// maximum == false) than all 26 neighbours.
bool is_extremum(const std::vector<Image>& stack, int x, int y, int level, bool maximum);

}  // namespace mods::detail

#pragma once

#include <cstdint>

#include "mods/image.hpp"

namespace mods::testing {

/// Piecewise-constant clutter of random ellipses, triangles and bars over a
/// smooth gradient, lightly blurred. Deterministic for a given seed.
Image make_scene(int width, int height, std::uint64_t seed);

/// Filled disk (value `inside`) on a constant background.
Image make_disk(int width, int height, double cx, double cy, double radius, float inside, float outside);

/// Sum of an anisotropic Gaussian blob on a flat background.
Image make_blob(int width, int height, double cx, double cy, double sx, double sy, float amplitude,
    float background);

/// Uniform noise in [0,1].
Image make_noise(int width, int height, std::uint64_t seed);

}  // namespace mods::testing

#pragma once

#include <cstdint>

#include "reld/image.hpp"

namespace reld {

/// Synthetic piecewise-smooth test image: a smooth linear ramp background with
/// a handful of overlapping shaded ellipses and rectangles. Values stay within
/// [0.05, 0.95]. Deterministic in (shape, seed).
Image piecewise_smooth_phantom(Shape shape, std::uint64_t seed);

}  // namespace reld

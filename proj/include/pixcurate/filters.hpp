#pragma once

#include <cstdint>

#include "pixcurate/image.hpp"

namespace pixcurate {

// Population variance of the 4-neighbour Laplacian (centre -4, N/S/E/W +1)
// over the whole image with replicate-padded borders. Sums are exact 64-bit
// integers, so the result does not depend on traversal order.
double laplacian_variance_of(const GrayBuffer& g);

// Population variance of the Sobel-3 gradient magnitude sqrt(Gx^2 + Gy^2)
// inside region, computed on the region in isolation with replicate-padded
// borders.
double sobel_magnitude_variance(const GrayBuffer& g, const PatchSpec& region);

}  // namespace pixcurate

#pragma once

#include <span>

#include "camokit/raster.hpp"

namespace camokit {

// Mean of the two directed average nearest-neighbour distances. Returns 0 when
// both sets are empty and +inf when exactly one is.
double chamfer_distance(const BinaryMask& a, const BinaryMask& b);

// Symmetric Hausdorff distance with the same empty-set conventions.
double hausdorff_distance(const BinaryMask& a, const BinaryMask& b);

}  // namespace camokit

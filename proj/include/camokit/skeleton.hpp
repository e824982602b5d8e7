#pragma once

#include <cstdint>

#include "camokit/raster.hpp"

namespace camokit {

// 3x3 neighbourhood of a pixel packed as bits, clockwise from north:
// bit0=N, bit1=NE, bit2=E, bit3=SE, bit4=S, bit5=SW, bit6=W, bit7=NW.
// Out-of-image neighbours are background.
std::uint8_t neighbourhood_code(const BinaryMask& mask, int y, int x);

// Deleting the centre of this neighbourhood preserves topology under
// foreground-8 / background-4 connectivity (Yokoi connectivity number == 1).
bool is_simple(std::uint8_t code);

// Thinning by repeated directional passes that delete simple, non-end
// border pixels one at a time, followed by a pass that removes any remaining
// simple pixel inside a 2x2 block. The result is a subset of the input with
// the same Euler number.
BinaryMask skeletonize(const BinaryMask& mask);

// True when some 2x2 window is entirely foreground.
bool has_square_block(const BinaryMask& mask);

}  // namespace camokit

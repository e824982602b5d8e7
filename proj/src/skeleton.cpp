#include "camokit/skeleton.hpp"

#include <array>
#include <bit>
#include <vector>

namespace camokit {

namespace {

// Clockwise from north, matching the bit order of neighbourhood_code.
constexpr std::array<Pixel, 8> kRing{{{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}}};

// Directional sub-passes: a pixel is a candidate when this 4-neighbour is background.
constexpr std::array<int, 4> kPassBits{0, 4, 2, 6};  // N, S, E, W

bool deletable(std::uint8_t code) {
    // End points (one neighbour) are kept so strokes keep their extent.
    return std::popcount(code) >= 2 && is_simple(code);
}

}  // namespace

std::uint8_t neighbourhood_code(const BinaryMask& mask, int y, int x) {
    std::uint8_t code = 0;
    for (int k = 0; k < 8; ++k) {
        const int yy = y + kRing[k].y;
        const int xx = x + kRing[k].x;
        if (mask.contains(yy, xx) && mask(yy, xx)) {
            code |= static_cast<std::uint8_t>(1u << k);
        }
    }
    return code;
}

bool is_simple(std::uint8_t code) {
    auto bg = [code](int k) { return ((code >> (k & 7)) & 1u) ? 0 : 1; };
    int yokoi = 0;
    for (int k = 0; k < 8; k += 2) {
        yokoi += bg(k) - bg(k) * bg(k + 1) * bg(k + 2);
    }
    return yokoi == 1;
}

bool has_square_block(const BinaryMask& mask) {
    for (int y = 0; y + 1 < mask.height(); ++y) {
        for (int x = 0; x + 1 < mask.width(); ++x) {
            if (mask(y, x) && mask(y, x + 1) && mask(y + 1, x) && mask(y + 1, x + 1)) {
                return true;
            }
        }
    }
    return false;
}

BinaryMask skeletonize(const BinaryMask& mask) {
    BinaryMask out = mask;
    std::vector<Pixel> candidates;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int bit : kPassBits) {
            candidates.clear();
            for (int y = 0; y < out.height(); ++y) {
                for (int x = 0; x < out.width(); ++x) {
                    if (out(y, x) && !((neighbourhood_code(out, y, x) >> bit) & 1u)) {
                        candidates.push_back({y, x});
                    }
                }
            }
            // Sequential deletion: each removal is checked against the current state.
            for (const Pixel& p : candidates) {
                if (deletable(neighbourhood_code(out, p.y, p.x))) {
                    out(p.y, p.x) = 0;
                    changed = true;
                }
            }
        }
    }

    // Directional thinning can leave 2x2 blocks at junctions; remove a simple
    // pixel from each where one exists.
    changed = true;
    while (changed) {
        changed = false;
        for (int y = 0; y + 1 < out.height(); ++y) {
            for (int x = 0; x + 1 < out.width(); ++x) {
                if (!(out(y, x) && out(y, x + 1) && out(y + 1, x) && out(y + 1, x + 1))) {
                    continue;
                }
                for (const Pixel& p : {Pixel{y, x}, Pixel{y, x + 1}, Pixel{y + 1, x}, Pixel{y + 1, x + 1}}) {
                    if (is_simple(neighbourhood_code(out, p.y, p.x))) {
                        out(p.y, p.x) = 0;
                        changed = true;
                        break;
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace camokit

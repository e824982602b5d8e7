#include "camokit/raster.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <string>

namespace camokit {

namespace {

constexpr std::array<Pixel, 4> kNeighbors4{{{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};
constexpr std::array<Pixel, 8> kNeighbors8{{{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};

void check_window(int theta) {
    if (theta < 1 || theta % 2 == 0) {
        throw ParameterError("pooling window must be odd and >= 1, got " + std::to_string(theta));
    }
}

}  // namespace

void validate_probabilities(const ProbMap& map) {
    for (std::size_t i = 0; i < map.size(); ++i) {
        const double v = map[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ValidationError("probability outside [0,1] at flat index " + std::to_string(i));
        }
    }
}

ProbMap to_prob(const BinaryMask& mask) {
    ProbMap out(mask.height(), mask.width());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        out[i] = mask[i] ? 1.0 : 0.0;
    }
    return out;
}

BinaryMask threshold(const ProbMap& map, double threshold) {
    BinaryMask out(map.height(), map.width());
    for (std::size_t i = 0; i < map.size(); ++i) {
        out[i] = map[i] >= threshold ? 1 : 0;
    }
    return out;
}

std::size_t count_foreground(const BinaryMask& mask) {
    std::size_t n = 0;
    for (auto v : mask.data()) {
        n += v ? 1 : 0;
    }
    return n;
}

std::vector<Pixel> foreground_pixels(const BinaryMask& mask) {
    std::vector<Pixel> out;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask(y, x)) {
                out.push_back({y, x});
            }
        }
    }
    return out;
}

PoolResult maxpool_argmax(const RealMap& map, int theta, double border) {
    check_window(theta);
    const int r = theta / 2;
    const int h = map.height();
    const int w = map.width();
    PoolResult out{RealMap(h, w), std::vector<std::ptrdiff_t>(map.size(), -1)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool clipped = false;
            double best = 0.0;
            std::ptrdiff_t best_at = -1;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = y + dy;
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = x + dx;
                    if (!map.contains(yy, xx)) {
                        clipped = true;
                        continue;
                    }
                    const double v = map(yy, xx);
                    if (best_at < 0 || v > best) {
                        best = v;
                        best_at = static_cast<std::ptrdiff_t>(map.index(yy, xx));
                    }
                }
            }
            if (clipped && border > best) {
                best = border;
                best_at = -1;
            }
            out.values(y, x) = best;
            out.argmax[map.index(y, x)] = best_at;
        }
    }
    return out;
}

RealMap maxpool(const RealMap& map, int theta, double border) {
    check_window(theta);
    const int r = theta / 2;
    const int h = map.height();
    const int w = map.width();
    // Square windows are separable: rows first, then columns.
    RealMap rows(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double best = (x - r < 0 || x + r >= w) ? border : map(y, std::max(0, x - r));
            for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                best = std::max(best, map(y, xx));
            }
            rows(y, x) = best;
        }
    }
    RealMap out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double best = (y - r < 0 || y + r >= h) ? border : rows(std::max(0, y - r), x);
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
                best = std::max(best, rows(yy, x));
            }
            out(y, x) = best;
        }
    }
    return out;
}

LabelMap connected_components(const BinaryMask& mask, Connectivity connectivity) {
    const int h = mask.height();
    const int w = mask.width();
    LabelMap out{Grid<int>(h, w, 0), 0};
    const std::span<const Pixel> steps = connectivity == Connectivity::Eight
                                             ? std::span<const Pixel>(kNeighbors8)
                                             : std::span<const Pixel>(kNeighbors4);
    std::deque<Pixel> queue;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(y, x) || out.labels(y, x) != 0) {
                continue;
            }
            const int label = ++out.count;
            out.labels(y, x) = label;
            queue.push_back({y, x});
            while (!queue.empty()) {
                const Pixel p = queue.front();
                queue.pop_front();
                for (const Pixel& d : steps) {
                    const int yy = p.y + d.y;
                    const int xx = p.x + d.x;
                    if (mask.contains(yy, xx) && mask(yy, xx) && out.labels(yy, xx) == 0) {
                        out.labels(yy, xx) = label;
                        queue.push_back({yy, xx});
                    }
                }
            }
        }
    }
    return out;
}

int hole_count(const BinaryMask& mask) {
    // Pad with a background frame so every background pixel touching the
    // border joins one outer component.
    BinaryMask background(mask.height() + 2, mask.width() + 2, 1);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            background(y + 1, x + 1) = mask(y, x) ? 0 : 1;
        }
    }
    return connected_components(background, Connectivity::Four).count - 1;
}

int euler_number(const BinaryMask& mask) {
    return connected_components(mask, Connectivity::Eight).count - hole_count(mask);
}

}  // namespace camokit

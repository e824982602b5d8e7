#pragma once

// Independent reference implementations. None of these call into the
// library's algorithms; they only use its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "camokit/raster.hpp"
#include "camokit/rng.hpp"

namespace oracle {

using camokit::BinaryMask;
using camokit::Grid;
using camokit::ProbMap;
using camokit::RealMap;

inline RealMap naive_maxpool(const RealMap& m, int theta, double border) {
    const int r = theta / 2;
    RealMap out(m.height(), m.width());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            double best = -std::numeric_limits<double>::infinity();
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    const bool inside = yy >= 0 && yy < m.height() && xx >= 0 && xx < m.width();
                    best = std::max(best, inside ? m(yy, xx) : border);
                }
            }
            out(y, x) = best;
        }
    }
    return out;
}

// Scan-order flood fill with an explicit stack.
inline Grid<int> flood_labels(const BinaryMask& m, bool eight, int* count) {
    Grid<int> labels(m.height(), m.width(), 0);
    int next = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m(y, x) || labels(y, x) != 0) {
                continue;
            }
            ++next;
            labels(y, x) = next;
            stack.push_back({y, x});
            while (!stack.empty()) {
                auto [cy, cx] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if ((dy == 0 && dx == 0) || (!eight && dy != 0 && dx != 0)) {
                            continue;
                        }
                        const int ny = cy + dy, nx = cx + dx;
                        if (ny >= 0 && ny < m.height() && nx >= 0 && nx < m.width() && m(ny, nx) &&
                            labels(ny, nx) == 0) {
                            labels(ny, nx) = next;
                            stack.push_back({ny, nx});
                        }
                    }
                }
            }
        }
    }
    if (count) {
        *count = next;
    }
    return labels;
}

// Gray's bit-quad count for 8-connected foreground: (Q1 - Q3 - 2 QD) / 4.
inline int bitquad_euler(const BinaryMask& m) {
    auto at = [&](int y, int x) { return y >= 0 && y < m.height() && x >= 0 && x < m.width() && m(y, x); };
    int q1 = 0, q3 = 0, qd = 0;
    for (int y = -1; y < m.height(); ++y) {
        for (int x = -1; x < m.width(); ++x) {
            const int a = at(y, x), b = at(y, x + 1), c = at(y + 1, x), d = at(y + 1, x + 1);
            const int n = a + b + c + d;
            if (n == 1) {
                ++q1;
            } else if (n == 3) {
                ++q3;
            } else if (n == 2 && a == d) {
                ++qd;
            }
        }
    }
    return (q1 - q3 - 2 * qd) / 4;
}

// components(fg, 8) - (components(padded bg, 4) - 1).
inline int dual_euler(const BinaryMask& m) {
    int fg = 0;
    flood_labels(m, true, &fg);
    BinaryMask bg(m.height() + 2, m.width() + 2, 1);
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            bg(y + 1, x + 1) = m(y, x) ? 0 : 1;
        }
    }
    int bgc = 0;
    flood_labels(bg, false, &bgc);
    return fg - (bgc - 1);
}

// Simple-point test by the two local component counts: the 8-components of
// the foreground neighbours, and the 4-components of background neighbours
// that touch the centre 4-adjacently (both counted inside the 8-neighbourhood).
inline bool simple_by_components(std::uint8_t code) {
    // Neighbour k at offset (dy[k], dx[k]), clockwise from north.
    const int dy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    const int dx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    auto fg = [&](int k) { return (code >> k) & 1; };
    auto adjacent = [&](int a, int b, bool eight) {
        const int ddy = std::abs(dy[a] - dy[b]), ddx = std::abs(dx[a] - dx[b]);
        return eight ? (ddy <= 1 && ddx <= 1) : (ddy + ddx == 1);
    };
    auto count = [&](bool want_fg, bool eight, bool touch_centre_4) {
        int seen = 0, comps = 0;
        for (int s = 0; s < 8; ++s) {
            if ((fg(s) != 0) != want_fg || (seen >> s & 1)) {
                continue;
            }
            int members = 1 << s;
            seen |= 1 << s;
            bool grew = true;
            while (grew) {
                grew = false;
                for (int a = 0; a < 8; ++a) {
                    if (!(members >> a & 1)) {
                        continue;
                    }
                    for (int b = 0; b < 8; ++b) {
                        if ((fg(b) != 0) == want_fg && !(seen >> b & 1) && adjacent(a, b, eight)) {
                            seen |= 1 << b;
                            members |= 1 << b;
                            grew = true;
                        }
                    }
                }
            }
            // Even-indexed neighbours are the 4-neighbours of the centre.
            if (!touch_centre_4 || (members & 0b01010101)) {
                ++comps;
            }
        }
        return comps;
    };
    return count(true, true, false) == 1 && count(false, false, true) == 1;
}

// Brute-force nearest distances.
inline std::vector<camokit::Pixel> pixels_of(const BinaryMask& m) {
    std::vector<camokit::Pixel> out;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (m(y, x)) {
                out.push_back({y, x});
            }
        }
    }
    return out;
}

inline std::vector<double> nearest(const std::vector<camokit::Pixel>& from, const std::vector<camokit::Pixel>& to) {
    std::vector<double> d;
    for (const auto& p : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to) {
            const double dy = p.y - q.y, dx = p.x - q.x;
            best = std::min(best, std::sqrt(dy * dy + dx * dx));
        }
        d.push_back(best);
    }
    return d;
}

inline double chamfer(const BinaryMask& a, const BinaryMask& b) {
    const auto pa = pixels_of(a), pb = pixels_of(b);
    if (pa.empty() && pb.empty()) {
        return 0.0;
    }
    if (pa.empty() || pb.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    double sa = 0.0, sb = 0.0;
    for (double v : nearest(pa, pb)) {
        sa += v;
    }
    for (double v : nearest(pb, pa)) {
        sb += v;
    }
    return 0.5 * (sa / pa.size() + sb / pb.size());
}

inline double hausdorff(const BinaryMask& a, const BinaryMask& b) {
    const auto pa = pixels_of(a), pb = pixels_of(b);
    if (pa.empty() && pb.empty()) {
        return 0.0;
    }
    if (pa.empty() || pb.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    double h = 0.0;
    for (double v : nearest(pa, pb)) {
        h = std::max(h, v);
    }
    for (double v : nearest(pb, pa)) {
        h = std::max(h, v);
    }
    return h;
}

// ---- losses in long double, pixel by pixel ---------------------------------

using ld = long double;

inline ld clampl(ld p, ld eps) { return std::min(std::max(p, eps), 1.0L - eps); }

inline ld bce(const ProbMap& p, const BinaryMask& g, ld eps) {
    ld s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const ld q = clampl(p[i], eps);
        s += g[i] ? -std::log(q) : -std::log(1.0L - q);
    }
    return s / p.size();
}

inline ld dice(const ProbMap& p, const BinaryMask& g) {
    ld inter = 0, sp = 0, sg = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        inter += static_cast<ld>(p[i]) * g[i];
        sp += p[i];
        sg += g[i];
    }
    return 1.0L - (2.0L * inter + 1.0L) / (sp + sg + 1.0L);
}

inline ld focal_sum(const ProbMap& p, const BinaryMask& g, ld gamma, ld eps) {
    ld s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const ld q = clampl(p[i], eps);
        const ld pt = g[i] ? q : 1.0L - q;
        s += -std::pow(1.0L - pt, gamma) * std::log(pt);
    }
    return s;
}

inline ld gamma_a(const ProbMap& p, const BinaryMask& g, ld eps) {
    ld s = 0, n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (g[i]) {
            s += clampl(p[i], eps);
            n += 1;
        }
    }
    return n == 0 ? 0.0L : 1.0L - s / n;
}

inline ld afl_sum(const ProbMap& p, const BinaryMask& g, ld gamma, ld ga, ld alpha, ld eps) {
    ld s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const ld q = clampl(p[i], eps);
        const ld pt = g[i] ? q : 1.0L - q;
        s += -std::pow(1.0L - pt, gamma + ga) * std::log(pt) + alpha * std::pow(1.0L - pt, gamma + ga + 1.0L);
    }
    return s;
}

// Window max in long double, border rule as in the boundary loss.
inline std::vector<ld> pool_ld(const std::vector<ld>& v, int h, int w, int theta, ld border) {
    const int r = theta / 2;
    std::vector<ld> out(v.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            ld best = -1e300L;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    best = std::max(best, (yy >= 0 && yy < h && xx >= 0 && xx < w) ? v[yy * w + xx] : border);
                }
            }
            out[y * w + x] = best;
        }
    }
    return out;
}

inline std::vector<ld> boundary_ld(const std::vector<ld>& m, int h, int w, int theta1) {
    std::vector<ld> inv(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        inv[i] = 1.0L - m[i];
    }
    std::vector<ld> b = pool_ld(inv, h, w, theta1, 1.0L);
    for (std::size_t i = 0; i < m.size(); ++i) {
        b[i] = std::min(std::max(b[i] - inv[i], 0.0L), 1.0L);
    }
    return b;
}

struct BoundaryLd {
    ld precision, recall, loss;
};

inline BoundaryLd boundary_loss(const ProbMap& p, const BinaryMask& g, int theta1, int theta2) {
    const int h = p.height(), w = p.width();
    std::vector<ld> mp(p.size()), mg(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        mp[i] = p[i];
        mg[i] = g[i];
    }
    const auto bp = boundary_ld(mp, h, w, theta1);
    const auto bg = boundary_ld(mg, h, w, theta1);
    const auto ep = pool_ld(bp, h, w, theta2, 0.0L);
    const auto eg = pool_ld(bg, h, w, theta2, 0.0L);
    ld np = 0, dp = 0, nr = 0, dr = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        np += bp[i] * eg[i];
        dp += bp[i];
        nr += bg[i] * ep[i];
        dr += bg[i];
    }
    const ld P = dp > 0 ? np / dp : 0.0L;
    const ld R = dr > 0 ? nr / dr : 0.0L;
    const ld f = (P + R) > 0 ? 2.0L * P * R / (P + R) : 0.0L;
    return {P, R, 1.0L - f};
}

// ---- random rasters ----------------------------------------------------------

inline BinaryMask random_mask(int h, int w, double density, camokit::Rng& rng) {
    BinaryMask m(h, w);
    for (auto& v : m.data()) {
        v = rng.uniform() < density ? 1 : 0;
    }
    return m;
}

inline ProbMap random_prob(int h, int w, camokit::Rng& rng) {
    ProbMap m(h, w);
    for (auto& v : m.data()) {
        v = rng.uniform();
    }
    return m;
}

}  // namespace oracle

namespace oracle {

// Filled ellipse with `holes` disjoint disk holes strictly inside it; the
// hole count is verified by flood fill before returning.
inline BinaryMask holey_shape(int side, int holes, camokit::Rng& rng) {
    for (;;) {
        BinaryMask m(side, side);
        const double cy = side / 2.0 + rng.uniform(-3.0, 3.0);
        const double cx = side / 2.0 + rng.uniform(-3.0, 3.0);
        const double ry = rng.uniform(0.3, 0.42) * side;
        const double rx = rng.uniform(0.3, 0.42) * side;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const double u = (y - cy) / ry, v = (x - cx) / rx;
                m(y, x) = u * u + v * v <= 1.0 ? 1 : 0;
            }
        }
        for (int h = 0; h < holes; ++h) {
            const double r = rng.uniform(1.5, 4.0);
            const double hy = cy + rng.uniform(-0.5, 0.5) * ry;
            const double hx = cx + rng.uniform(-0.5, 0.5) * rx;
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) {
                    if ((y - hy) * (y - hy) + (x - hx) * (x - hx) <= r * r) {
                        m(y, x) = 0;
                    }
                }
            }
        }
        // Ragged rim so the thinning sees irregular borders.
        const BinaryMask solid = m;
        for (int y = 1; y + 1 < side; ++y) {
            for (int x = 1; x + 1 < side; ++x) {
                const bool rim = solid(y, x) && (!solid(y - 1, x) || !solid(y + 1, x) || !solid(y, x - 1) || !solid(y, x + 1));
                if (rim && rng.uniform() < 0.3) {
                    m(y, x) = 0;
                }
            }
        }
        int fg = 0;
        flood_labels(m, true, &fg);
        if (fg == 1 && dual_euler(m) == 1 - holes) {
            return m;
        }
    }
}

}  // namespace oracle

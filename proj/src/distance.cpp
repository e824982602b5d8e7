#include "camokit/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace camokit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) {
            continue;
        }
        while (k >= 0) {
            const double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -kInf : ((f[q] + q * q) - (f[v[k - 1]] + v[k - 1] * v[k - 1])) / (2.0 * q - 2.0 * v[k - 1]);
        z[k + 1] = kInf;
    }
    if (k < 0) {
        std::fill(d.begin(), d.end(), kInf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) {
            ++j;
        }
        const double dq = q - v[j];
        d[q] = dq * dq + f[v[j]];
    }
}

// Squared Euclidean distance from every pixel to the nearest foreground pixel of `mask`.
RealMap squared_distance_to(const BinaryMask& mask) {
    const int h = mask.height();
    const int w = mask.width();
    RealMap out(h, w, kInf);
    const int n = std::max(h, w);
    std::vector<double> f, d;
    std::vector<int> v(n + 1);
    std::vector<double> z(n + 2);
    f.resize(h);
    d.resize(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            f[y] = mask(y, x) ? 0.0 : kInf;
        }
        edt_1d(f, d, v, z);
        for (int y = 0; y < h; ++y) {
            out(y, x) = d[y];
        }
    }
    f.resize(w);
    d.resize(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            f[x] = out(y, x);
        }
        edt_1d(f, d, v, z);
        for (int x = 0; x < w; ++x) {
            out(y, x) = d[x];
        }
    }
    return out;
}

struct Directed {
    double mean = 0.0;
    double max = 0.0;
};

Directed directed(const BinaryMask& from, const RealMap& dist_to) {
    double sum = 0.0;
    double worst = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (from[i]) {
            const double d = std::sqrt(dist_to[i]);
            sum += d;
            worst = std::max(worst, d);
            ++n;
        }
    }
    return {n ? sum / static_cast<double>(n) : 0.0, worst};
}

}  // namespace

double chamfer_distance(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    const bool ea = count_foreground(a) == 0;
    const bool eb = count_foreground(b) == 0;
    if (ea && eb) {
        return 0.0;
    }
    if (ea || eb) {
        return kInf;
    }
    return 0.5 * (directed(a, squared_distance_to(b)).mean + directed(b, squared_distance_to(a)).mean);
}

double hausdorff_distance(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    const bool ea = count_foreground(a) == 0;
    const bool eb = count_foreground(b) == 0;
    if (ea && eb) {
        return 0.0;
    }
    if (ea || eb) {
        return kInf;
    }
    return std::max(directed(a, squared_distance_to(b)).max, directed(b, squared_distance_to(a)).max);
}

}  // namespace camokit

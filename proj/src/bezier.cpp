#include "camokit/bezier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace camokit {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point eval_bezier(const CubicBezier& c, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw ParameterError("bezier parameter must lie in [0,1], got " + std::to_string(t));
    }
    const double s = 1.0 - t;
    const double b0 = s * s * s;
    const double b1 = 3.0 * t * s * s;
    const double b2 = 3.0 * t * t * s;
    const double b3 = t * t * t;
    return {b0 * c.p0.x + b1 * c.p1.x + b2 * c.p2.x + b3 * c.p3.x,
            b0 * c.p0.y + b1 * c.p1.y + b2 * c.p2.y + b3 * c.p3.y};
}

Point bezier_d1(const CubicBezier& c, double t) {
    const double s = 1.0 - t;
    return 3.0 * s * s * (c.p1 - c.p0) + 6.0 * s * t * (c.p2 - c.p1) + 3.0 * t * t * (c.p3 - c.p2);
}

Point bezier_d2(const CubicBezier& c, double t) {
    const Point a = c.p2 - 2.0 * c.p1 + c.p0;
    const Point b = c.p3 - 2.0 * c.p2 + c.p1;
    return 6.0 * (1.0 - t) * a + 6.0 * t * b;
}

double control_polygon_length(const CubicBezier& c) {
    return distance(c.p0, c.p1) + distance(c.p1, c.p2) + distance(c.p2, c.p3);
}

CubicBezier straight_bezier(Point p0, Point p3) {
    const Point d = p3 - p0;
    return {p0, p0 + (1.0 / 3.0) * d, p0 + (2.0 / 3.0) * d, p3};
}

std::vector<Point> to_points(std::span<const Pixel> path) {
    std::vector<Point> pts;
    pts.reserve(path.size());
    for (const Pixel& p : path) {
        pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
    }
    return pts;
}

std::vector<double> chord_length_params(std::span<const Point> points) {
    std::vector<double> t(points.size(), 0.0);
    for (std::size_t i = 1; i < points.size(); ++i) {
        t[i] = t[i - 1] + distance(points[i - 1], points[i]);
    }
    const double total = t.empty() ? 0.0 : t.back();
    if (total > 0.0) {
        for (double& v : t) {
            v /= total;
        }
        t.back() = 1.0;
    } else if (t.size() > 1) {
        // Coincident samples: fall back to uniform spacing.
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = static_cast<double>(i) / static_cast<double>(t.size() - 1);
        }
    }
    return t;
}

double fit_rms(const CubicBezier& curve, std::span<const Point> points, std::span<const double> params) {
    if (points.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Point d = eval_bezier(curve, params[i]) - points[i];
        sum += d.x * d.x + d.y * d.y;
    }
    return std::sqrt(sum / static_cast<double>(points.size()));
}

BezierFit fit_with_params(std::span<const Point> points, std::span<const double> params) {
    if (points.size() < 2 || params.size() != points.size()) {
        throw ParameterError("bezier fit needs >= 2 points with one parameter each");
    }
    const Point p0 = points.front();
    const Point p3 = points.back();
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
    Point r1{}, r2{};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double t = params[i];
        const double s = 1.0 - t;
        const double b0 = s * s * s;
        const double b1 = 3.0 * t * s * s;
        const double b2 = 3.0 * t * t * s;
        const double b3 = t * t * t;
        const Point r = points[i] - b0 * p0 - b3 * p3;
        a11 += b1 * b1;
        a12 += b1 * b2;
        a22 += b2 * b2;
        r1 = r1 + b1 * r;
        r2 = r2 + b2 * r;
    }
    BezierFit fit;
    fit.params.assign(params.begin(), params.end());
    const double det = a11 * a22 - a12 * a12;
    if (a11 <= 1e-12 || a22 <= 1e-12 || det <= 1e-10 * a11 * a22) {
        fit.curve = straight_bezier(p0, p3);
        fit.fallback = true;
    } else {
        fit.curve.p0 = p0;
        fit.curve.p3 = p3;
        fit.curve.p1 = {(a22 * r1.x - a12 * r2.x) / det, (a22 * r1.y - a12 * r2.y) / det};
        fit.curve.p2 = {(a11 * r2.x - a12 * r1.x) / det, (a11 * r2.y - a12 * r1.y) / det};
    }
    fit.rms = fit_rms(fit.curve, points, fit.params);
    return fit;
}

namespace {

// Gaussian elimination with partial pivoting on a 4x4 system; false if singular.
bool solve4(std::array<std::array<double, 5>, 4> m, std::array<double, 4>& x) {
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r) {
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) {
                piv = r;
            }
        }
        if (!(std::abs(m[piv][c]) > 1e-300)) {
            return false;
        }
        std::swap(m[c], m[piv]);
        for (int r = c + 1; r < 4; ++r) {
            const double f = m[r][c] / m[c][c];
            for (int k = c; k < 5; ++k) {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    for (int r = 3; r >= 0; --r) {
        double v = m[r][4];
        for (int k = r + 1; k < 4; ++k) {
            v -= m[r][k] * x[k];
        }
        x[r] = v / m[r][r];
    }
    return true;
}

// Levenberg-Marquardt over (p1, p2, interior t_i) starting from `best`. The t
// block of the normal matrix is diagonal, so each step reduces to a 4x4 Schur
// system.
BezierFit lm_refine(std::span<const Point> points, BezierFit best, int max_iterations) {
    const std::size_t n = points.size();
    CubicBezier c = best.curve;
    std::vector<double> t = best.params;
    double rms = best.rms;
    double mu = 1e-3;
    int accepted = 0;
    std::vector<double> vt(n), gt(n);
    std::vector<std::array<double, 4>> w(n);
    for (int it = 0; it < max_iterations && rms > 0.0; ++it) {
        std::array<std::array<double, 5>, 4> u{};
        std::array<double, 4> gp{};
        for (std::size_t i = 0; i < n; ++i) {
            const double s = t[i], r = 1.0 - s;
            const double b1 = 3.0 * s * r * r, b2 = 3.0 * s * s * r;
            const Point res = points[i] - eval_bezier(c, s);
            const std::array<double, 4> jp{b1, b1, b2, b2};
            const std::array<double, 4> rp{res.x, res.y, res.x, res.y};
            for (int a = 0; a < 4; ++a) {
                gp[a] += jp[a] * rp[a];
                for (int b = 0; b < 4; ++b) {
                    if (a % 2 == b % 2) {
                        u[a][b] += jp[a] * jp[b];
                    }
                }
            }
            if (i == 0 || i + 1 == n) {
                continue;
            }
            const Point d = bezier_d1(c, s);
            w[i] = {b1 * d.x, b1 * d.y, b2 * d.x, b2 * d.y};
            vt[i] = d.x * d.x + d.y * d.y;
            gt[i] = d.x * res.x + d.y * res.y;
        }
        for (int a = 0; a < 4; ++a) {
            u[a][a] *= 1.0 + mu;
            u[a][4] = gp[a];
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double v = vt[i] * (1.0 + mu) + 1e-300;
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) {
                    u[a][b] -= w[i][a] * w[i][b] / v;
                }
                u[a][4] -= w[i][a] * gt[i] / v;
            }
        }
        std::array<double, 4> dp{};
        if (!solve4(u, dp)) {
            mu *= 10.0;
            continue;
        }
        CubicBezier cand = c;
        cand.p1 = cand.p1 + Point{dp[0], dp[1]};
        cand.p2 = cand.p2 + Point{dp[2], dp[3]};
        std::vector<double> tc = t;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double v = vt[i] * (1.0 + mu) + 1e-300;
            double wd = 0.0;
            for (int a = 0; a < 4; ++a) {
                wd += w[i][a] * dp[a];
            }
            tc[i] = std::clamp(t[i] + (gt[i] - wd) / v, 0.0, 1.0);
        }
        const double cand_rms = fit_rms(cand, points, tc);
        if (cand_rms < rms) {
            const double gain = rms - cand_rms;
            c = cand;
            t = std::move(tc);
            rms = cand_rms;
            mu = std::max(mu / 3.0, 1e-12);
            ++accepted;
            if (gain <= 1e-16 * (1.0 + rms)) {
                break;
            }
        } else {
            mu *= 4.0;
            if (mu > 1e12) {
                break;
            }
        }
    }
    // Final linear solve so p1, p2 are exactly least-squares optimal for the returned t.
    BezierFit refined = fit_with_params(points, t);
    if (!refined.fallback && refined.rms <= rms) {
        refined.iterations = accepted;
        return refined;
    }
    if (rms < best.rms) {
        best.curve = c;
        best.params = t;
        best.rms = rms;
        best.iterations = accepted;
    }
    return best;
}

// Parameters from cumulative chord length raised to `power`: 1 is chord
// length, 0.5 centripetal, 0 uniform.
std::vector<double> power_params(std::span<const Point> points, double power) {
    std::vector<double> t(points.size(), 0.0);
    for (std::size_t i = 1; i < points.size(); ++i) {
        t[i] = t[i - 1] + std::pow(distance(points[i - 1], points[i]), power);
    }
    if (t.size() > 1 && t.back() > 0.0) {
        const double total = t.back();
        for (double& v : t) {
            v /= total;
        }
        t.back() = 1.0;
    }
    return t;
}

// Parameter in [lo, 1] of the curve point closest to p: coarse scan, then Newton.
double closest_param(const CubicBezier& c, Point p, double lo) {
    constexpr int kSamples = 128;
    double best_t = lo;
    double best_d = INFINITY;
    for (int k = 0; k <= kSamples; ++k) {
        const double t = lo + (1.0 - lo) * static_cast<double>(k) / kSamples;
        const Point d = eval_bezier(c, t) - p;
        const double dd = d.x * d.x + d.y * d.y;
        if (dd < best_d) {
            best_d = dd;
            best_t = t;
        }
    }
    for (int k = 0; k < 8; ++k) {
        const Point d = eval_bezier(c, best_t) - p;
        const Point d1 = bezier_d1(c, best_t);
        const Point d2 = bezier_d2(c, best_t);
        const double den = d1.x * d1.x + d1.y * d1.y + d.x * d2.x + d.y * d2.y;
        if (!(den > 0.0)) {
            break;
        }
        const double t = std::clamp(best_t - (d.x * d1.x + d.y * d1.y) / den, lo, 1.0);
        const Point e = eval_bezier(c, t) - p;
        if (!(e.x * e.x + e.y * e.y < best_d)) {
            break;
        }
        best_d = e.x * e.x + e.y * e.y;
        best_t = t;
    }
    return best_t;
}

}  // namespace

BezierFit fit_cubic_bezier(std::span<const Point> points, const FitOptions& options) {
    BezierFit best = fit_with_params(points, chord_length_params(points));
    if (best.fallback || points.size() < 3 || options.refine_iterations <= 0) {
        return best;
    }
    double scale = 0.0;
    for (const Point& p : points) {
        scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
    }
    const double good_enough = 1e-13 * (1.0 + scale);
    // Several starting parameterizations, each refined and then re-projected
    // onto its own curve to escape poor local minima.
    for (const double power : {1.0, 0.5, 0.0}) {
        BezierFit fit = fit_with_params(points, power_params(points, power));
        if (fit.fallback) {
            continue;
        }
        fit = lm_refine(points, fit, options.refine_iterations);
        for (int round = 0; round < 4 && fit.rms > good_enough; ++round) {
            // Re-project onto the current curve, both freely and keeping the
            // samples in order (the latter survives self-intersections).
            BezierFit next = fit;
            for (const bool ordered : {false, true}) {
                std::vector<double> t = fit.params;
                for (std::size_t i = 1; i + 1 < points.size(); ++i) {
                    t[i] = closest_param(fit.curve, points[i], ordered ? t[i - 1] : 0.0);
                }
                BezierFit cand = fit_with_params(points, t);
                if (cand.fallback) {
                    continue;
                }
                cand = lm_refine(points, cand, options.refine_iterations);
                if (cand.rms < next.rms) {
                    cand.iterations += fit.iterations;
                    next = std::move(cand);
                }
            }
            if (!(next.rms < fit.rms)) {
                break;
            }
            fit = std::move(next);
        }
        if (fit.rms < best.rms) {
            best = std::move(fit);
        }
        if (best.rms <= good_enough) {
            break;
        }
    }
    return best;
}

BezierFit fit_cubic_bezier(std::span<const Pixel> path, const FitOptions& options) {
    const std::vector<Point> pts = to_points(path);
    return fit_cubic_bezier(std::span<const Point>(pts), options);
}

}  // namespace camokit

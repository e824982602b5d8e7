#pragma once

#include <span>
#include <vector>

#include "camokit/raster.hpp"

namespace camokit {

// Pixel coordinates: x to the right, y down.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
double distance(Point a, Point b);

// p0 and p3 are the stroke end points; p1 and p2 shape the curve.
struct CubicBezier {
    Point p0;
    Point p1;
    Point p2;
    Point p3;

    friend bool operator==(const CubicBezier&, const CubicBezier&) = default;
};

// f(t) = (1-t)^3 p0 + 3t(1-t)^2 p1 + 3t^2(1-t) p2 + t^3 p3, t in [0,1].
Point eval_bezier(const CubicBezier& curve, double t);

// First and second derivatives with respect to t (no range check).
Point bezier_d1(const CubicBezier& curve, double t);
Point bezier_d2(const CubicBezier& curve, double t);

double control_polygon_length(const CubicBezier& curve);

// Straight segment p0 -> p3 as a cubic with control points at the thirds.
CubicBezier straight_bezier(Point p0, Point p3);

struct FitOptions {
    // Levenberg-Marquardt rounds over p1, p2 and the sample parameters after
    // the chord-length solve. Meant for clean samples of a true cubic taken at
    // unknown t; on quantized pixel paths it overfits and can loop between
    // samples, so the default keeps pure chord-length parameters.
    int refine_iterations = 0;
};

inline constexpr FitOptions kRecoverFit{200};

struct BezierFit {
    CubicBezier curve;
    std::vector<double> params;  // t_i the least-squares solve used
    double rms = 0.0;            // sqrt(mean ||v_i - f(t_i)||^2)
    bool fallback = false;       // normal matrix singular; straight segment returned
    int iterations = 0;          // accepted refinement rounds
};

// Normalized cumulative chord length; first 0, last 1.
std::vector<double> chord_length_params(std::span<const Point> points);

// Least-squares p1, p2 with p0 = front, p3 = back and fixed parameters.
BezierFit fit_with_params(std::span<const Point> points, std::span<const double> params);

// RMS of ||v_i - f(t_i)||.
double fit_rms(const CubicBezier& curve, std::span<const Point> points, std::span<const double> params);

// End points pinned to the path ends, parameters by chord length (optionally
// refined); p1, p2 from the 2x2 normal equations. Requires >= 2 points.
BezierFit fit_cubic_bezier(std::span<const Point> points, const FitOptions& options = {});
BezierFit fit_cubic_bezier(std::span<const Pixel> path, const FitOptions& options = {});

std::vector<Point> to_points(std::span<const Pixel> path);

}  // namespace camokit

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camokit/bezier.hpp"
#include "camokit/raster.hpp"
#include "camokit/rng.hpp"

namespace camokit {

struct AugmentConfig {
    int n = 64;              // patch count, a perfect square
    int C = 64;              // sketch rows per displacement unit
    double K = 8.0;          // displacement added per unit, pixels
    int min_pixels = 8;      // smaller principal curves are dropped
    int thickness = 1;       // stroke width when re-rasterizing
    std::uint64_t seed = 0;

    void validate() const;
};

struct PatchCurve {
    int patch = 0;
    CubicBezier curve;

    friend bool operator==(const PatchCurve&, const PatchCurve&) = default;
};

struct SketchVector {
    int height = 0;
    int width = 0;
    std::vector<PatchCurve> curves;

    friend bool operator==(const SketchVector&, const SketchVector&) = default;
};

// Tile rectangle [y0, y1) x [x0, x1).
struct Tile {
    int y0 = 0, y1 = 0, x0 = 0, x1 = 0;
};

struct Partition {
    int grid = 0;                             // tiles per axis, grid * grid == n
    std::vector<Tile> tiles;                  // row-major over the tile grid
    std::vector<std::vector<Pixel>> patches;  // skeleton pixels per tile, scan order
};

// Integer square root of n when n is a positive perfect square.
int grid_side(int n);

// Tile along one axis: extent / g per tile, the remainder going to the last tile.
int tile_of(int coord, int extent, int grid);

Partition partition(const BinaryMask& skeleton, int n);

// Largest 8-connected component of the patch (ties: earliest first pixel),
// ordered as the path between two mutually farthest pixels by BFS. The path
// starts at the end that comes first in scan order. Returns nullopt when the
// component has fewer than min_pixels pixels.
std::optional<std::vector<Pixel>> principal_curve(const std::vector<Pixel>& patch_pixels, int min_pixels);

// floor(row / C) * K.
double compute_delta(int row, int C, double K);

// Rows spanned by the foreground bounding box (0 for an empty mask).
int bounding_box_rows(const BinaryMask& mask);

// Displaces p1 and p2 by independent uniform offsets in [-delta, delta] per
// coordinate; p0 and p3 stay fixed.
CubicBezier perturb_curve(const CubicBezier& curve, double delta, Rng& rng);

// Random stream for one patch of an augmentation run.
Rng patch_rng(std::uint64_t seed, int patch);

// Integer line between two pixels, both ends included.
std::vector<Pixel> line_pixels(Pixel a, Pixel b);

BinaryMask rasterize_curves(const SketchVector& sketch, int height, int width, int thickness);

struct AugmentResult {
    BinaryMask raster;
    SketchVector vector;
    BinaryMask skeleton;
    double delta = 0.0;
    int row = 0;
    bool no_curves = false;  // nothing survived the fit threshold; raster is empty
};

// skeletonize -> partition -> principal curve -> fit -> perturb -> rasterize.
AugmentResult augment(const BinaryMask& sketch, const AugmentConfig& config);

// JSON with every real printed to 17 significant digits.
std::string sketch_vector_to_json(const SketchVector& sketch);
SketchVector sketch_vector_from_json(const std::string& text);

}  // namespace camokit

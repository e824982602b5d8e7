#include "camokit/sketch_augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <string>

#include <json.hpp>

#include "camokit/skeleton.hpp"

namespace camokit {

void AugmentConfig::validate() const {
    grid_side(n);
    if (C < 1) {
        throw ParameterError("C must be >= 1");
    }
    if (!(K >= 0.0) || !std::isfinite(K)) {
        throw ParameterError("K must be finite and >= 0");
    }
    if (min_pixels < 2) {
        throw ParameterError("min_pixels must be >= 2");
    }
    if (thickness < 1) {
        throw ParameterError("thickness must be >= 1");
    }
}

int grid_side(int n) {
    if (n >= 1) {
        const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
        if (g * g == n) {
            return g;
        }
    }
    throw ParameterError("patch count must be a perfect square, got " + std::to_string(n));
}

int tile_of(int coord, int extent, int grid) {
    const int base = extent / grid;
    if (base == 0) {
        return grid - 1;
    }
    return std::min(coord / base, grid - 1);
}

Partition partition(const BinaryMask& skeleton, int n) {
    const int g = grid_side(n);
    const int h = skeleton.height();
    const int w = skeleton.width();
    Partition out;
    out.grid = g;
    out.patches.resize(static_cast<std::size_t>(n));
    out.tiles.reserve(static_cast<std::size_t>(n));
    const int bh = h / g;
    const int bw = w / g;
    for (int ty = 0; ty < g; ++ty) {
        for (int tx = 0; tx < g; ++tx) {
            out.tiles.push_back({ty * bh, ty == g - 1 ? h : (ty + 1) * bh, tx * bw, tx == g - 1 ? w : (tx + 1) * bw});
        }
    }
    for (int y = 0; y < h; ++y) {
        const int ty = tile_of(y, h, g);
        for (int x = 0; x < w; ++x) {
            if (skeleton(y, x)) {
                out.patches[static_cast<std::size_t>(ty * g + tile_of(x, w, g))].push_back({y, x});
            }
        }
    }
    return out;
}

std::optional<std::vector<Pixel>> principal_curve(const std::vector<Pixel>& patch_pixels, int min_pixels) {
    if (patch_pixels.empty()) {
        return std::nullopt;
    }
    std::vector<Pixel> pixels = patch_pixels;
    std::sort(pixels.begin(), pixels.end());
    pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());

    // Local index grid over the bounding box: -1 = not in the patch.
    int y0 = pixels.front().y, y1 = y0, x0 = pixels.front().x, x1 = x0;
    for (const Pixel& p : pixels) {
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
    }
    Grid<int> index(y1 - y0 + 1, x1 - x0 + 1, -1);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        index(pixels[i].y - y0, pixels[i].x - x0) = static_cast<int>(i);
    }
    auto for_each_neighbour = [&](int i, auto&& fn) {
        const Pixel p = pixels[static_cast<std::size_t>(i)];
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int yy = p.y - y0 + dy;
                const int xx = p.x - x0 + dx;
                if ((dy || dx) && index.contains(yy, xx) && index(yy, xx) >= 0) {
                    fn(index(yy, xx));
                }
            }
        }
    };

    // BFS from `start`; returns hop distances (-1 unreachable) and parents.
    const int count = static_cast<int>(pixels.size());
    std::vector<int> dist(pixels.size());
    std::vector<int> parent(pixels.size());
    std::vector<int> order;
    auto bfs = [&](int start) {
        std::fill(dist.begin(), dist.end(), -1);
        std::fill(parent.begin(), parent.end(), -1);
        order.clear();
        std::deque<int> queue{start};
        dist[static_cast<std::size_t>(start)] = 0;
        while (!queue.empty()) {
            const int i = queue.front();
            queue.pop_front();
            order.push_back(i);
            for_each_neighbour(i, [&](int j) {
                if (dist[static_cast<std::size_t>(j)] < 0) {
                    dist[static_cast<std::size_t>(j)] = dist[static_cast<std::size_t>(i)] + 1;
                    parent[static_cast<std::size_t>(j)] = i;
                    queue.push_back(j);
                }
            });
        }
    };

    // Largest component; pixels are in scan order so the first seed wins ties.
    std::vector<int> component(pixels.size(), -1);
    int best_seed = -1;
    std::size_t best_size = 0;
    for (int i = 0; i < count; ++i) {
        if (component[static_cast<std::size_t>(i)] >= 0) {
            continue;
        }
        bfs(i);
        for (int j : order) {
            component[static_cast<std::size_t>(j)] = i;
        }
        if (order.size() > best_size) {
            best_size = order.size();
            best_seed = i;
        }
    }
    if (best_size < static_cast<std::size_t>(min_pixels)) {
        return std::nullopt;
    }

    auto farthest = [&]() {
        int far = order.front();
        for (int j : order) {
            if (dist[static_cast<std::size_t>(j)] > dist[static_cast<std::size_t>(far)]) {
                far = j;
            }
        }
        return far;
    };
    bfs(best_seed);
    const int u = farthest();
    bfs(u);
    const int v = farthest();

    std::vector<Pixel> path;
    for (int j = v; j >= 0; j = parent[static_cast<std::size_t>(j)]) {
        path.push_back(pixels[static_cast<std::size_t>(j)]);
    }
    if (path.back() < path.front()) {
        std::reverse(path.begin(), path.end());
    }
    return path;
}

double compute_delta(int row, int C, double K) {
    if (row < 0 || C < 1 || !(K >= 0.0)) {
        throw ParameterError("compute_delta requires row >= 0, C >= 1, K >= 0");
    }
    return static_cast<double>(row / C) * K;
}

int bounding_box_rows(const BinaryMask& mask) {
    int top = -1;
    int bottom = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask(y, x)) {
                if (top < 0) {
                    top = y;
                }
                bottom = y;
                break;
            }
        }
    }
    return top < 0 ? 0 : bottom - top + 1;
}

CubicBezier perturb_curve(const CubicBezier& curve, double delta, Rng& rng) {
    if (!(delta >= 0.0)) {
        throw ParameterError("displacement must be >= 0");
    }
    CubicBezier out = curve;
    if (delta == 0.0) {
        return out;
    }
    out.p1.x += rng.uniform(-delta, delta);
    out.p1.y += rng.uniform(-delta, delta);
    out.p2.x += rng.uniform(-delta, delta);
    out.p2.y += rng.uniform(-delta, delta);
    return out;
}

Rng patch_rng(std::uint64_t seed, int patch) { return Rng(derive_seed(seed, static_cast<std::uint64_t>(patch))); }

std::vector<Pixel> line_pixels(Pixel a, Pixel b) {
    std::vector<Pixel> out;
    const int dx = std::abs(b.x - a.x);
    const int dy = -std::abs(b.y - a.y);
    const int sx = a.x < b.x ? 1 : -1;
    const int sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    Pixel p = a;
    while (true) {
        out.push_back(p);
        if (p == b) {
            break;
        }
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            p.x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            p.y += sy;
        }
    }
    return out;
}

BinaryMask rasterize_curves(const SketchVector& sketch, int height, int width, int thickness) {
    if (thickness < 1) {
        throw ParameterError("thickness must be >= 1");
    }
    BinaryMask out(height, width);
    const int lo = -(thickness - 1) / 2;
    const int hi = thickness / 2;
    auto stamp = [&](Pixel p) {
        for (int dy = lo; dy <= hi; ++dy) {
            for (int dx = lo; dx <= hi; ++dx) {
                if (out.contains(p.y + dy, p.x + dx)) {
                    out(p.y + dy, p.x + dx) = 1;
                }
            }
        }
    };
    // Keep rounding well inside int range for wildly perturbed curves.
    constexpr double kLimit = 1 << 24;
    auto to_pixel = [&](Point q) {
        return Pixel{static_cast<int>(std::floor(std::clamp(q.y, -kLimit, kLimit) + 0.5)),
                     static_cast<int>(std::floor(std::clamp(q.x, -kLimit, kLimit) + 0.5))};
    };
    for (const PatchCurve& pc : sketch.curves) {
        const double length = control_polygon_length(pc.curve);
        const int samples = std::max(2, static_cast<int>(std::ceil(4.0 * std::min(length, kLimit))));
        Pixel prev = to_pixel(pc.curve.p0);
        stamp(prev);
        for (int i = 1; i < samples; ++i) {
            const Pixel cur = to_pixel(eval_bezier(pc.curve, static_cast<double>(i) / (samples - 1)));
            if (cur == prev) {
                continue;
            }
            for (const Pixel& p : line_pixels(prev, cur)) {
                stamp(p);
            }
            prev = cur;
        }
    }
    return out;
}

AugmentResult augment(const BinaryMask& sketch, const AugmentConfig& config) {
    config.validate();
    AugmentResult result;
    result.skeleton = skeletonize(sketch);
    result.row = bounding_box_rows(sketch);
    result.delta = compute_delta(result.row, config.C, config.K);
    result.vector.height = sketch.height();
    result.vector.width = sketch.width();

    const Partition parts = partition(result.skeleton, config.n);
    for (int i = 0; i < config.n; ++i) {
        const auto path = principal_curve(parts.patches[static_cast<std::size_t>(i)], config.min_pixels);
        if (!path) {
            continue;
        }
        const BezierFit fit = fit_cubic_bezier(std::span<const Pixel>(*path));
        Rng rng = patch_rng(config.seed, i);
        result.vector.curves.push_back({i, perturb_curve(fit.curve, result.delta, rng)});
    }
    result.no_curves = result.vector.curves.empty();
    result.raster = rasterize_curves(result.vector, sketch.height(), sketch.width(), config.thickness);
    return result;
}

namespace {

std::string real17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string point_json(Point p) { return "[" + real17(p.x) + "," + real17(p.y) + "]"; }

Point point_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw FormatError("control point must be a [x, y] number pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string sketch_vector_to_json(const SketchVector& sketch) {
    std::string out = "{\"height\":" + std::to_string(sketch.height) + ",\"width\":" + std::to_string(sketch.width) +
                      ",\"curves\":[";
    for (std::size_t i = 0; i < sketch.curves.size(); ++i) {
        const PatchCurve& pc = sketch.curves[i];
        if (i) {
            out += ",";
        }
        out += "{\"patch\":" + std::to_string(pc.patch) + ",\"p0\":" + point_json(pc.curve.p0) +
               ",\"p1\":" + point_json(pc.curve.p1) + ",\"p2\":" + point_json(pc.curve.p2) +
               ",\"p3\":" + point_json(pc.curve.p3) + "}";
    }
    out += "]}\n";
    return out;
}

SketchVector sketch_vector_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid sketch vector JSON: ") + e.what());
    }
    SketchVector sv;
    try {
        sv.height = j.at("height").get<int>();
        sv.width = j.at("width").get<int>();
        for (const auto& c : j.at("curves")) {
            PatchCurve pc;
            pc.patch = c.at("patch").get<int>();
            pc.curve = {point_from(c.at("p0")), point_from(c.at("p1")), point_from(c.at("p2")), point_from(c.at("p3"))};
            sv.curves.push_back(pc);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("sketch vector JSON missing fields: ") + e.what());
    }
    if (sv.height < 1 || sv.width < 1) {
        throw FormatError("sketch vector dimensions must be positive");
    }
    return sv;
}

}  // namespace camokit

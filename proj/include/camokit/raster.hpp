#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "camokit/error.hpp"

namespace camokit {

struct Pixel {
    int y = 0;
    int x = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

// Row-major 2-D grid. All rasters in the library are built on this.
template <typename T>
class Grid {
public:
    Grid() = default;

    Grid(int height, int width, T fill = T{}) : height_(height), width_(width) {
        if (height < 1 || width < 1) {
            throw ParameterError("raster dimensions must be positive");
        }
        data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
    }

    Grid(int height, int width, std::vector<T> data) : height_(height), width_(width), data_(std::move(data)) {
        if (height < 1 || width < 1) {
            throw ParameterError("raster dimensions must be positive");
        }
        if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
            throw ValidationError("raster data length does not match height x width");
        }
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool contains(int y, int x) const noexcept { return y >= 0 && y < height_ && x >= 0 && x < width_; }
    std::size_t index(int y, int x) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    T& operator()(int y, int x) noexcept { return data_[index(y, x)]; }
    const T& operator()(int y, int x) const noexcept { return data_[index(y, x)]; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    bool same_shape(const Grid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return height_ == other.height() && width_ == other.width();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

// Foreground/background raster; stored as 0/1 bytes.
using BinaryMask = Grid<std::uint8_t>;

// Real-valued raster. As a ProbMap every element lies in [0,1]; the same type
// carries unbounded real fields such as gradients.
using ProbMap = Grid<double>;
using RealMap = Grid<double>;

struct LabelMap {
    Grid<int> labels;  // 0 = background, components numbered 1..count
    int count = 0;
};

enum class Connectivity { Four = 4, Eight = 8 };

// Throws ValidationError if any element is outside [0,1] or not finite.
void validate_probabilities(const ProbMap& map);

template <typename T, typename U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw ValidationError("raster shape mismatch");
    }
}

ProbMap to_prob(const BinaryMask& mask);

// Foreground where value >= threshold.
BinaryMask threshold(const ProbMap& map, double threshold);

std::size_t count_foreground(const BinaryMask& mask);

std::vector<Pixel> foreground_pixels(const BinaryMask& mask);

// Result of a windowed max: value plus the flat index of the winning pixel,
// or -1 when the out-of-image fill value won.
struct PoolResult {
    RealMap values;
    std::vector<std::ptrdiff_t> argmax;
};

// Square max-pool with an odd window centered on each pixel. Positions outside
// the image contribute `border`. Ties resolve to the first pixel in scan order;
// the border value wins only when strictly greater than every in-image value.
PoolResult maxpool_argmax(const RealMap& map, int theta, double border = 0.0);

RealMap maxpool(const RealMap& map, int theta, double border = 0.0);

// Components labeled 1..k in order of their first pixel in raster scan order.
LabelMap connected_components(const BinaryMask& mask, Connectivity connectivity);

// Foreground 8-connected, background 4-connected; pixels outside the image are background.
int euler_number(const BinaryMask& mask);

// Number of holes: background 4-components that do not reach the frame.
int hole_count(const BinaryMask& mask);

}  // namespace camokit

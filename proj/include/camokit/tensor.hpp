#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "camokit/error.hpp"
#include "camokit/rng.hpp"

namespace camokit {

// Dense row-major array of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) { return Tensor({rows, cols}, fill); }
    static Tensor vector(std::size_t n, double fill = 0.0) { return Tensor({n}, fill); }

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    // Rank-2 accessors.
    std::size_t rows() const { return shape_.at(0); }
    std::size_t cols() const { return shape_.at(1); }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_[1] + c]; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    bool all_finite() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Uniform [lo, hi) entries from the library's portable generator.
Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -0.1, double hi = 0.1);

// y = x W + b, x: tokens x in, W: in x out, b: out.
struct Linear {
    Tensor weight;
    Tensor bias;

    std::size_t in() const { return weight.rows(); }
    std::size_t out() const { return weight.cols(); }

    static Linear zeros(std::size_t in, std::size_t out);
    static Linear random(std::size_t in, std::size_t out, Rng& rng, double scale = 0.1);
};

Tensor apply(const Linear& layer, const Tensor& x);

// Backward of apply(): accumulates dW, db into `grad` and returns dx.
Tensor apply_backward(const Linear& layer, const Tensor& x, const Tensor& dy, Linear& grad);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_transpose_b(const Tensor& a, const Tensor& b);  // a b^T
Tensor transpose(const Tensor& a);

void require_cols(const Tensor& t, std::size_t cols, const char* what);

}  // namespace camokit

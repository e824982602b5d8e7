#include "camokit/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace camokit {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
        throw ValidationError("tensor data length does not match its shape");
    }
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

Linear Linear::zeros(std::size_t in, std::size_t out) { return {Tensor::matrix(in, out), Tensor::vector(out)}; }

Linear Linear::random(std::size_t in, std::size_t out, Rng& rng, double scale) {
    Linear l;
    l.weight = random_tensor({in, out}, rng, -scale, scale);
    l.bias = random_tensor({out}, rng, -scale, scale);
    return l;
}

void require_cols(const Tensor& t, std::size_t cols, const char* what) {
    if (t.rank() != 2 || t.cols() != cols) {
        throw ValidationError(std::string(what) + ": expected a matrix with " + std::to_string(cols) + " columns");
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw ValidationError("matmul dimension mismatch");
    }
    Tensor out = Tensor::matrix(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

Tensor matmul_transpose_b(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
        throw ValidationError("matmul dimension mismatch");
    }
    Tensor out = Tensor::matrix(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                s += a(i, k) * b(j, k);
            }
            out(i, j) = s;
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    Tensor out = Tensor::matrix(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

Tensor apply(const Linear& layer, const Tensor& x) {
    require_cols(x, layer.in(), "linear input");
    Tensor y = matmul(x, layer.weight);
    for (std::size_t r = 0; r < y.rows(); ++r) {
        for (std::size_t c = 0; c < y.cols(); ++c) {
            y(r, c) += layer.bias[c];
        }
    }
    return y;
}

Tensor apply_backward(const Linear& layer, const Tensor& x, const Tensor& dy, Linear& grad) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t i = 0; i < layer.in(); ++i) {
            const double xi = x(r, i);
            for (std::size_t o = 0; o < layer.out(); ++o) {
                grad.weight(i, o) += xi * dy(r, o);
            }
        }
        for (std::size_t o = 0; o < layer.out(); ++o) {
            grad.bias[o] += dy(r, o);
        }
    }
    return matmul_transpose_b(dy, layer.weight);
}

}  // namespace camokit

#include "camokit/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace camokit {

void FusionParams::validate() const {
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
        throw ParameterError("d_model must be a positive multiple of n_heads");
    }
    for (const Linear* l : {&q, &k, &v, &o}) {
        if (l->weight.rank() != 2 || l->in() != d_model || l->out() != d_model || l->bias.size() != d_model) {
            throw ValidationError("attention projections must be d_model x d_model");
        }
    }
    if (film.weight.rank() != 2 || film.in() != d_model || film.out() != 3 * d_model ||
        film.bias.size() != 3 * d_model) {
        throw ValidationError("film projection must be d_model x 3 d_model");
    }
}

FusionParams FusionParams::zeros(std::size_t d_model, std::size_t n_heads) {
    FusionParams p;
    p.d_model = d_model;
    p.n_heads = n_heads;
    p.q = p.k = p.v = p.o = Linear::zeros(d_model, d_model);
    p.film = Linear::zeros(d_model, 3 * d_model);
    p.validate();
    return p;
}

FusionParams FusionParams::random(std::size_t d_model, std::size_t n_heads, Rng& rng, double scale) {
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
        throw ParameterError("d_model must be a positive multiple of n_heads");
    }
    FusionParams p;
    p.d_model = d_model;
    p.n_heads = n_heads;
    p.q = Linear::random(d_model, d_model, rng, scale);
    p.k = Linear::random(d_model, d_model, rng, scale);
    p.v = Linear::random(d_model, d_model, rng, scale);
    p.o = Linear::random(d_model, d_model, rng, scale);
    p.film = Linear::random(d_model, 3 * d_model, rng, scale);
    return p;
}

AttentionTrace cross_attention_trace(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p) {
    p.validate();
    require_cols(image_tokens, p.d_model, "image tokens");
    require_cols(sketch_tokens, p.d_model, "sketch tokens");
    if (sketch_tokens.rows() == 0) {
        throw ValidationError("sketch tokens must not be empty");
    }
    AttentionTrace t;
    t.q = apply(p.q, image_tokens);
    t.k = apply(p.k, sketch_tokens);
    t.v = apply(p.v, sketch_tokens);
    const std::size_t nq = image_tokens.rows();
    const std::size_t nk = sketch_tokens.rows();
    const std::size_t dh = p.d_model / p.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    t.heads = Tensor::matrix(nq, p.d_model);
    for (std::size_t h = 0; h < p.n_heads; ++h) {
        const std::size_t off = h * dh;
        Tensor w = Tensor::matrix(nq, nk);
        for (std::size_t i = 0; i < nq; ++i) {
            double row_max = -INFINITY;
            for (std::size_t j = 0; j < nk; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c) {
                    s += t.q(i, off + c) * t.k(j, off + c);
                }
                w(i, j) = s * scale;
                row_max = std::max(row_max, w(i, j));
            }
            double z = 0.0;
            for (std::size_t j = 0; j < nk; ++j) {
                w(i, j) = std::exp(w(i, j) - row_max);
                z += w(i, j);
            }
            for (std::size_t j = 0; j < nk; ++j) {
                w(i, j) /= z;
            }
            for (std::size_t c = 0; c < dh; ++c) {
                double s = 0.0;
                for (std::size_t j = 0; j < nk; ++j) {
                    s += w(i, j) * t.v(j, off + c);
                }
                t.heads(i, off + c) = s;
            }
        }
        t.weights.push_back(std::move(w));
    }
    t.out = apply(p.o, t.heads);
    return t;
}

Tensor cross_attention(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p) {
    return cross_attention_trace(image_tokens, sketch_tokens, p).out;
}

Tensor mean_pool(const Tensor& tokens) {
    if (tokens.rank() != 2 || tokens.rows() == 0) {
        throw ValidationError("mean pooling needs a non-empty token matrix");
    }
    Tensor m = Tensor::matrix(1, tokens.cols());
    for (std::size_t r = 0; r < tokens.rows(); ++r) {
        for (std::size_t c = 0; c < tokens.cols(); ++c) {
            m(0, c) += tokens(r, c);
        }
    }
    for (std::size_t c = 0; c < tokens.cols(); ++c) {
        m(0, c) /= static_cast<double>(tokens.rows());
    }
    return m;
}

FilmGate film_gate(const Tensor& sketch_tokens, const FusionParams& p) {
    p.validate();
    require_cols(sketch_tokens, p.d_model, "sketch tokens");
    const Tensor film = apply(p.film, mean_pool(sketch_tokens));
    const std::size_t d = p.d_model;
    FilmGate g{Tensor::vector(d), Tensor::vector(d), Tensor::vector(d)};
    for (std::size_t c = 0; c < d; ++c) {
        g.scale[c] = film(0, c);
        g.shift[c] = film(0, d + c);
        g.gate[c] = film(0, 2 * d + c);
    }
    return g;
}

Tensor fusion_forward(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p) {
    const Tensor o = cross_attention(image_tokens, sketch_tokens, p);
    const FilmGate g = film_gate(sketch_tokens, p);
    Tensor out = image_tokens;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < out.cols(); ++c) {
            out(r, c) += g.gate[c] * (o(r, c) * (1.0 + g.scale[c]) + g.shift[c]);
        }
    }
    return out;
}

namespace {

// Backprop from d(attention output) into grads; returns nothing, accumulates.
void attention_backprop(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p,
                        const AttentionTrace& t, const Tensor& d_out, FusionGrads& g) {
    const std::size_t nq = image_tokens.rows();
    const std::size_t nk = sketch_tokens.rows();
    const std::size_t dh = p.d_model / p.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    const Tensor d_heads = apply_backward(p.o, t.heads, d_out, g.params.o);
    Tensor dq = Tensor::matrix(nq, p.d_model);
    Tensor dk = Tensor::matrix(nk, p.d_model);
    Tensor dv = Tensor::matrix(nk, p.d_model);
    for (std::size_t h = 0; h < p.n_heads; ++h) {
        const std::size_t off = h * dh;
        const Tensor& w = t.weights[h];
        for (std::size_t i = 0; i < nq; ++i) {
            // dW_ij = dH_i . V_j ; softmax backward gives dS_ij = W_ij (dW_ij - sum_j W_ij dW_ij).
            std::vector<double> dw(nk);
            double dot = 0.0;
            for (std::size_t j = 0; j < nk; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c) {
                    s += d_heads(i, off + c) * t.v(j, off + c);
                    dv(j, off + c) += w(i, j) * d_heads(i, off + c);
                }
                dw[j] = s;
                dot += w(i, j) * s;
            }
            for (std::size_t j = 0; j < nk; ++j) {
                const double ds = w(i, j) * (dw[j] - dot) * scale;
                for (std::size_t c = 0; c < dh; ++c) {
                    dq(i, off + c) += ds * t.k(j, off + c);
                    dk(j, off + c) += ds * t.q(i, off + c);
                }
            }
        }
    }
    const Tensor dx_q = apply_backward(p.q, image_tokens, dq, g.params.q);
    const Tensor dx_k = apply_backward(p.k, sketch_tokens, dk, g.params.k);
    const Tensor dx_v = apply_backward(p.v, sketch_tokens, dv, g.params.v);
    for (std::size_t i = 0; i < g.image_tokens.size(); ++i) {
        g.image_tokens[i] += dx_q[i];
    }
    for (std::size_t i = 0; i < g.sketch_tokens.size(); ++i) {
        g.sketch_tokens[i] += dx_k[i] + dx_v[i];
    }
}

FusionGrads zero_grads(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p) {
    return {Tensor(image_tokens.shape()), Tensor(sketch_tokens.shape()), FusionParams::zeros(p.d_model, p.n_heads)};
}

void require_upstream(const Tensor& upstream, const Tensor& image_tokens) {
    if (upstream.shape() != image_tokens.shape()) {
        throw ValidationError("upstream gradient shape must match the output");
    }
}

}  // namespace

FusionGrads attention_backward(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p,
                               const Tensor& upstream) {
    const AttentionTrace t = cross_attention_trace(image_tokens, sketch_tokens, p);
    require_upstream(upstream, image_tokens);
    FusionGrads g = zero_grads(image_tokens, sketch_tokens, p);
    attention_backprop(image_tokens, sketch_tokens, p, t, upstream, g);
    return g;
}

FusionGrads fusion_backward(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p,
                            const Tensor& upstream) {
    const AttentionTrace t = cross_attention_trace(image_tokens, sketch_tokens, p);
    const FilmGate gate = film_gate(sketch_tokens, p);
    require_upstream(upstream, image_tokens);
    FusionGrads g = zero_grads(image_tokens, sketch_tokens, p);
    const std::size_t d = p.d_model;

    // Residual path.
    for (std::size_t i = 0; i < upstream.size(); ++i) {
        g.image_tokens[i] += upstream[i];
    }
    Tensor d_out = Tensor::matrix(upstream.rows(), d);
    Tensor d_film = Tensor::matrix(1, 3 * d);
    for (std::size_t r = 0; r < upstream.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double u = upstream(r, c);
            const double o = t.out(r, c);
            d_out(r, c) = u * gate.gate[c] * (1.0 + gate.scale[c]);
            d_film(0, c) += u * gate.gate[c] * o;
            d_film(0, d + c) += u * gate.gate[c];
            d_film(0, 2 * d + c) += u * (o * (1.0 + gate.scale[c]) + gate.shift[c]);
        }
    }
    const Tensor pooled = mean_pool(sketch_tokens);
    const Tensor d_pooled = apply_backward(p.film, pooled, d_film, g.params.film);
    const double inv_n = 1.0 / static_cast<double>(sketch_tokens.rows());
    for (std::size_t r = 0; r < sketch_tokens.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            g.sketch_tokens(r, c) += d_pooled(0, c) * inv_n;
        }
    }
    attention_backprop(image_tokens, sketch_tokens, p, t, d_out, g);
    return g;
}

}  // namespace camokit

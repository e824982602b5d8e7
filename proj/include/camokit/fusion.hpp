#pragma once

#include <cstdint>

#include "camokit/tensor.hpp"

namespace camokit {

// Sketch-to-image fusion block:
//   O            = MultiHead(Q = F_I W_q, K = F_S W_k, V = F_S W_v) W_o
//   (g, b, a)    = Linear(mean over tokens of F_S)
//   F_U          = F_I + a * (O * (1 + g) + b)        (per channel)
struct FusionParams {
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    Linear q, k, v, o;  // d x d
    Linear film;        // d x 3d, output split as [scale | shift | gate]

    void validate() const;

    static FusionParams zeros(std::size_t d_model, std::size_t n_heads);
    // Weights and biases uniform in [-scale, scale].
    static FusionParams random(std::size_t d_model, std::size_t n_heads, Rng& rng, double scale = 0.1);
};

struct FilmGate {
    Tensor scale;  // gamma, d
    Tensor shift;  // beta, d
    Tensor gate;   // alpha, d
};

struct AttentionTrace {
    Tensor q, k, v;
    std::vector<Tensor> weights;  // per head, softmax rows: tokens x tokens'
    Tensor heads;                 // concatenated head outputs, tokens x d
    Tensor out;                   // after W_o
};

AttentionTrace cross_attention_trace(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p);

Tensor cross_attention(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p);

Tensor mean_pool(const Tensor& tokens);

FilmGate film_gate(const Tensor& sketch_tokens, const FusionParams& p);

Tensor fusion_forward(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p);

struct FusionGrads {
    Tensor image_tokens;
    Tensor sketch_tokens;
    FusionParams params;
};

// Gradients of sum(upstream * fusion_forward(...)).
FusionGrads fusion_backward(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p,
                            const Tensor& upstream);

// Gradients of sum(upstream * cross_attention(...)); only q, k, v, o of params are filled.
FusionGrads attention_backward(const Tensor& image_tokens, const Tensor& sketch_tokens, const FusionParams& p,
                               const Tensor& upstream);

}  // namespace camokit

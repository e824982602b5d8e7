#pragma once

#include <complex>
#include <vector>

#include "camokit/fusion.hpp"
#include "camokit/raster.hpp"
#include "camokit/tensor.hpp"

namespace camokit {

// Domain-information adapter:
//   F_hfc = patch tokens of the high-pass filtered image
//   F_hpe = patch tokens of the image
//   F'_I  = up(GELU(mlp(F_hfc + F_hpe)))
struct AdapterParams {
    double tau = 0.25;  // side of the removed low-frequency square, as a fraction of min(H, W)
    int patch = 4;
    Linear hfc;  // patch*patch -> d, projects high-pass patches
    Linear pe;   // patch*patch -> d, projects raw patches
    Linear mlp;  // d -> hidden
    Linear up;   // hidden -> d_out

    void validate() const;

    static AdapterParams random(int patch, std::size_t d, std::size_t hidden, std::size_t d_out, double tau, Rng& rng,
                                double scale = 0.1);
};

// In-place 1-D DFT. Radix-2 for power-of-two lengths, direct sum otherwise.
void dft(std::vector<std::complex<double>>& a, bool inverse);

// Row-then-column 2-D transform of a row-major height x width array.
void dft2(std::vector<std::complex<double>>& a, int height, int width, bool inverse);

// True when frequency (ky, kx) lies in the centered low-frequency square of
// side `side` (centered square of the fftshift-ed spectrum).
bool in_low_square(int ky, int kx, int height, int width, int side);

int low_square_side(double tau, int height, int width);

// DFT, zero the centered low-frequency square of side ceil(tau * min(H, W)),
// inverse DFT, real part.
RealMap highpass_fft(const RealMap& image, double tau);

// Non-overlapping patch x patch tiles, flattened row-major, tokens in row-major
// tile order. Without a layer the flattened patches are returned.
Tensor patchify(const RealMap& image, int patch);
Tensor patch_embed(const RealMap& image, int patch, const Linear& layer);

// Exact GELU, x * Phi(x).
double gelu(double x);
double gelu_derivative(double x);

Tensor adapter_forward(const Tensor& hfc_tokens, const Tensor& hpe_tokens, const AdapterParams& p);

struct AdapterGrads {
    Tensor hfc_tokens;
    Tensor hpe_tokens;
    Linear mlp;
    Linear up;
};

// Gradients of sum(upstream * adapter_forward(...)).
AdapterGrads adapter_backward(const Tensor& hfc_tokens, const Tensor& hpe_tokens, const AdapterParams& p,
                              const Tensor& upstream);

// Full adapter on an image: both token streams plus adapter_forward.
Tensor adapter_features(const RealMap& image, const AdapterParams& p);

// Toy end-to-end model: adapter-injected image tokens fused with sketch
// tokens, then a per-token linear read-out as the mask decoder stand-in.
struct ToyModel {
    AdapterParams adapter;
    Linear image_embed;
    Linear sketch_embed;
    FusionParams fusion;
    Linear readout;  // d -> 1

    static ToyModel random(int patch, std::size_t d_model, std::size_t n_heads, Rng& rng, double scale = 0.1);
};

struct ToyPrediction {
    Tensor fused;      // F_U
    ProbMap soft;      // sigmoid of the read-out, constant over each patch
    BinaryMask mask;   // soft >= 0.5
};

ToyPrediction toy_predict(const ToyModel& model, const RealMap& image, const RealMap& sketch);

}  // namespace camokit

#include "camokit/adapter.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace camokit {

void AdapterParams::validate() const {
    if (!(tau >= 0.0 && tau < 1.0)) {
        throw ParameterError("tau must lie in [0, 1)");
    }
    if (patch < 1) {
        throw ParameterError("patch side must be >= 1");
    }
    const auto flat = static_cast<std::size_t>(patch) * static_cast<std::size_t>(patch);
    if (hfc.weight.rank() != 2 || pe.weight.rank() != 2 || hfc.in() != flat || pe.in() != flat ||
        hfc.out() != pe.out()) {
        throw ValidationError("patch projections must map patch*patch values to a common width");
    }
    if (mlp.weight.rank() != 2 || up.weight.rank() != 2 || mlp.in() != pe.out() || up.in() != mlp.out()) {
        throw ValidationError("adapter layer widths do not chain");
    }
}

AdapterParams AdapterParams::random(int patch, std::size_t d, std::size_t hidden, std::size_t d_out, double tau,
                                    Rng& rng, double scale) {
    AdapterParams p;
    p.tau = tau;
    p.patch = patch;
    const auto flat = static_cast<std::size_t>(patch) * static_cast<std::size_t>(patch);
    p.hfc = Linear::random(flat, d, rng, scale);
    p.pe = Linear::random(flat, d, rng, scale);
    p.mlp = Linear::random(d, hidden, rng, scale);
    p.up = Linear::random(hidden, d_out, rng, scale);
    return p;
}

void dft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1) {
        return;
    }
    const double sign = inverse ? 1.0 : -1.0;
    if ((n & (n - 1)) != 0) {
        std::vector<std::complex<double>> twiddle(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(j) / n;
            twiddle[j] = {std::cos(angle), std::sin(angle)};
        }
        std::vector<std::complex<double>> out(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::complex<double> s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                s += a[j] * twiddle[(j * k) % n];
            }
            out[k] = s;
        }
        a = std::move(out);
    } else {
        for (std::size_t i = 1, j = 0; i < n; ++i) {
            std::size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) {
                j ^= bit;
            }
            j ^= bit;
            if (i < j) {
                std::swap(a[i], a[j]);
            }
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            for (std::size_t i = 0; i < n; i += len) {
                for (std::size_t k = 0; k < len / 2; ++k) {
                    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / len;
                    const std::complex<double> w(std::cos(angle), std::sin(angle));
                    const std::complex<double> u = a[i + k];
                    const std::complex<double> v = a[i + k + len / 2] * w;
                    a[i + k] = u + v;
                    a[i + k + len / 2] = u - v;
                }
            }
        }
    }
    if (inverse) {
        for (auto& v : a) {
            v /= static_cast<double>(n);
        }
    }
}

void dft2(std::vector<std::complex<double>>& a, int height, int width, bool inverse) {
    std::vector<std::complex<double>> line(static_cast<std::size_t>(width));
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            line[x] = a[static_cast<std::size_t>(y) * width + x];
        }
        dft(line, inverse);
        for (int x = 0; x < width; ++x) {
            a[static_cast<std::size_t>(y) * width + x] = line[x];
        }
    }
    line.resize(static_cast<std::size_t>(height));
    for (int x = 0; x < width; ++x) {
        for (int y = 0; y < height; ++y) {
            line[y] = a[static_cast<std::size_t>(y) * width + x];
        }
        dft(line, inverse);
        for (int y = 0; y < height; ++y) {
            a[static_cast<std::size_t>(y) * width + x] = line[y];
        }
    }
}

int low_square_side(double tau, int height, int width) {
    if (!(tau >= 0.0 && tau < 1.0)) {
        throw ParameterError("tau must lie in [0, 1)");
    }
    return static_cast<int>(std::ceil(tau * std::min(height, width)));
}

bool in_low_square(int ky, int kx, int height, int width, int side) {
    if (side <= 0) {
        return false;
    }
    auto inside = [side](int k, int n) {
        const int shifted = (k + n / 2) % n;
        const int start = n / 2 - side / 2;
        return shifted >= start && shifted < start + side;
    };
    return inside(ky, height) && inside(kx, width);
}

RealMap highpass_fft(const RealMap& image, double tau) {
    const int h = image.height();
    const int w = image.width();
    const int side = low_square_side(tau, h, w);
    std::vector<std::complex<double>> spec(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        spec[i] = image[i];
    }
    dft2(spec, h, w, false);
    for (int ky = 0; ky < h; ++ky) {
        for (int kx = 0; kx < w; ++kx) {
            if (in_low_square(ky, kx, h, w, side)) {
                spec[static_cast<std::size_t>(ky) * w + kx] = 0.0;
            }
        }
    }
    dft2(spec, h, w, true);
    RealMap out(h, w);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = spec[i].real();
    }
    return out;
}

Tensor patchify(const RealMap& image, int patch) {
    if (patch < 1 || image.height() % patch != 0 || image.width() % patch != 0) {
        throw ParameterError("patch side " + std::to_string(patch) + " must divide the image sides");
    }
    const int gh = image.height() / patch;
    const int gw = image.width() / patch;
    Tensor out = Tensor::matrix(static_cast<std::size_t>(gh) * gw, static_cast<std::size_t>(patch) * patch);
    for (int ty = 0; ty < gh; ++ty) {
        for (int tx = 0; tx < gw; ++tx) {
            const std::size_t token = static_cast<std::size_t>(ty) * gw + tx;
            for (int py = 0; py < patch; ++py) {
                for (int px = 0; px < patch; ++px) {
                    out(token, static_cast<std::size_t>(py) * patch + px) = image(ty * patch + py, tx * patch + px);
                }
            }
        }
    }
    return out;
}

Tensor patch_embed(const RealMap& image, int patch, const Linear& layer) { return apply(layer, patchify(image, patch)); }

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

namespace {

Tensor summed_tokens(const Tensor& hfc_tokens, const Tensor& hpe_tokens, const AdapterParams& p) {
    p.validate();
    require_cols(hfc_tokens, p.mlp.in(), "high-frequency tokens");
    require_cols(hpe_tokens, p.mlp.in(), "patch-embedding tokens");
    if (hfc_tokens.rows() != hpe_tokens.rows()) {
        throw ValidationError("token counts of the two adapter inputs differ");
    }
    Tensor s = hfc_tokens;
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] += hpe_tokens[i];
    }
    return s;
}

}  // namespace

Tensor adapter_forward(const Tensor& hfc_tokens, const Tensor& hpe_tokens, const AdapterParams& p) {
    Tensor hidden = apply(p.mlp, summed_tokens(hfc_tokens, hpe_tokens, p));
    for (double& v : hidden.values()) {
        v = gelu(v);
    }
    return apply(p.up, hidden);
}

AdapterGrads adapter_backward(const Tensor& hfc_tokens, const Tensor& hpe_tokens, const AdapterParams& p,
                              const Tensor& upstream) {
    const Tensor s = summed_tokens(hfc_tokens, hpe_tokens, p);
    const Tensor z = apply(p.mlp, s);
    Tensor a = z;
    for (double& v : a.values()) {
        v = gelu(v);
    }
    if (upstream.rank() != 2 || upstream.rows() != a.rows() || upstream.cols() != p.up.out()) {
        throw ValidationError("upstream gradient shape must match the adapter output");
    }
    AdapterGrads g{Tensor(hfc_tokens.shape()), Tensor(hpe_tokens.shape()), Linear::zeros(p.mlp.in(), p.mlp.out()),
                   Linear::zeros(p.up.in(), p.up.out())};
    Tensor dz = apply_backward(p.up, a, upstream, g.up);
    for (std::size_t i = 0; i < dz.size(); ++i) {
        dz[i] *= gelu_derivative(z[i]);
    }
    const Tensor ds = apply_backward(p.mlp, s, dz, g.mlp);
    g.hfc_tokens = ds;
    g.hpe_tokens = ds;
    return g;
}

Tensor adapter_features(const RealMap& image, const AdapterParams& p) {
    p.validate();
    const Tensor hfc = patch_embed(highpass_fft(image, p.tau), p.patch, p.hfc);
    const Tensor hpe = patch_embed(image, p.patch, p.pe);
    return adapter_forward(hfc, hpe, p);
}

ToyModel ToyModel::random(int patch, std::size_t d_model, std::size_t n_heads, Rng& rng, double scale) {
    ToyModel m;
    const auto flat = static_cast<std::size_t>(patch) * static_cast<std::size_t>(patch);
    m.adapter = AdapterParams::random(patch, d_model, d_model, d_model, 0.25, rng, scale);
    m.image_embed = Linear::random(flat, d_model, rng, scale);
    m.sketch_embed = Linear::random(flat, d_model, rng, scale);
    m.fusion = FusionParams::random(d_model, n_heads, rng, scale);
    m.readout = Linear::random(d_model, 1, rng, scale);
    return m;
}

ToyPrediction toy_predict(const ToyModel& model, const RealMap& image, const RealMap& sketch) {
    require_same_shape(image, sketch);
    const int patch = model.adapter.patch;
    Tensor image_tokens = patch_embed(image, patch, model.image_embed);
    const Tensor injected = adapter_features(image, model.adapter);
    for (std::size_t i = 0; i < image_tokens.size(); ++i) {
        image_tokens[i] += injected[i];
    }
    const Tensor sketch_tokens = patch_embed(sketch, patch, model.sketch_embed);
    ToyPrediction out;
    out.fused = fusion_forward(image_tokens, sketch_tokens, model.fusion);
    const Tensor logits = apply(model.readout, out.fused);
    out.soft = ProbMap(image.height(), image.width());
    const int gw = image.width() / patch;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const double l = logits(static_cast<std::size_t>(y / patch) * gw + x / patch, 0);
            out.soft(y, x) = 1.0 / (1.0 + std::exp(-l));
        }
    }
    out.mask = threshold(out.soft, 0.5);
    return out;
}

}  // namespace camokit

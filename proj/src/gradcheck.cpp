#include "camokit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "camokit/adapter.hpp"
#include "camokit/fusion.hpp"

namespace camokit {

double relative_error(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

GradCheckReport finite_difference_check(const std::string& op, std::vector<GradSlot>& slots,
                                        const std::function<double()>& objective, double h, double tol) {
    if (!(h >= 1e-6 && h <= 1e-3)) {
        throw ParameterError("finite-difference step must lie in [1e-6, 1e-3]");
    }
    GradCheckReport r;
    r.op = op;
    r.h = h;
    r.tol = tol;
    for (GradSlot& slot : slots) {
        if (slot.values == nullptr || slot.analytic.size() != slot.values->size()) {
            throw ValidationError("gradient slot '" + slot.name + "' has no matching analytic gradient");
        }
        std::vector<double>& v = *slot.values;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double saved = v[i];
            v[i] = saved + h;
            const double up = objective();
            v[i] = saved - h;
            const double down = objective();
            v[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = slot.analytic[i];
            ++r.checked;
            if (!std::isfinite(numeric) || !std::isfinite(analytic)) {
                r.failure = "non-finite gradient at " + slot.name + "[" + std::to_string(i) + "]";
                r.worst = slot.name + "[" + std::to_string(i) + "]";
                r.max_rel_err = INFINITY;
                r.pass = false;
                return r;
            }
            const double err = relative_error(analytic, numeric);
            if (r.worst.empty() || err > r.max_rel_err) {
                r.max_rel_err = std::max(r.max_rel_err, err);
                r.worst = slot.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    r.pass = r.max_rel_err < tol;
    return r;
}

std::vector<std::string> grad_check_targets() {
    return {"fusion", "attention", "adapter", "patch_embed", "highpass", "linear",
            "bce",    "dice",      "focal",   "afl",         "boundary", "total"};
}

ProbMap sample_tie_free_prediction(int height, int width, int theta1, int theta2, double margin, Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        // Distinct, evenly spaced levels in random order keep theta1 windows apart.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }
        ProbMap pred(height, width);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = 0.05 + 0.9 * static_cast<double>(order[i]) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
        }
        const ProbMap b = extract_boundary(pred, theta1);
        bool ok = true;
        const int r = theta2 / 2;
        for (int y = 0; y < height && ok; ++y) {
            for (int x = 0; x < width && ok; ++x) {
                double top = -1.0, second = -1.0;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        const double v = b.contains(y + dy, x + dx) ? b(y + dy, x + dx) : 0.0;
                        if (v > top) {
                            second = top;
                            top = v;
                        } else if (v > second) {
                            second = v;
                        }
                    }
                }
                // Windows whose entries are all exactly zero are locally constant.
                if (top > 0.0 && top - second < margin) {
                    ok = false;
                }
            }
        }
        if (ok) {
            return pred;
        }
    }
    throw Error("could not sample a tie-free prediction");
}

namespace {

GradSlot slot(const std::string& name, Tensor& t, const Tensor& grad) { return {name, &t.values(), grad.values()}; }

void add_linear_slots(std::vector<GradSlot>& slots, const std::string& name, Linear& layer, const Linear& grad) {
    slots.push_back(slot(name + ".weight", layer.weight, grad.weight));
    slots.push_back(slot(name + ".bias", layer.bias, grad.bias));
}

double sum(const Tensor& t) {
    double s = 0.0;
    for (double v : t.values()) {
        s += v;
    }
    return s;
}

double sum(const RealMap& m) {
    double s = 0.0;
    for (double v : m.data()) {
        s += v;
    }
    return s;
}

GradCheckReport check_fusion(const GradCheckOptions& o, bool attention_only) {
    Rng rng(derive_seed(o.seed, attention_only ? 2 : 1));
    Tensor image = random_tensor({o.tokens, o.d_model}, rng, -1.0, 1.0);
    Tensor sketch = random_tensor({o.tokens, o.d_model}, rng, -1.0, 1.0);
    FusionParams p = FusionParams::random(o.d_model, o.n_heads, rng, o.param_scale);
    const Tensor ones = Tensor::matrix(o.tokens, o.d_model, 1.0);
    const FusionGrads g = attention_only ? attention_backward(image, sketch, p, ones) : fusion_backward(image, sketch, p, ones);
    std::vector<GradSlot> slots;
    slots.push_back(slot("image_tokens", image, g.image_tokens));
    slots.push_back(slot("sketch_tokens", sketch, g.sketch_tokens));
    add_linear_slots(slots, "q", p.q, g.params.q);
    add_linear_slots(slots, "k", p.k, g.params.k);
    add_linear_slots(slots, "v", p.v, g.params.v);
    add_linear_slots(slots, "o", p.o, g.params.o);
    if (!attention_only) {
        add_linear_slots(slots, "film", p.film, g.params.film);
    }
    auto objective = [&]() {
        return attention_only ? sum(cross_attention(image, sketch, p)) : sum(fusion_forward(image, sketch, p));
    };
    return finite_difference_check(attention_only ? "attention" : "fusion", slots, objective, o.h, o.tol);
}

GradCheckReport check_adapter(const GradCheckOptions& o) {
    Rng rng(derive_seed(o.seed, 3));
    Tensor hfc = random_tensor({o.tokens, o.d_model}, rng, -1.0, 1.0);
    Tensor hpe = random_tensor({o.tokens, o.d_model}, rng, -1.0, 1.0);
    AdapterParams p = AdapterParams::random(2, o.d_model, o.d_model, o.d_model, 0.25, rng, o.param_scale);
    const AdapterGrads g = adapter_backward(hfc, hpe, p, Tensor::matrix(o.tokens, o.d_model, 1.0));
    std::vector<GradSlot> slots;
    slots.push_back(slot("hfc_tokens", hfc, g.hfc_tokens));
    slots.push_back(slot("hpe_tokens", hpe, g.hpe_tokens));
    add_linear_slots(slots, "mlp", p.mlp, g.mlp);
    add_linear_slots(slots, "up", p.up, g.up);
    return finite_difference_check("adapter", slots, [&]() { return sum(adapter_forward(hfc, hpe, p)); }, o.h, o.tol);
}

GradCheckReport check_linear(const GradCheckOptions& o, const std::string& op) {
    Rng rng(derive_seed(o.seed, 4));
    Tensor x = random_tensor({o.tokens, o.d_model}, rng, -1.0, 1.0);
    Linear layer = Linear::random(o.d_model, o.d_model, rng, o.param_scale);
    Linear grad = Linear::zeros(o.d_model, o.d_model);
    const Tensor dx = apply_backward(layer, x, Tensor::matrix(o.tokens, o.d_model, 1.0), grad);
    std::vector<GradSlot> slots;
    slots.push_back(slot("x", x, dx));
    add_linear_slots(slots, "layer", layer, grad);
    return finite_difference_check(op, slots, [&]() { return sum(apply(layer, x)); }, o.h, o.tol);
}

GradCheckReport check_patch_embed(const GradCheckOptions& o) {
    Rng rng(derive_seed(o.seed, 5));
    const int patch = 4;
    Grid<double> image(16, 16);
    for (double& v : image.data()) {
        v = rng.uniform();
    }
    Linear layer = Linear::random(patch * patch, o.d_model, rng, o.param_scale);
    Linear grad = Linear::zeros(patch * patch, o.d_model);
    const Tensor tokens = patchify(image, patch);
    const Tensor dtokens = apply_backward(layer, tokens, Tensor::matrix(tokens.rows(), o.d_model, 1.0), grad);
    // Scatter token gradients back to pixels (patches do not overlap).
    std::vector<double> dimage(image.size());
    const int gw = image.width() / patch;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            dimage[image.index(y, x)] =
                dtokens(static_cast<std::size_t>(y / patch) * gw + x / patch, (y % patch) * patch + x % patch);
        }
    }
    std::vector<double> pixels(image.values());
    std::vector<GradSlot> slots;
    slots.push_back({"image", &pixels, dimage});
    add_linear_slots(slots, "layer", layer, grad);
    auto objective = [&]() {
        const RealMap img(image.height(), image.width(), pixels);
        return sum(patch_embed(img, patch, layer));
    };
    return finite_difference_check("patch_embed", slots, objective, o.h, o.tol);
}

GradCheckReport check_highpass(const GradCheckOptions& o) {
    Rng rng(derive_seed(o.seed, 6));
    const double tau = 0.25;
    std::vector<double> pixels(16 * 16);
    for (double& v : pixels) {
        v = rng.uniform();
    }
    // The filter is self-adjoint, so d sum(H x) / dx = H(1).
    const RealMap analytic = highpass_fft(RealMap(16, 16, 1.0), tau);
    std::vector<GradSlot> slots{{"image", &pixels, analytic.values()}};
    auto objective = [&]() { return sum(highpass_fft(RealMap(16, 16, pixels), tau)); };
    return finite_difference_check("highpass", slots, objective, o.h, o.tol);
}

GradCheckReport check_loss(const GradCheckOptions& o, LossId which) {
    Rng rng(derive_seed(o.seed, 7));
    const int side = 16;
    LossConfig config;
    // Step well below the window gap so no pooling argmax can switch.
    ProbMap pred = sample_tie_free_prediction(side, side, config.theta1, config.theta2, 5.0 * o.h, rng);
    BinaryMask gt(side, side);
    // A blob plus noise so every term is active.
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double dy = y - 7.5, dx = x - 7.0;
            gt(y, x) = (dy * dy + dx * dx < 25.0) != (rng.uniform() < 0.08) ? 1 : 0;
        }
    }
    const double gamma_a = adaptive_gamma(pred, gt, config.eps);
    const RealMap analytic = loss_gradient(pred, gt, config, which, &gamma_a);
    std::vector<double> values = pred.values();
    std::vector<GradSlot> slots{{"pred", &values, analytic.values()}};
    auto objective = [&]() { return loss_value(ProbMap(side, side, values), gt, config, which, &gamma_a); };
    return finite_difference_check(std::string(loss_name(which)), slots, objective, o.h, o.tol);
}

}  // namespace

GradCheckReport run_grad_check(const std::string& target, const GradCheckOptions& options) {
    GradCheckReport r;
    if (target == "fusion") {
        r = check_fusion(options, false);
    } else if (target == "attention") {
        r = check_fusion(options, true);
    } else if (target == "adapter") {
        r = check_adapter(options);
    } else if (target == "linear") {
        r = check_linear(options, "linear");
    } else if (target == "patch_embed") {
        r = check_patch_embed(options);
    } else if (target == "highpass") {
        r = check_highpass(options);
    } else {
        r = check_loss(options, parse_loss_id(target));
    }
    r.seed = options.seed;
    return r;
}

}  // namespace camokit

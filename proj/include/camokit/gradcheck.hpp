#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "camokit/losses.hpp"
#include "camokit/rng.hpp"

namespace camokit {

struct GradCheckReport {
    std::string op;
    std::uint64_t seed = 0;
    double h = 0.0;
    double tol = 0.0;
    double max_rel_err = 0.0;
    std::string worst;  // "<slot>[<index>]" of the largest error
    std::size_t checked = 0;
    bool pass = false;
    std::string failure;  // set when a non-finite value was met
};

// One block of differentiable values and its analytic gradient.
struct GradSlot {
    std::string name;
    std::vector<double>* values = nullptr;
    std::vector<double> analytic;
};

// |a - b| / max(1, |a|, |b|).
double relative_error(double a, double b);

// Central differences of `objective` with respect to every element of every
// slot, compared against the slot's analytic gradient. h must lie in [1e-6, 1e-3].
GradCheckReport finite_difference_check(const std::string& op, std::vector<GradSlot>& slots,
                                        const std::function<double()>& objective, double h, double tol);

struct GradCheckOptions {
    std::uint64_t seed = 0;
    double h = 1e-4;
    double tol = 1e-4;
    std::size_t tokens = 16;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    double param_scale = 0.1;
};

// Targets: fusion, attention, adapter, patch_embed, highpass, linear,
// and the losses bce, dice, focal, afl, boundary, total.
// Network targets use sum-of-outputs as the scalar.
GradCheckReport run_grad_check(const std::string& target, const GradCheckOptions& options);

std::vector<std::string> grad_check_targets();

// Random prediction whose max-pool windows in the boundary loss have a gap of
// at least `margin` between the winner and the runner-up, so a central
// difference with step < margin / 4 never crosses an argmax switch.
ProbMap sample_tie_free_prediction(int height, int width, int theta1, int theta2, double margin, Rng& rng);

}  // namespace camokit

#pragma once

#include <string>
#include <string_view>

#include "camokit/raster.hpp"

namespace camokit {

struct LossConfig {
    double gamma = 2.0;   // focusing exponent
    double alpha = 0.25;  // weight of the (1-P_t)^(gamma+gamma_a+1) term in the adaptive focal loss
    int theta1 = 3;       // boundary extraction window
    int theta2 = 3;       // boundary extension window
    double lambda_mask = 2.0;
    double lambda_dice = 5.0;
    double lambda_adaptive = 5e-4;
    double lambda_boundary = 1.0;
    double eps = 1e-7;  // probability clamp before any log

    void validate() const;
};

// M^b = maxpool(1 - M, theta1) - (1 - M), with pixels outside the image
// treated as background (value 1 in the inverted map).
ProbMap extract_boundary(const ProbMap& map, int theta1);

// M^{b,ext} = maxpool(M^b, theta2).
ProbMap extend_boundary(const ProbMap& boundary, int theta2);

struct BoundaryScore {
    double precision = 0.0;
    double recall = 0.0;
    double bf1 = 0.0;
    double loss = 1.0;
    bool degenerate = false;  // a zero denominator was hit
};

// Soft boundary precision/recall on probability maps. A zero boundary sum
// makes that ratio 0; P + R == 0 gives BF1 = 0 and loss = 1.
BoundaryScore boundary_f1(const ProbMap& pred, const BinaryMask& gt, int theta1, int theta2);

struct FocalResult {
    double sum = 0.0;
    double mean = 0.0;
};

// sum_i -(1 - P_t)^gamma log(P_t), P_t = p for y = 1 and 1 - p otherwise,
// with p clamped to [eps, 1 - eps].
FocalResult focal_loss(const ProbMap& pred, const BinaryMask& gt, double gamma, double eps = 1e-7);

struct AdaptiveFocalResult {
    double gamma_a = 0.0;
    double sum = 0.0;
    double mean = 0.0;
    bool degenerate = false;  // gt has no foreground; gamma_a forced to 0
};

// 1 - mean(P_t) over the gt foreground after clamping.
double adaptive_gamma(const ProbMap& pred, const BinaryMask& gt, double eps, bool* degenerate = nullptr);

// sum_i -(1 - P_t)^(g) log(P_t) + alpha (1 - P_t)^(g + 1) with g = gamma + gamma_a.
AdaptiveFocalResult adaptive_focal_loss(const ProbMap& pred, const BinaryMask& gt, double gamma, double alpha,
                                        double eps = 1e-7);

// Same sum with gamma_a supplied by the caller (frozen statistic).
double adaptive_focal_sum(const ProbMap& pred, const BinaryMask& gt, double gamma, double gamma_a, double alpha,
                          double eps = 1e-7);

struct BceDice {
    double bce = 0.0;   // mean binary cross-entropy on the clamped prediction
    double dice = 0.0;  // 1 - (2 sum(p y) + 1) / (sum p + sum y + 1)
};

BceDice bce_dice(const ProbMap& pred, const BinaryMask& gt, double eps = 1e-7);

struct LossReport {
    LossConfig config;
    double bce = 0.0;
    double dice = 0.0;
    double focal = 0.0;  // sum reduction
    double focal_mean = 0.0;
    double afl = 0.0;  // sum reduction; this is the term weighted by lambda_adaptive
    double afl_mean = 0.0;
    double gamma_a = 0.0;
    double bf1_precision = 0.0;
    double bf1_recall = 0.0;
    double bf1 = 0.0;
    double boundary_loss = 0.0;
    double total = 0.0;
    bool afl_degenerate = false;
    bool boundary_degenerate = false;
};

// total = lambda_mask bce + lambda_dice dice + lambda_adaptive afl + lambda_boundary boundary_loss.
LossReport total_loss(const ProbMap& pred, const BinaryMask& gt, const LossConfig& config);

enum class LossId { Bce, Dice, Focal, AdaptiveFocal, Boundary, Total };

LossId parse_loss_id(std::string_view name);
std::string_view loss_name(LossId id);

// Scalar value of the selected loss with the same reductions the gradient
// uses. For AdaptiveFocal, gamma_a is taken from `frozen_gamma_a` when
// given, otherwise computed from `pred`.
double loss_value(const ProbMap& pred, const BinaryMask& gt, const LossConfig& config, LossId which,
                  const double* frozen_gamma_a = nullptr);

// Analytic d(loss)/d(pred) per pixel. gamma_a is treated as a constant. For
// the boundary loss, max-pool routes the derivative to the window argmax
// (first in scan order on ties).
RealMap loss_gradient(const ProbMap& pred, const BinaryMask& gt, const LossConfig& config, LossId which,
                      const double* frozen_gamma_a = nullptr);

}  // namespace camokit

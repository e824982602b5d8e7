#include "camokit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace camokit {

namespace {

void check_inputs(const ProbMap& pred, const BinaryMask& gt) {
    require_same_shape(pred, gt);
    validate_probabilities(pred);
}

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

// Confidence assigned to the true class.
double p_true(double p, bool y) { return y ? p : 1.0 - p; }

// Per-pixel -(1-pt)^g log(pt) + a (1-pt)^(g+1).
double focal_term(double pt, double g, double a) {
    const double q = 1.0 - pt;
    return -std::pow(q, g) * std::log(pt) + a * std::pow(q, g + 1.0);
}

// d/d(pt) of focal_term.
double focal_term_dpt(double pt, double g, double a) {
    const double q = 1.0 - pt;
    const double qg1 = g == 0.0 ? 0.0 : g * std::pow(q, g - 1.0);
    return qg1 * std::log(pt) - std::pow(q, g) / pt - a * (g + 1.0) * std::pow(q, g);
}

struct BoundaryForward {
    ProbMap inverted;
    PoolResult pooled;  // maxpool(1 - M, theta1), border 1
    ProbMap boundary;
    PoolResult extended;  // maxpool(M^b, theta2), border 0
};

BoundaryForward boundary_forward(const ProbMap& map, int theta1, int theta2) {
    BoundaryForward f;
    f.inverted = ProbMap(map.height(), map.width());
    for (std::size_t i = 0; i < map.size(); ++i) {
        f.inverted[i] = 1.0 - map[i];
    }
    f.pooled = maxpool_argmax(f.inverted, theta1, 1.0);
    f.boundary = ProbMap(map.height(), map.width());
    for (std::size_t i = 0; i < map.size(); ++i) {
        f.boundary[i] = std::clamp(f.pooled.values[i] - f.inverted[i], 0.0, 1.0);
    }
    f.extended = maxpool_argmax(f.boundary, theta2, 0.0);
    return f;
}

struct BoundarySums {
    double p_num = 0.0, p_den = 0.0, r_num = 0.0, r_den = 0.0;
};

BoundarySums boundary_sums(const ProbMap& pd_b, const ProbMap& pd_ext, const ProbMap& gt_b, const ProbMap& gt_ext) {
    BoundarySums s;
    for (std::size_t i = 0; i < pd_b.size(); ++i) {
        s.p_num += pd_b[i] * gt_ext[i];
        s.p_den += pd_b[i];
        s.r_num += gt_b[i] * pd_ext[i];
        s.r_den += gt_b[i];
    }
    return s;
}

BoundaryScore score_from(const BoundarySums& s) {
    BoundaryScore out;
    out.precision = s.p_den > 0.0 ? s.p_num / s.p_den : 0.0;
    out.recall = s.r_den > 0.0 ? s.r_num / s.r_den : 0.0;
    out.degenerate = !(s.p_den > 0.0) || !(s.r_den > 0.0);
    const double pr = out.precision + out.recall;
    if (pr > 0.0) {
        out.bf1 = 2.0 * out.precision * out.recall / pr;
    } else {
        out.bf1 = 0.0;
        out.degenerate = true;
    }
    out.loss = 1.0 - out.bf1;
    return out;
}

}  // namespace

void LossConfig::validate() const {
    if (theta1 < 1 || theta1 % 2 == 0 || theta2 < 1 || theta2 % 2 == 0) {
        throw ParameterError("theta1 and theta2 must be odd and >= 1");
    }
    if (!(eps > 0.0 && eps <= 1e-3)) {
        throw ParameterError("eps must lie in (0, 1e-3]");
    }
    for (double v : {gamma, alpha, lambda_mask, lambda_dice, lambda_adaptive, lambda_boundary}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ParameterError("loss weights and exponents must be finite and >= 0");
        }
    }
}

ProbMap extract_boundary(const ProbMap& map, int theta1) {
    ProbMap inverted(map.height(), map.width());
    for (std::size_t i = 0; i < map.size(); ++i) {
        inverted[i] = 1.0 - map[i];
    }
    const RealMap pooled = maxpool(inverted, theta1, 1.0);
    ProbMap out(map.height(), map.width());
    for (std::size_t i = 0; i < map.size(); ++i) {
        out[i] = std::clamp(pooled[i] - inverted[i], 0.0, 1.0);
    }
    return out;
}

ProbMap extend_boundary(const ProbMap& boundary, int theta2) { return maxpool(boundary, theta2, 0.0); }

BoundaryScore boundary_f1(const ProbMap& pred, const BinaryMask& gt, int theta1, int theta2) {
    check_inputs(pred, gt);
    const ProbMap gt_b = extract_boundary(to_prob(gt), theta1);
    const ProbMap gt_ext = extend_boundary(gt_b, theta2);
    const ProbMap pd_b = extract_boundary(pred, theta1);
    const ProbMap pd_ext = extend_boundary(pd_b, theta2);
    return score_from(boundary_sums(pd_b, pd_ext, gt_b, gt_ext));
}

FocalResult focal_loss(const ProbMap& pred, const BinaryMask& gt, double gamma, double eps) {
    check_inputs(pred, gt);
    FocalResult r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        r.sum += focal_term(p_true(clamp_prob(pred[i], eps), gt[i] != 0), gamma, 0.0);
    }
    r.mean = r.sum / static_cast<double>(pred.size());
    return r;
}

double adaptive_gamma(const ProbMap& pred, const BinaryMask& gt, double eps, bool* degenerate) {
    check_inputs(pred, gt);
    double confidence = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (gt[i]) {
            confidence += clamp_prob(pred[i], eps);
            count += 1.0;
        }
    }
    if (degenerate) {
        *degenerate = count == 0.0;
    }
    return count == 0.0 ? 0.0 : 1.0 - confidence / count;
}

double adaptive_focal_sum(const ProbMap& pred, const BinaryMask& gt, double gamma, double gamma_a, double alpha,
                          double eps) {
    check_inputs(pred, gt);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sum += focal_term(p_true(clamp_prob(pred[i], eps), gt[i] != 0), gamma + gamma_a, alpha);
    }
    return sum;
}

AdaptiveFocalResult adaptive_focal_loss(const ProbMap& pred, const BinaryMask& gt, double gamma, double alpha,
                                        double eps) {
    AdaptiveFocalResult r;
    r.gamma_a = adaptive_gamma(pred, gt, eps, &r.degenerate);
    r.sum = adaptive_focal_sum(pred, gt, gamma, r.gamma_a, alpha, eps);
    r.mean = r.sum / static_cast<double>(pred.size());
    return r;
}

BceDice bce_dice(const ProbMap& pred, const BinaryMask& gt, double eps) {
    check_inputs(pred, gt);
    double bce = 0.0;
    double inter = 0.0;
    double psum = 0.0;
    double ysum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool y = gt[i] != 0;
        const double p = clamp_prob(pred[i], eps);
        bce -= y ? std::log(p) : std::log(1.0 - p);
        inter += y ? pred[i] : 0.0;
        psum += pred[i];
        ysum += y ? 1.0 : 0.0;
    }
    constexpr double smooth = 1.0;
    return {bce / static_cast<double>(pred.size()), 1.0 - (2.0 * inter + smooth) / (psum + ysum + smooth)};
}

LossReport total_loss(const ProbMap& pred, const BinaryMask& gt, const LossConfig& config) {
    config.validate();
    check_inputs(pred, gt);
    LossReport r;
    r.config = config;
    const BceDice bd = bce_dice(pred, gt, config.eps);
    r.bce = bd.bce;
    r.dice = bd.dice;
    const FocalResult fl = focal_loss(pred, gt, config.gamma, config.eps);
    r.focal = fl.sum;
    r.focal_mean = fl.mean;
    const AdaptiveFocalResult afl = adaptive_focal_loss(pred, gt, config.gamma, config.alpha, config.eps);
    r.afl = afl.sum;
    r.afl_mean = afl.mean;
    r.gamma_a = afl.gamma_a;
    r.afl_degenerate = afl.degenerate;
    const BoundaryScore bs = boundary_f1(pred, gt, config.theta1, config.theta2);
    r.bf1_precision = bs.precision;
    r.bf1_recall = bs.recall;
    r.bf1 = bs.bf1;
    r.boundary_loss = bs.loss;
    r.boundary_degenerate = bs.degenerate;
    r.total = config.lambda_mask * r.bce + config.lambda_dice * r.dice + config.lambda_adaptive * r.afl +
              config.lambda_boundary * r.boundary_loss;
    return r;
}

LossId parse_loss_id(std::string_view name) {
    if (name == "bce") return LossId::Bce;
    if (name == "dice") return LossId::Dice;
    if (name == "focal") return LossId::Focal;
    if (name == "afl") return LossId::AdaptiveFocal;
    if (name == "boundary") return LossId::Boundary;
    if (name == "total") return LossId::Total;
    throw ParameterError("unknown loss id '" + std::string(name) + "'");
}

std::string_view loss_name(LossId id) {
    switch (id) {
        case LossId::Bce: return "bce";
        case LossId::Dice: return "dice";
        case LossId::Focal: return "focal";
        case LossId::AdaptiveFocal: return "afl";
        case LossId::Boundary: return "boundary";
        case LossId::Total: return "total";
    }
    throw ParameterError("unknown loss id");
}

double loss_value(const ProbMap& pred, const BinaryMask& gt, const LossConfig& config, LossId which,
                  const double* frozen_gamma_a) {
    config.validate();
    switch (which) {
        case LossId::Bce: return bce_dice(pred, gt, config.eps).bce;
        case LossId::Dice: return bce_dice(pred, gt, config.eps).dice;
        case LossId::Focal: return focal_loss(pred, gt, config.gamma, config.eps).sum;
        case LossId::AdaptiveFocal: {
            const double ga = frozen_gamma_a ? *frozen_gamma_a : adaptive_gamma(pred, gt, config.eps);
            return adaptive_focal_sum(pred, gt, config.gamma, ga, config.alpha, config.eps);
        }
        case LossId::Boundary: return boundary_f1(pred, gt, config.theta1, config.theta2).loss;
        case LossId::Total: {
            const BceDice bd = bce_dice(pred, gt, config.eps);
            const double ga = frozen_gamma_a ? *frozen_gamma_a : adaptive_gamma(pred, gt, config.eps);
            return config.lambda_mask * bd.bce + config.lambda_dice * bd.dice +
                   config.lambda_adaptive * adaptive_focal_sum(pred, gt, config.gamma, ga, config.alpha, config.eps) +
                   config.lambda_boundary * boundary_f1(pred, gt, config.theta1, config.theta2).loss;
        }
    }
    throw ParameterError("unknown loss id");
}

namespace {

// d(-log-likelihood)/dp for the clamped mean BCE.
void add_bce_grad(const ProbMap& pred, const BinaryMask& gt, double eps, double scale, RealMap& g) {
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = pred[i];
        if (p < eps || p > 1.0 - eps) {
            continue;  // clamp is flat here
        }
        const double y = gt[i] ? 1.0 : 0.0;
        g[i] += scale * (p - y) / (p * (1.0 - p)) / n;
    }
}

void add_dice_grad(const ProbMap& pred, const BinaryMask& gt, double scale, RealMap& g) {
    double inter = 0.0, psum = 0.0, ysum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double y = gt[i] ? 1.0 : 0.0;
        inter += pred[i] * y;
        psum += pred[i];
        ysum += y;
    }
    constexpr double smooth = 1.0;
    const double num = 2.0 * inter + smooth;
    const double den = psum + ysum + smooth;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double y = gt[i] ? 1.0 : 0.0;
        g[i] += scale * -(2.0 * y * den - num) / (den * den);
    }
}

void add_focal_grad(const ProbMap& pred, const BinaryMask& gt, double exponent, double alpha, double eps,
                    double scale, RealMap& g) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = pred[i];
        if (p < eps || p > 1.0 - eps) {
            continue;
        }
        const bool y = gt[i] != 0;
        const double d = focal_term_dpt(p_true(p, y), exponent, alpha);
        g[i] += scale * (y ? d : -d);
    }
}

void add_boundary_grad(const ProbMap& pred, const BinaryMask& gt, int theta1, int theta2, double scale, RealMap& g) {
    const ProbMap gt_b = extract_boundary(to_prob(gt), theta1);
    const ProbMap gt_ext = extend_boundary(gt_b, theta2);
    const BoundaryForward f = boundary_forward(pred, theta1, theta2);
    const BoundarySums s = boundary_sums(f.boundary, f.extended.values, gt_b, gt_ext);
    const BoundaryScore score = score_from(s);
    const double pr = score.precision + score.recall;
    if (!(pr > 0.0)) {
        return;  // BF1 pinned at 0
    }
    const double dl_dp = -2.0 * score.recall * score.recall / (pr * pr);
    const double dl_dr = -2.0 * score.precision * score.precision / (pr * pr);

    // Gradient with respect to M^b_pd, directly and through the extension pool.
    RealMap g_b(pred.height(), pred.width());
    if (s.p_den > 0.0) {
        for (std::size_t i = 0; i < pred.size(); ++i) {
            g_b[i] += dl_dp * (gt_ext[i] - score.precision) / s.p_den;
        }
    }
    if (s.r_den > 0.0) {
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const std::ptrdiff_t src = f.extended.argmax[j];
            if (src >= 0) {
                g_b[static_cast<std::size_t>(src)] += dl_dr * gt_b[j] / s.r_den;
            }
        }
    }
    // M^b[k] = pooled[k] - (1 - M[k]), pooled[k] = 1 - M[argmax] or the border.
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double raw = f.pooled.values[k] - f.inverted[k];
        if (raw < 0.0 || raw > 1.0) {
            continue;  // clamp active
        }
        g[k] += scale * g_b[k];
        const std::ptrdiff_t src = f.pooled.argmax[k];
        if (src >= 0) {
            g[static_cast<std::size_t>(src)] -= scale * g_b[k];
        }
    }
}

}  // namespace

RealMap loss_gradient(const ProbMap& pred, const BinaryMask& gt, const LossConfig& config, LossId which,
                      const double* frozen_gamma_a) {
    config.validate();
    check_inputs(pred, gt);
    RealMap g(pred.height(), pred.width(), 0.0);
    auto gamma_a = [&]() { return frozen_gamma_a ? *frozen_gamma_a : adaptive_gamma(pred, gt, config.eps); };
    switch (which) {
        case LossId::Bce: add_bce_grad(pred, gt, config.eps, 1.0, g); break;
        case LossId::Dice: add_dice_grad(pred, gt, 1.0, g); break;
        case LossId::Focal: add_focal_grad(pred, gt, config.gamma, 0.0, config.eps, 1.0, g); break;
        case LossId::AdaptiveFocal:
            add_focal_grad(pred, gt, config.gamma + gamma_a(), config.alpha, config.eps, 1.0, g);
            break;
        case LossId::Boundary: add_boundary_grad(pred, gt, config.theta1, config.theta2, 1.0, g); break;
        case LossId::Total:
            add_bce_grad(pred, gt, config.eps, config.lambda_mask, g);
            add_dice_grad(pred, gt, config.lambda_dice, g);
            add_focal_grad(pred, gt, config.gamma + gamma_a(), config.alpha, config.eps, config.lambda_adaptive, g);
            add_boundary_grad(pred, gt, config.theta1, config.theta2, config.lambda_boundary, g);
            break;
    }
    return g;
}

}  // namespace camokit

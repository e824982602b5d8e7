#include "camokit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "camokit/losses.hpp"

namespace camokit {

RegionMetrics region_metrics(const ProbMap& pred, const BinaryMask& gt, double beta2) {
    require_same_shape(pred, gt);
    validate_probabilities(pred);
    if (!(beta2 > 0.0) || !std::isfinite(beta2)) {
        throw ParameterError("beta^2 must be positive");
    }
    double abs_err = 0.0;
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool y = gt[i] != 0;
        abs_err += std::abs(pred[i] - (y ? 1.0 : 0.0));
        const bool p = pred[i] >= kBinarizeThreshold;
        tp += (p && y) ? 1.0 : 0.0;
        fp += (p && !y) ? 1.0 : 0.0;
        fn += (!p && y) ? 1.0 : 0.0;
    }
    RegionMetrics m;
    m.mae = abs_err / static_cast<double>(pred.size());
    const double uni = tp + fp + fn;
    m.iou = uni > 0.0 ? tp / uni : 1.0;
    const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    const double den = beta2 * precision + recall;
    m.f_beta = den > 0.0 ? (1.0 + beta2) * precision * recall / den : 0.0;
    return m;
}

double boundary_metric(const ProbMap& pred, const BinaryMask& gt, int theta1, int theta2) {
    require_same_shape(pred, gt);
    validate_probabilities(pred);
    const ProbMap binarized = to_prob(threshold(pred, kBinarizeThreshold));
    return boundary_f1(binarized, gt, theta1, theta2).bf1;
}

ImageMetrics evaluate_image(const ProbMap& pred, const BinaryMask& gt, double beta2, int theta1, int theta2) {
    const RegionMetrics r = region_metrics(pred, gt, beta2);
    return {"", r.mae, r.iou, r.f_beta, boundary_metric(pred, gt, theta1, theta2)};
}

MetricReport aggregate(const std::vector<ImageMetrics>& reports) {
    if (reports.empty()) {
        throw ParameterError("cannot aggregate an empty report list");
    }
    // Summing in sorted order makes the mean independent of input order, bit for bit.
    auto mean_of = [&](double ImageMetrics::*field) {
        std::vector<double> v;
        v.reserve(reports.size());
        for (const ImageMetrics& r : reports) {
            v.push_back(r.*field);
        }
        std::sort(v.begin(), v.end());
        double sum = 0.0;
        for (double x : v) {
            sum += x;
        }
        return sum / static_cast<double>(v.size());
    };
    MetricReport out;
    out.mae = mean_of(&ImageMetrics::mae);
    out.iou = mean_of(&ImageMetrics::iou);
    out.f_beta = mean_of(&ImageMetrics::f_beta);
    out.boundary_f1 = mean_of(&ImageMetrics::boundary_f1);
    out.count = reports.size();
    out.per_image = reports;
    return out;
}

}  // namespace camokit

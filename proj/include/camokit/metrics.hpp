#pragma once

#include <string>
#include <vector>

#include "camokit/raster.hpp"

namespace camokit {

struct RegionMetrics {
    double mae = 0.0;
    double iou = 0.0;
    double f_beta = 0.0;
};

struct ImageMetrics {
    std::string name;
    double mae = 0.0;
    double iou = 0.0;
    double f_beta = 0.0;
    double boundary_f1 = 0.0;
};

struct MetricReport {
    double mae = 0.0;
    double iou = 0.0;
    double f_beta = 0.0;
    double boundary_f1 = 0.0;
    std::size_t count = 0;
    std::vector<ImageMetrics> per_image;
};

inline constexpr double kBinarizeThreshold = 0.5;
inline constexpr double kDefaultBeta2 = 0.3;

// MAE on the soft prediction; IoU and F-beta on pred >= 0.5. IoU is 1 when
// both masks are empty; F-beta is 0 when its denominator is 0.
RegionMetrics region_metrics(const ProbMap& pred, const BinaryMask& gt, double beta2 = kDefaultBeta2);

// BF1 of the binarized prediction, same conventions as the boundary loss.
double boundary_metric(const ProbMap& pred, const BinaryMask& gt, int theta1 = 3, int theta2 = 3);

ImageMetrics evaluate_image(const ProbMap& pred, const BinaryMask& gt, double beta2 = kDefaultBeta2, int theta1 = 3,
                            int theta2 = 3);

// Unweighted means in input order. Throws ParameterError on an empty list.
MetricReport aggregate(const std::vector<ImageMetrics>& reports);

}  // namespace camokit

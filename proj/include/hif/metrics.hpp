#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace hif {

struct LabeledScore {
    double score = 0.0;
    bool anomaly = false;  // positive class
};

struct RocCurve {
    // (false positive rate, true positive rate), from (0,0) to (1,1)
    std::vector<std::pair<double, double>> points;
    double auc = 0.0;
};

/// Threshold-sweep ROC with AUC from the mid-rank Mann-Whitney statistic.
/// Requires at least one sample of each class.
RocCurve roc_auc(std::span<const LabeledScore> samples);

double trapezoid_area(const std::vector<std::pair<double, double>>& points);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> normal;
    std::vector<std::size_t> anomaly;
};

/// Equal-width bins over the pooled score range, counted per label.
Histogram score_histogram(std::span<const LabeledScore> samples, std::size_t bins);

}  // namespace hif

#pragma once

#include <span>
#include <vector>

#include "hif/forest.hpp"

namespace hif {

/// Component-wise min/max of the raw scores over the training set.
struct ScoreNormalizer {
    struct Range {
        double min = 0.0;
        double max = 0.0;
    };
    Range path;
    Range centroid;
    Range anomaly_ratio;
};

struct NormalizedTriple {
    double path = 0.0;
    double centroid = 0.0;
    double anomaly_ratio = 0.0;
};

struct AggregationParams {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
};

ScoreNormalizer fit_normalizer(const HybridForest& forest,
                               std::span<const Instance> train);

ScoreNormalizer fit_normalizer(std::span<const ScoreTriple> train_scores);

/// Affine map onto the training [min,max]; values outside the fit range
/// are not clamped, which keeps extreme anomalies ordered.
NormalizedTriple normalize(const ScoreNormalizer& norm, const ScoreTriple& triple);

/// alpha2 * (alpha1 * s + (1 - alpha1) * s_c) + (1 - alpha2) * s_a.
/// alpha2 = 1 drops the supervised term; alpha1 = alpha2 = 1 is pure IF.
double aggregate(const NormalizedTriple& s, const AggregationParams& params);

struct GridSearchResult {
    AggregationParams params;
    double auc = 0.0;
    std::size_t evaluations = 0;
};

/// Exhaustive AUC maximization on the (alpha1, alpha2) lattice. Ties go
/// to the smallest alpha1, then the smallest alpha2.
GridSearchResult grid_search(std::span<const ScoreTriple> validation_scores,
                             const std::vector<bool>& validation_labels,
                             const ScoreNormalizer& norm, double grid_step = 0.05);

GridSearchResult grid_search(const HybridForest& forest, const ScoreNormalizer& norm,
                             std::span<const Instance> validation,
                             const std::vector<bool>& labels, double grid_step = 0.05);

/// alpha2 pinned to 1: the unsupervised two-component model.
GridSearchResult grid_search_alpha1(std::span<const ScoreTriple> validation_scores,
                                    const std::vector<bool>& validation_labels,
                                    const ScoreNormalizer& norm, double grid_step = 0.05);

}  // namespace hif

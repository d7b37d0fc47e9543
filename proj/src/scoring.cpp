#include "hif/scoring.hpp"

#include <cmath>
#include <stdexcept>

#include "hif/metrics.hpp"

namespace hif {

namespace {

double map_component(double value, const ScoreNormalizer::Range& r) {
    const double span = r.max - r.min;
    if (span <= 0.0) return 0.0;  // degenerate component carries no signal
    return (value - r.min) / span;
}

void expand(ScoreNormalizer::Range& r, double v, bool first) {
    if (first) {
        r.min = r.max = v;
    } else {
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
    }
}

GridSearchResult search_lattice(std::span<const ScoreTriple> scores,
                                const std::vector<bool>& labels,
                                const ScoreNormalizer& norm, double grid_step,
                                bool sweep_alpha2) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("scores/labels size mismatch");
    }
    if (!(grid_step > 0.0) || grid_step > 0.5) {
        throw std::invalid_argument("grid_step must be in (0, 0.5]");
    }

    std::vector<NormalizedTriple> normalized(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        normalized[i] = normalize(norm, scores[i]);
    }

    const auto steps = static_cast<std::size_t>(std::floor(1.0 / grid_step + 1e-9));
    std::vector<LabeledScore> labeled(scores.size());

    GridSearchResult best;
    best.auc = -1.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double a1 = std::min(1.0, static_cast<double>(i) * grid_step);
        const std::size_t j_hi = sweep_alpha2 ? steps : 0;
        for (std::size_t j = 0; j <= j_hi; ++j) {
            const double a2 = sweep_alpha2 ? std::min(1.0, static_cast<double>(j) * grid_step)
                                           : 1.0;
            const AggregationParams params{a1, a2};
            for (std::size_t k = 0; k < normalized.size(); ++k) {
                labeled[k] = {aggregate(normalized[k], params), labels[k]};
            }
            const double auc = roc_auc(labeled).auc;
            ++best.evaluations;
            if (auc > best.auc) {
                best.auc = auc;
                best.params = params;
            }
        }
    }
    return best;
}

}  // namespace

ScoreNormalizer fit_normalizer(std::span<const ScoreTriple> train_scores) {
    if (train_scores.empty()) throw std::invalid_argument("cannot fit normalizer on empty set");
    ScoreNormalizer norm;
    bool first = true;
    for (const auto& s : train_scores) {
        expand(norm.path, s.path_score, first);
        expand(norm.centroid, s.centroid_score, first);
        expand(norm.anomaly_ratio, s.anomaly_ratio_score, first);
        first = false;
    }
    return norm;
}

ScoreNormalizer fit_normalizer(const HybridForest& forest, std::span<const Instance> train) {
    return fit_normalizer(raw_scores_batch(forest, train));
}

NormalizedTriple normalize(const ScoreNormalizer& norm, const ScoreTriple& triple) {
    return {map_component(triple.path_score, norm.path),
            map_component(triple.centroid_score, norm.centroid),
            map_component(triple.anomaly_ratio_score, norm.anomaly_ratio)};
}

double aggregate(const NormalizedTriple& s, const AggregationParams& params) {
    return params.alpha2 * (params.alpha1 * s.path + (1.0 - params.alpha1) * s.centroid) +
           (1.0 - params.alpha2) * s.anomaly_ratio;
}

GridSearchResult grid_search(std::span<const ScoreTriple> validation_scores,
                             const std::vector<bool>& validation_labels,
                             const ScoreNormalizer& norm, double grid_step) {
    return search_lattice(validation_scores, validation_labels, norm, grid_step, true);
}

GridSearchResult grid_search(const HybridForest& forest, const ScoreNormalizer& norm,
                             std::span<const Instance> validation,
                             const std::vector<bool>& labels, double grid_step) {
    const auto scores = raw_scores_batch(forest, validation);
    return grid_search(scores, labels, norm, grid_step);
}

GridSearchResult grid_search_alpha1(std::span<const ScoreTriple> validation_scores,
                                    const std::vector<bool>& validation_labels,
                                    const ScoreNormalizer& norm, double grid_step) {
    return search_lattice(validation_scores, validation_labels, norm, grid_step, false);
}

}  // namespace hif

#include "hif/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hif {

RocCurve roc_auc(std::span<const LabeledScore> samples) {
    std::size_t n_pos = 0;
    for (const auto& s : samples) {
        if (!std::isfinite(s.score)) throw std::invalid_argument("non-finite score");
        if (s.anomaly) ++n_pos;
    }
    const std::size_t n_neg = samples.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw std::invalid_argument("ROC needs both labels present");
    }

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].score < samples[b].score;
    });

    // mid-rank sum over positives
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
        const double mid_rank = static_cast<double>(i + j + 1) / 2.0;  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (samples[order[k]].anomaly) rank_sum += mid_rank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    const double auc = (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);

    // threshold sweep from high to low scores, tied scores grouped
    RocCurve curve;
    curve.auc = auc;
    curve.points.emplace_back(0.0, 0.0);
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = order.size(); i > 0;) {
        std::size_t j = i;
        while (j > 0 && samples[order[j - 1]].score == samples[order[i - 1]].score) --j;
        for (std::size_t k = j; k < i; ++k) {
            if (samples[order[k]].anomaly) {
                ++tp;
            } else {
                ++fp;
            }
        }
        curve.points.emplace_back(static_cast<double>(fp) / nn, static_cast<double>(tp) / np);
        i = j;
    }
    return curve;
}

double trapezoid_area(const std::vector<std::pair<double, double>>& points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& [x0, y0] = points[i - 1];
        const auto& [x1, y1] = points[i];
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    return area;
}

Histogram score_histogram(std::span<const LabeledScore> samples, std::size_t bins) {
    if (bins < 1) throw std::invalid_argument("bins must be >= 1");
    Histogram h;
    h.normal.assign(bins, 0);
    h.anomaly.assign(bins, 0);
    if (samples.empty()) return h;

    h.lo = h.hi = samples.front().score;
    for (const auto& s : samples) {
        h.lo = std::min(h.lo, s.score);
        h.hi = std::max(h.hi, s.score);
    }
    const double width = h.hi - h.lo;
    for (const auto& s : samples) {
        std::size_t bin = 0;
        if (width > 0.0) {
            bin = static_cast<std::size_t>((s.score - h.lo) / width * static_cast<double>(bins));
            bin = std::min(bin, bins - 1);  // score == hi lands in the last bin
        }
        (s.anomaly ? h.anomaly : h.normal)[bin] += 1;
    }
    return h;
}

}  // namespace hif

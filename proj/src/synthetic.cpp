#include "hif/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hif/metrics.hpp"

namespace hif {

namespace {

double gaussian01(RandomStream& rng) {
    // Box-Muller, one variate per call
    double u = rng.uniform01();
    while (u <= 0.0) u = rng.uniform01();
    const double v = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

struct LeafStats {
    std::size_t leaves = 0;
    std::size_t members = 0;
};

void walk_leaves(const TreeNode& node, LeafStats& stats) {
    if (node.is_external()) {
        ++stats.leaves;
        stats.members += node.size;
        return;
    }
    walk_leaves(*node.left, stats);
    walk_leaves(*node.right, stats);
}

std::vector<LabeledScore> label_pool(std::span<const double> normal_scores,
                                     std::span<const double> anomaly_scores) {
    std::vector<LabeledScore> pool;
    pool.reserve(normal_scores.size() + anomaly_scores.size());
    for (double s : normal_scores) pool.push_back({s, false});
    for (double s : anomaly_scores) pool.push_back({s, true});
    return pool;
}

std::vector<double> aggregate_all(std::span<const ScoreTriple> triples,
                                  const ScoreNormalizer& norm,
                                  const AggregationParams& params) {
    std::vector<double> out(triples.size());
    for (std::size_t i = 0; i < triples.size(); ++i) {
        out[i] = aggregate(normalize(norm, triples[i]), params);
    }
    return out;
}

DetectorAuc cluster_aucs(std::span<const double> normals, std::span<const double> red,
                         std::span<const double> green, std::span<const double> cyan) {
    DetectorAuc auc;
    auc.red = roc_auc(label_pool(normals, red)).auc;
    auc.green = roc_auc(label_pool(normals, green)).auc;
    auc.cyan = roc_auc(label_pool(normals, cyan)).auc;

    std::vector<double> all_anomalies;
    all_anomalies.insert(all_anomalies.end(), red.begin(), red.end());
    all_anomalies.insert(all_anomalies.end(), green.begin(), green.end());
    all_anomalies.insert(all_anomalies.end(), cyan.begin(), cyan.end());
    auc.pooled = roc_auc(label_pool(normals, all_anomalies)).auc;
    return auc;
}

}  // namespace

std::vector<Instance> sample_annulus(std::size_t n, double r_inner, double r_outer,
                                     RandomStream& rng) {
    if (!(r_inner >= 0.0) || !(r_outer > r_inner)) {
        throw std::invalid_argument("annulus radii must satisfy 0 <= r_inner < r_outer");
    }
    std::vector<Instance> points;
    points.reserve(n);
    const double r_in2 = r_inner * r_inner;
    const double r_out2 = r_outer * r_outer;
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = rng.uniform01() * 2.0 * std::numbers::pi;
        // inverse CDF on r^2 gives area-uniform density
        const double r = std::sqrt(rng.uniform01() * (r_out2 - r_in2) + r_in2);
        points.push_back({r * std::cos(theta), r * std::sin(theta)});
    }
    return points;
}

std::vector<Instance> sample_gaussian(std::size_t n, const std::array<double, 2>& mean,
                                      const std::array<double, 2>& cov_diag,
                                      RandomStream& rng) {
    if (cov_diag[0] <= 0.0 || cov_diag[1] <= 0.0) {
        throw std::invalid_argument("variances must be positive");
    }
    std::vector<Instance> points;
    points.reserve(n);
    const double sx = std::sqrt(cov_diag[0]);
    const double sy = std::sqrt(cov_diag[1]);
    for (std::size_t i = 0; i < n; ++i) {
        points.push_back({mean[0] + sx * gaussian01(rng), mean[1] + sy * gaussian01(rng)});
    }
    return points;
}

TorusData make_torus_dataset(const TorusConfig& config) {
    TorusData data;
    RandomStream rng_train = RandomStream::for_tree(config.seed, 0);
    RandomStream rng_test = RandomStream::for_tree(config.seed, 1);
    RandomStream rng_red = RandomStream::for_tree(config.seed, 2);
    RandomStream rng_green = RandomStream::for_tree(config.seed, 3);
    RandomStream rng_cyan = RandomStream::for_tree(config.seed, 4);

    data.train = sample_annulus(config.n_train, config.r_inner, config.r_outer, rng_train);
    data.test = sample_annulus(config.n_test, config.r_inner, config.r_outer, rng_test);
    data.red = sample_gaussian(config.n_per_cluster, kRedCluster.mean, kRedCluster.cov_diag,
                               rng_red);
    data.green = sample_gaussian(config.n_per_cluster, kGreenCluster.mean,
                                 kGreenCluster.cov_diag, rng_green);
    data.cyan = sample_gaussian(config.n_per_cluster, kCyanCluster.mean, kCyanCluster.cov_diag,
                                rng_cyan);
    return data;
}

BlindSpotReport run_blind_spot_experiment(const TorusConfig& config,
                                          const ForestParams& params,
                                          std::size_t n_labeled_red, double grid_step) {
    const TorusData data = make_torus_dataset(config);
    HybridForest forest = build_forest(data.train, params);

    // phase 1: no anomalies inserted yet, covers IF and HIF1
    auto train_t = raw_scores_batch(forest, data.train);
    auto test_t = raw_scores_batch(forest, data.test);
    auto red_t = raw_scores_batch(forest, data.red);
    auto green_t = raw_scores_batch(forest, data.green);
    auto cyan_t = raw_scores_batch(forest, data.cyan);

    auto pooled_scores = [&](std::span<const ScoreTriple> test,
                             std::span<const ScoreTriple> red,
                             std::span<const ScoreTriple> green,
                             std::span<const ScoreTriple> cyan) {
        std::vector<ScoreTriple> scores(test.begin(), test.end());
        scores.insert(scores.end(), red.begin(), red.end());
        scores.insert(scores.end(), green.begin(), green.end());
        scores.insert(scores.end(), cyan.begin(), cyan.end());
        std::vector<bool> labels(test.size(), false);
        labels.resize(scores.size(), true);
        return std::make_pair(scores, labels);
    };

    BlindSpotReport report;

    auto component = [](std::span<const ScoreTriple> triples, auto member) {
        std::vector<double> v(triples.size());
        for (std::size_t i = 0; i < triples.size(); ++i) v[i] = triples[i].*member;
        return v;
    };
    report.iforest = cluster_aucs(component(test_t, &ScoreTriple::path_score),
                                  component(red_t, &ScoreTriple::path_score),
                                  component(green_t, &ScoreTriple::path_score),
                                  component(cyan_t, &ScoreTriple::path_score));

    const ScoreNormalizer norm1 = fit_normalizer(train_t);
    auto [val_scores, val_labels] = pooled_scores(test_t, red_t, green_t, cyan_t);
    const GridSearchResult best1 =
        grid_search_alpha1(val_scores, val_labels, norm1, grid_step);
    report.hif1_alpha1 = best1.params.alpha1;
    report.hif1 = cluster_aucs(aggregate_all(test_t, norm1, best1.params),
                               aggregate_all(red_t, norm1, best1.params),
                               aggregate_all(green_t, norm1, best1.params),
                               aggregate_all(cyan_t, norm1, best1.params));

    // phase 2: insert labeled red anomalies, re-score, full grid search
    RandomStream rng_labeled = RandomStream::for_tree(config.seed, 5);
    const auto labeled_reds = sample_gaussian(n_labeled_red, kRedCluster.mean,
                                              kRedCluster.cov_diag, rng_labeled);
    for (const auto& x : labeled_reds) add_anomaly(forest, x, "red");
    finalize_anomaly_centroids(forest);

    train_t = raw_scores_batch(forest, data.train);
    test_t = raw_scores_batch(forest, data.test);
    red_t = raw_scores_batch(forest, data.red);
    green_t = raw_scores_batch(forest, data.green);
    cyan_t = raw_scores_batch(forest, data.cyan);

    const ScoreNormalizer norm2 = fit_normalizer(train_t);
    auto [val_scores2, val_labels2] = pooled_scores(test_t, red_t, green_t, cyan_t);
    const GridSearchResult best2 = grid_search(val_scores2, val_labels2, norm2, grid_step);
    report.hif2_params = best2.params;
    report.hif2 = cluster_aucs(aggregate_all(test_t, norm2, best2.params),
                               aggregate_all(red_t, norm2, best2.params),
                               aggregate_all(green_t, norm2, best2.params),
                               aggregate_all(cyan_t, norm2, best2.params));
    return report;
}

std::vector<double> run_contamination_sweep(const TorusConfig& config,
                                            const ForestParams& params,
                                            const std::vector<std::size_t>& counts,
                                            double grid_step) {
    const TorusData data = make_torus_dataset(config);
    std::vector<double> aucs;
    aucs.reserve(counts.size());

    for (std::size_t count : counts) {
        HybridForest forest = build_forest(data.train, params);
        RandomStream rng_labeled = RandomStream::for_tree(config.seed, 5);
        const auto labeled = sample_gaussian(count, kRedCluster.mean, kRedCluster.cov_diag,
                                             rng_labeled);
        for (const auto& x : labeled) add_anomaly(forest, x, "red");
        finalize_anomaly_centroids(forest);

        const auto train_t = raw_scores_batch(forest, data.train);
        const auto test_t = raw_scores_batch(forest, data.test);
        const auto red_t = raw_scores_batch(forest, data.red);

        std::vector<ScoreTriple> val(test_t.begin(), test_t.end());
        val.insert(val.end(), red_t.begin(), red_t.end());
        std::vector<bool> labels(test_t.size(), false);
        labels.resize(val.size(), true);

        const ScoreNormalizer norm = fit_normalizer(train_t);
        aucs.push_back(grid_search(val, labels, norm, grid_step).auc);
    }
    return aucs;
}

std::vector<OccupancyPoint> measure_leaf_occupancy(const std::vector<std::size_t>& psi_values,
                                                   const std::vector<double>& depth_factors,
                                                   std::size_t trees, std::uint64_t seed) {
    std::size_t max_psi = 2;
    for (std::size_t psi : psi_values) max_psi = std::max(max_psi, psi);

    RandomStream rng = RandomStream::for_tree(seed, 0);
    const auto train = sample_gaussian(2 * max_psi, {0.0, 0.0}, {3.0, 3.0}, rng);

    std::vector<OccupancyPoint> points;
    for (std::size_t psi : psi_values) {
        if (psi < 2) throw std::invalid_argument("psi must be >= 2");
        for (double factor : depth_factors) {
            ForestParams params;
            params.psi = psi;
            params.trees = trees;
            params.l_max = static_cast<int>(
                std::ceil(factor * std::log2(static_cast<double>(psi))));
            params.seed = seed;
            const HybridForest forest = build_forest(train, params);

            LeafStats stats;
            for (const auto& tree : forest.trees) walk_leaves(*tree, stats);
            points.push_back({psi, params.l_max,
                              static_cast<double>(stats.members) /
                                  static_cast<double>(stats.leaves)});
        }
    }
    return points;
}

}  // namespace hif

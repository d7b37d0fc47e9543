#include "hif/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hif {

namespace {

constexpr double kEulerGamma = 0.5772156649;

// splitmix64, used only to decorrelate per-tree seeds
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void check_dimension(const Instance& x, std::size_t dim) {
    if (x.size() != dim) {
        throw std::invalid_argument("instance dimensionality mismatch: got " +
                                    std::to_string(x.size()) + ", expected " +
                                    std::to_string(dim));
    }
}

Instance centroid_of(std::span<const Instance> points) {
    Instance mean(points.front().size(), 0.0);
    for (const auto& p : points) {
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p[i];
    }
    for (auto& v : mean) v /= static_cast<double>(points.size());
    return mean;
}

double euclidean(const Instance& a, const Instance& b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

std::unique_ptr<TreeNode> make_external(std::span<const Instance> sample) {
    auto node = std::make_unique<TreeNode>();
    node->size = sample.size();
    if (!sample.empty()) node->normal_centroid = centroid_of(sample);
    return node;
}

// Descends by the shared split rule; returns the leaf and the edge count.
std::pair<TreeNode*, int> route(TreeNode* node, const Instance& x) {
    int edges = 0;
    while (!node->is_external()) {
        node = x[static_cast<std::size_t>(node->split_dim)] < node->split_val
                   ? node->left.get()
                   : node->right.get();
        ++edges;
    }
    return {node, edges};
}

std::unique_ptr<TreeNode> build_single_tree(const std::vector<Instance>& train,
                                            std::size_t sample_size, int l_max,
                                            std::uint64_t seed, std::uint64_t tree_index) {
    RandomStream rng = RandomStream::for_tree(seed, tree_index);

    // partial Fisher-Yates draw without replacement
    std::vector<std::size_t> indices(train.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    for (std::size_t i = 0; i < sample_size; ++i) {
        const std::size_t j = i + rng.uniform_below(indices.size() - i);
        std::swap(indices[i], indices[j]);
    }
    std::vector<Instance> sample;
    sample.reserve(sample_size);
    for (std::size_t i = 0; i < sample_size; ++i) sample.push_back(train[indices[i]]);

    return build_tree(sample, 0, l_max, rng);
}

void finalize_node(TreeNode& node) {
    if (node.is_external()) {
        if (!node.anomaly_points.empty()) {
            node.anomaly_centroid = centroid_of(node.anomaly_points);
        }
        return;
    }
    finalize_node(*node.left);
    finalize_node(*node.right);
}

}  // namespace

RandomStream RandomStream::for_tree(std::uint64_t seed, std::uint64_t tree_index) {
    return RandomStream(mix64(seed ^ mix64(tree_index + 1)));
}

std::uint64_t RandomStream::uniform_below(std::uint64_t n) {
    // rejection sampling, unbiased
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

double average_path_length(std::size_t n) {
    if (n <= 1) return 0.0;
    const double m = static_cast<double>(n);
    const double harmonic = std::log(m - 1.0) + kEulerGamma;
    return 2.0 * harmonic - 2.0 * (m - 1.0) / m;
}

int default_depth_limit(std::size_t psi) {
    return static_cast<int>(std::ceil(1.1 * std::log2(static_cast<double>(psi))));
}

int classic_depth_limit(std::size_t psi) {
    return static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));
}

std::unique_ptr<TreeNode> build_tree(std::span<const Instance> sample, int depth,
                                     int l_max, RandomStream& rng) {
    if (depth >= l_max || sample.size() <= 1) return make_external(sample);

    const std::size_t dim = sample.front().size();
    for (const auto& p : sample) check_dimension(p, dim);

    const auto split_dim = static_cast<std::size_t>(rng.uniform_below(dim));
    double lo = sample.front()[split_dim];
    double hi = lo;
    for (const auto& p : sample) {
        lo = std::min(lo, p[split_dim]);
        hi = std::max(hi, p[split_dim]);
    }
    if (lo == hi) return make_external(sample);  // degenerate dimension, no re-draw

    const double split_val = lo + rng.uniform01() * (hi - lo);

    std::vector<Instance> lower, upper;
    for (const auto& p : sample) {
        (p[split_dim] < split_val ? lower : upper).push_back(p);
    }

    auto node = std::make_unique<TreeNode>();
    node->split_dim = static_cast<int>(split_dim);
    node->split_val = split_val;
    node->left = build_tree(lower, depth + 1, l_max, rng);
    node->right = build_tree(upper, depth + 1, l_max, rng);
    return node;
}

static HybridForest build_forest_impl(const std::vector<Instance>& train,
                                      const ForestParams& params, bool parallel) {
    if (train.size() < 2) throw std::invalid_argument("training set needs at least 2 instances");
    if (params.psi < 2) throw std::invalid_argument("psi must be >= 2");
    if (params.trees < 1) throw std::invalid_argument("tree count must be >= 1");
    const std::size_t dim = train.front().size();
    for (const auto& x : train) {
        check_dimension(x, dim);
        for (double v : x) {
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite training value");
        }
    }

    HybridForest forest;
    forest.psi = std::min(params.psi, train.size());
    forest.l_max = params.l_max > 0 ? params.l_max : default_depth_limit(forest.psi);
    forest.dim = dim;
    forest.seed = params.seed;
    forest.trees.resize(params.trees);

    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(params.trees); ++i) {
            forest.trees[static_cast<std::size_t>(i)] = build_single_tree(
                train, forest.psi, forest.l_max, params.seed, static_cast<std::uint64_t>(i));
        }
    } else {
        for (std::size_t i = 0; i < params.trees; ++i) {
            forest.trees[i] = build_single_tree(train, forest.psi, forest.l_max, params.seed, i);
        }
    }
    return forest;
}

HybridForest build_forest(const std::vector<Instance>& train, const ForestParams& params) {
    return build_forest_impl(train, params, true);
}

HybridForest build_forest_serial(const std::vector<Instance>& train, const ForestParams& params) {
    return build_forest_impl(train, params, false);
}

PathComponents path_components(const Instance& x, const TreeNode& tree) {
    auto [leaf, edges] = route(const_cast<TreeNode*>(&tree), x);
    PathComponents out;
    out.path_length = static_cast<double>(edges) + average_path_length(leaf->size);
    if (leaf->normal_centroid) {
        check_dimension(x, leaf->normal_centroid->size());
        out.delta = euclidean(x, *leaf->normal_centroid);
    }
    if (leaf->anomaly_centroid) out.delta_anomaly = euclidean(x, *leaf->anomaly_centroid);
    return out;
}

void add_anomaly(HybridForest& forest, const Instance& x, const std::string& label) {
    if (forest.anomalies_finalized) {
        throw std::logic_error("cannot add anomalies after centroid finalization");
    }
    check_dimension(x, forest.dim);
    for (auto& tree : forest.trees) {
        auto [leaf, edges] = route(tree.get(), x);
        leaf->anomaly_points.push_back(x);
        leaf->anomaly_labels.push_back(label);
    }
}

void finalize_anomaly_centroids(HybridForest& forest) {
    for (auto& tree : forest.trees) finalize_node(*tree);
    forest.anomalies_finalized = true;
}

ScoreTriple raw_scores(const HybridForest& forest, const Instance& x) {
    check_dimension(x, forest.dim);

    double h_sum = 0.0;
    double delta_sum = 0.0;
    std::size_t delta_count = 0;
    double ratio_num = 0.0;
    double ratio_den = 0.0;
    std::size_t ratio_count = 0;

    for (const auto& tree : forest.trees) {
        const PathComponents pc = path_components(x, *tree);
        h_sum += pc.path_length;
        if (pc.delta) {
            delta_sum += *pc.delta;
            ++delta_count;
        }
        if (pc.delta_anomaly && pc.delta) {
            ratio_num += *pc.delta;
            ratio_den += *pc.delta_anomaly;
            ++ratio_count;
        }
    }

    ScoreTriple s;
    s.mean_path_length = h_sum / static_cast<double>(forest.trees.size());
    s.path_score = std::exp2(-s.mean_path_length / average_path_length(forest.psi));
    s.centroid_score = delta_count > 0 ? delta_sum / static_cast<double>(delta_count) : 0.0;
    s.anomaly_ratio_score =
        (ratio_count > 0 && ratio_den > 0.0) ? ratio_num / ratio_den : 0.0;
    return s;
}

std::vector<ScoreTriple> raw_scores_batch(const HybridForest& forest,
                                          std::span<const Instance> xs) {
    std::vector<ScoreTriple> out(xs.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(xs.size()); ++i) {
        out[static_cast<std::size_t>(i)] = raw_scores(forest, xs[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<ScoreTriple> raw_scores_batch_serial(const HybridForest& forest,
                                                 std::span<const Instance> xs) {
    std::vector<ScoreTriple> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = raw_scores(forest, xs[i]);
    return out;
}

}  // namespace hif

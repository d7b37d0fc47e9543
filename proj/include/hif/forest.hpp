#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hif {

using Instance = std::vector<double>;

/// Deterministic per-stream RNG. Streams derived from (seed, index) are
/// independent, so trees can be built in any order or in parallel and
/// still come out bit-identical.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    static RandomStream for_tree(std::uint64_t seed, std::uint64_t tree_index);

    // uniform in [0,1), 53-bit resolution
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    std::uint64_t uniform_below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

struct TreeNode {
    // internal fields; left == nullptr marks an external node
    int split_dim = -1;
    double split_val = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;

    // external fields
    std::size_t size = 0;
    std::optional<Instance> normal_centroid;
    std::vector<Instance> anomaly_points;
    std::vector<std::string> anomaly_labels;
    std::optional<Instance> anomaly_centroid;

    bool is_external() const { return left == nullptr; }
};

struct ForestParams {
    std::size_t psi = 256;
    std::size_t trees = 100;
    int l_max = -1;  // -1: use default_depth_limit(psi)
    std::uint64_t seed = 0;
};

struct HybridForest {
    std::vector<std::unique_ptr<TreeNode>> trees;
    std::size_t psi = 0;  // effective subsample size, min(requested psi, |train|)
    int l_max = 0;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    bool anomalies_finalized = false;
};

/// Raw per-instance score components, before normalization.
struct ScoreTriple {
    double path_score = 0.0;
    double centroid_score = 0.0;
    double anomaly_ratio_score = 0.0;
    double mean_path_length = 0.0;
};

struct PathComponents {
    double path_length = 0.0;             // e + c(leaf size)
    std::optional<double> delta;          // distance to normal centroid
    std::optional<double> delta_anomaly;  // distance to anomaly centroid
};

/// c(n): average path length of unsuccessful BST search, ln-based
/// harmonic estimate. Zero for n <= 1.
double average_path_length(std::size_t n);

/// Depth cap ceil(1.1 * log2(psi)). The classic ceil(log2(psi)) is
/// available via classic_depth_limit for pure-IF runs.
int default_depth_limit(std::size_t psi);
int classic_depth_limit(std::size_t psi);

std::unique_ptr<TreeNode> build_tree(std::span<const Instance> sample, int depth,
                                     int l_max, RandomStream& rng);

/// OpenMP-parallel forest construction; one derived random stream per tree.
HybridForest build_forest(const std::vector<Instance>& train, const ForestParams& params);

/// Serial reference, bit-identical to build_forest for the same inputs.
HybridForest build_forest_serial(const std::vector<Instance>& train, const ForestParams& params);

PathComponents path_components(const Instance& x, const TreeNode& tree);

/// Routes x to one leaf per tree and attaches it there with its label.
/// Rejected once finalize_anomaly_centroids has run.
void add_anomaly(HybridForest& forest, const Instance& x, const std::string& label);

/// Computes anomaly centroids on every leaf holding anomalies and locks
/// the forest against further insertion. Idempotent.
void finalize_anomaly_centroids(HybridForest& forest);

ScoreTriple raw_scores(const HybridForest& forest, const Instance& x);

/// OpenMP-parallel batch scoring; element i equals raw_scores(forest, xs[i]).
std::vector<ScoreTriple> raw_scores_batch(const HybridForest& forest,
                                          std::span<const Instance> xs);

std::vector<ScoreTriple> raw_scores_batch_serial(const HybridForest& forest,
                                                 std::span<const Instance> xs);

}  // namespace hif

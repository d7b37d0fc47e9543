#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hif/forest.hpp"
#include "hif/scoring.hpp"

namespace hif {

/// The annulus benchmark: area-uniform normal data between two circles,
/// with three Gaussian anomaly clusters (one overlapping the rim, one in
/// the central hole, one outside).
struct TorusConfig {
    std::size_t n_train = 1000;
    std::size_t n_test = 1000;
    std::size_t n_per_cluster = 1000;
    double r_inner = 1.5;
    double r_outer = 4.0;
    std::uint64_t seed = 1;
};

struct ClusterSpec {
    std::array<double, 2> mean;
    std::array<double, 2> cov_diag;
};

inline constexpr ClusterSpec kRedCluster{{3.0, 3.0}, {0.25, 0.25}};
inline constexpr ClusterSpec kGreenCluster{{0.0, 0.0}, {0.5, 0.5}};
inline constexpr ClusterSpec kCyanCluster{{-3.0, -3.0}, {0.25, 0.25}};

std::vector<Instance> sample_annulus(std::size_t n, double r_inner, double r_outer,
                                     RandomStream& rng);

std::vector<Instance> sample_gaussian(std::size_t n, const std::array<double, 2>& mean,
                                      const std::array<double, 2>& cov_diag,
                                      RandomStream& rng);

struct TorusData {
    std::vector<Instance> train;
    std::vector<Instance> test;  // held-out normals
    std::vector<Instance> red;
    std::vector<Instance> green;
    std::vector<Instance> cyan;
};

TorusData make_torus_dataset(const TorusConfig& config);

struct DetectorAuc {
    double red = 0.0;
    double green = 0.0;
    double cyan = 0.0;
    double pooled = 0.0;
};

struct BlindSpotReport {
    DetectorAuc iforest;
    DetectorAuc hif1;
    DetectorAuc hif2;
    double hif1_alpha1 = 0.0;
    AggregationParams hif2_params;
};

/// Trains IF/HIF1/HIF2 on the annulus normals and reports per-cluster and
/// pooled AUCs. HIF2 gets n_labeled_red fresh red draws inserted as
/// labeled anomalies, then a full (alpha1, alpha2) grid search.
BlindSpotReport run_blind_spot_experiment(const TorusConfig& config,
                                          const ForestParams& params,
                                          std::size_t n_labeled_red = 5,
                                          double grid_step = 0.05);

/// Red-vs-normal AUC after inserting `count` labeled red anomalies and
/// re-optimizing the aggregation weights, one entry per requested count.
std::vector<double> run_contamination_sweep(const TorusConfig& config,
                                            const ForestParams& params,
                                            const std::vector<std::size_t>& counts,
                                            double grid_step = 0.05);

struct OccupancyPoint {
    std::size_t psi = 0;
    int l_max = 0;
    double mean_bucket_size = 0.0;
};

/// Mean external-node size on a Gaussian dataset, per (psi, depth rule).
/// depth_factors scale log2(psi) before the ceiling, e.g. {1.0, 1.1, 1.2}.
std::vector<OccupancyPoint> measure_leaf_occupancy(const std::vector<std::size_t>& psi_values,
                                                   const std::vector<double>& depth_factors,
                                                   std::size_t trees, std::uint64_t seed);

}  // namespace hif

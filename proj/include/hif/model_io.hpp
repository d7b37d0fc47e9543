#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hif/flow.hpp"
#include "hif/forest.hpp"
#include "hif/scoring.hpp"

namespace hif {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to reload a fitted detector: forest, score
/// normalizer, aggregation weights, and optionally the flow codebook.
struct ModelArtifact {
    int format_version = kModelFormatVersion;
    HybridForest forest;
    std::optional<ScoreNormalizer> normalizer;
    AggregationParams params;
    std::optional<flow::Codebook> codebook;
};

/// Versioned line-oriented text format; identical inputs produce
/// byte-identical output.
void save_model(std::ostream& out, const ModelArtifact& model);
ModelArtifact load_model(std::istream& in);

void save_model_file(const std::string& path, const ModelArtifact& model);
ModelArtifact load_model_file(const std::string& path);

/// Header-bearing delimited numeric dataset with an optional trailing
/// label column of opaque strings.
struct Dataset {
    std::vector<Instance> instances;
    std::vector<std::string> labels;  // empty when the file has no label column
};

Dataset read_dataset(std::istream& in);
Dataset read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const std::vector<Instance>& instances,
                   const std::vector<std::string>* labels = nullptr);

/// "normal", "0" and empty mean negative; anything else is an anomaly.
bool label_is_anomaly(const std::string& label);

}  // namespace hif

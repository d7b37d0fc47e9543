#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hif/flow.hpp"
#include "hif/forest.hpp"
#include "hif/metrics.hpp"
#include "hif/model_io.hpp"
#include "hif/scoring.hpp"
#include "hif/synthetic.hpp"

namespace {

using namespace hif;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

double mean_leaf_size(const HybridForest& forest) {
    std::size_t leaves = 0;
    std::size_t members = 0;
    auto walk = [&](auto&& self, const TreeNode& node) -> void {
        if (node.is_external()) {
            ++leaves;
            members += node.size;
            return;
        }
        self(self, *node.left);
        self(self, *node.right);
    };
    for (const auto& tree : forest.trees) walk(walk, *tree);
    return static_cast<double>(members) / static_cast<double>(leaves);
}

int cmd_fit(const std::string& train_path, const std::string& model_path, std::size_t psi,
            std::size_t trees, int l_max, std::uint64_t seed) {
    const Dataset train = read_dataset_file(train_path);
    if (train.instances.empty()) throw std::runtime_error("training file has no rows");

    ForestParams params;
    params.psi = psi;
    params.trees = trees;
    params.l_max = l_max;
    params.seed = seed;

    ModelArtifact model;
    model.forest = build_forest(train.instances, params);
    model.normalizer = fit_normalizer(model.forest, train.instances);
    save_model_file(model_path, model);

    std::printf("fitted %zu trees (psi=%zu, lmax=%d, dim=%zu), mean leaf size %.3f\n",
                model.forest.trees.size(), model.forest.psi, model.forest.l_max,
                model.forest.dim, mean_leaf_size(model.forest));
    return 0;
}

int cmd_add_anomalies(const std::string& model_path, const std::string& anomaly_path,
                      const std::string& out_path, const std::string& refit_path) {
    ModelArtifact model = load_model_file(model_path);
    const Dataset anomalies = read_dataset_file(anomaly_path);

    model.forest.anomalies_finalized = false;  // models are re-openable for insertion
    for (std::size_t i = 0; i < anomalies.instances.size(); ++i) {
        const std::string label =
            i < anomalies.labels.size() && !anomalies.labels[i].empty() ? anomalies.labels[i]
                                                                        : "anomaly";
        add_anomaly(model.forest, anomalies.instances[i], label);
    }
    finalize_anomaly_centroids(model.forest);

    if (!refit_path.empty()) {
        const Dataset train = read_dataset_file(refit_path);
        model.normalizer = fit_normalizer(model.forest, train.instances);
    }

    save_model_file(out_path.empty() ? model_path : out_path, model);
    std::printf("inserted %zu anomalies into %zu trees\n", anomalies.instances.size(),
                model.forest.trees.size());
    return 0;
}

int cmd_score(const std::string& model_path, const std::string& data_path,
              const std::string& out_path, double alpha1, double alpha2) {
    const ModelArtifact model = load_model_file(model_path);
    if (!model.normalizer) throw std::runtime_error("model carries no score normalizer");
    const Dataset data = read_dataset_file(data_path);
    const AggregationParams params{alpha1, alpha2};

    const auto triples = raw_scores_batch(model.forest, data.instances);

    auto out = open_out(out_path);
    out << "score,path_score,centroid_score,anomaly_ratio_score,mean_path_length";
    const bool has_labels = !data.labels.empty();
    if (has_labels) out << ",label";
    out << '\n';
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const double s = aggregate(normalize(*model.normalizer, triples[i]), params);
        out << fmt(s) << ',' << fmt(triples[i].path_score) << ','
            << fmt(triples[i].centroid_score) << ',' << fmt(triples[i].anomaly_ratio_score)
            << ',' << fmt(triples[i].mean_path_length);
        if (has_labels) out << ',' << data.labels[i];
        out << '\n';
    }
    std::printf("scored %zu instances (alpha1=%.3f, alpha2=%.3f)\n", triples.size(), alpha1,
                alpha2);
    return 0;
}

int cmd_eval(const std::string& scores_path, const std::string& roc_path,
             const std::string& hist_path, std::size_t bins) {
    std::ifstream in(scores_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + scores_path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty scores file");
    std::size_t score_col = std::string::npos, label_col = std::string::npos;
    {
        std::size_t col = 0, start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string name = line.substr(start, comma - start);
            if (name == "score") score_col = col;
            if (name == "label") label_col = col;
            if (comma == std::string::npos) break;
            start = comma + 1;
            ++col;
        }
    }
    if (score_col == std::string::npos || label_col == std::string::npos) {
        throw std::runtime_error("scores file needs 'score' and 'label' columns");
    }

    std::vector<LabeledScore> samples;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t col = 0, start = 0;
        LabeledScore s;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string field = line.substr(start, comma == std::string::npos
                                                             ? std::string::npos
                                                             : comma - start);
            if (col == score_col) s.score = std::stod(field);
            if (col == label_col) s.anomaly = label_is_anomaly(field);
            if (comma == std::string::npos) break;
            start = comma + 1;
            ++col;
        }
        samples.push_back(s);
    }

    const RocCurve curve = roc_auc(samples);
    std::printf("AUC %.4f over %zu samples\n", curve.auc, samples.size());

    if (!roc_path.empty()) {
        auto out = open_out(roc_path);
        for (const auto& [fpr, tpr] : curve.points) out << fpr << '\t' << tpr << '\n';
    }
    if (!hist_path.empty()) {
        const Histogram h = score_histogram(samples, bins);
        auto out = open_out(hist_path);
        const double width = (h.hi - h.lo) / static_cast<double>(bins);
        for (std::size_t b = 0; b < bins; ++b) {
            out << h.lo + width * static_cast<double>(b) << '\t' << h.normal[b] << '\t'
                << h.anomaly[b] << '\n';
        }
    }
    return 0;
}

int cmd_gridsearch(const std::string& model_path, const std::string& data_path,
                   double grid_step, const std::string& out_path) {
    ModelArtifact model = load_model_file(model_path);
    if (!model.normalizer) throw std::runtime_error("model carries no score normalizer");
    const Dataset data = read_dataset_file(data_path);
    if (data.labels.size() != data.instances.size()) {
        throw std::runtime_error("grid search needs a labeled dataset");
    }
    std::vector<bool> labels(data.labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = label_is_anomaly(data.labels[i]);

    const GridSearchResult best = grid_search(model.forest, *model.normalizer, data.instances,
                                              labels, grid_step);
    std::printf("best alpha1=%.4f alpha2=%.4f AUC=%.4f (%zu evaluations)\n",
                best.params.alpha1, best.params.alpha2, best.auc, best.evaluations);

    if (!out_path.empty()) {
        model.params = best.params;
        save_model_file(out_path, model);
    }
    return 0;
}

int cmd_synth(const std::string& out_dir, std::size_t n_train, std::size_t n_test,
              std::size_t n_cluster, std::uint64_t seed) {
    TorusConfig config;
    config.n_train = n_train;
    config.n_test = n_test;
    config.n_per_cluster = n_cluster;
    config.seed = seed;
    const TorusData data = make_torus_dataset(config);

    std::filesystem::create_directories(out_dir);
    auto dump = [&](const std::string& name, const std::vector<Instance>& points,
                    const char* label) {
        auto out = open_out(out_dir + "/" + name);
        if (label) {
            const std::vector<std::string> labels(points.size(), label);
            write_dataset(out, points, &labels);
        } else {
            write_dataset(out, points);
        }
    };
    dump("train.csv", data.train, nullptr);
    dump("test.csv", data.test, "normal");
    dump("red.csv", data.red, "red");
    dump("green.csv", data.green, "green");
    dump("cyan.csv", data.cyan, "cyan");
    std::printf("wrote %zu train, %zu test, 3x%zu cluster rows to %s\n", n_train, n_test,
                n_cluster, out_dir.c_str());
    return 0;
}

int cmd_flows(const std::string& flow_path, const std::string& out_dir,
              std::size_t window_size, bool strict) {
    std::ifstream in(flow_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + flow_path + "'");
    std::vector<flow::ParseIssue> issues;
    const auto records = flow::parse_flows(in, strict, &issues);
    for (const auto& issue : issues) {
        std::fprintf(stderr, "warning: line %zu skipped: %s\n", issue.line,
                     issue.message.c_str());
    }

    std::filesystem::create_directories(out_dir);
    for (const auto& [layer, layer_records] : flow::split_by_app_layer(records)) {
        flow::Codebook codebook;
        codebook.window_size = window_size;
        const auto features = flow::encode_dataset(layer_records, codebook);

        auto out = open_out(out_dir + "/features_" + layer + ".csv");
        for (std::size_t f = 0; f < flow::kFeatureCount; ++f) {
            if (f) out << ',';
            out << 'f' << f;
        }
        const bool labeled = !layer_records.empty() && layer_records.front().label.has_value();
        if (labeled) out << ",label";
        out << '\n';
        char buf[64];
        for (std::size_t i = 0; i < features.size(); ++i) {
            for (std::size_t f = 0; f < flow::kFeatureCount; ++f) {
                if (f) out << ',';
                std::snprintf(buf, sizeof buf, "%.17g", features[i][f]);
                out << buf;
            }
            if (labeled) {
                out << ','
                    << (layer_records[i].label.value_or(false) ? "attack" : "normal");
            }
            out << '\n';
        }
        std::printf("%s: %zu flows encoded\n", layer.c_str(), features.size());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid isolation forest anomaly detection toolkit"};
    app.require_subcommand(1);

    std::string train_path, model_path, data_path, out_path, refit_path, roc_path, hist_path;
    std::size_t psi = 256, trees = 100, window_size = 100, bins = 50;
    std::size_t n_train = 1000, n_test = 1000, n_cluster = 1000;
    int l_max = -1;
    std::uint64_t seed = 0;
    double alpha1 = 1.0, alpha2 = 1.0, grid_step = 0.05;
    bool strict = false;

    auto* fit = app.add_subcommand("fit", "Build a forest from a numeric dataset");
    fit->add_option("train", train_path, "training dataset")->required();
    fit->add_option("-o,--out", model_path, "output model file")->required();
    fit->add_option("--psi", psi, "subsample size per tree");
    fit->add_option("--trees", trees, "number of trees");
    fit->add_option("--lmax", l_max, "depth cap (-1: ceil(1.1*log2 psi))");
    fit->add_option("--seed", seed, "random seed");

    auto* add = app.add_subcommand("add-anomalies", "Insert labeled anomalies into a model");
    add->add_option("model", model_path, "model file")->required();
    add->add_option("anomalies", data_path, "labeled anomaly dataset")->required();
    add->add_option("-o,--out", out_path, "output model (default: in place)");
    add->add_option("--refit", refit_path, "refit the score normalizer on this training file");

    auto* score = app.add_subcommand("score", "Score a dataset with a fitted model");
    score->add_option("model", model_path, "model file")->required();
    score->add_option("data", data_path, "dataset to score")->required();
    score->add_option("-o,--out", out_path, "output scores file")->required();
    score->add_option("--alpha1", alpha1, "path-vs-centroid weight");
    score->add_option("--alpha2", alpha2, "unsupervised-vs-supervised weight");

    auto* eval = app.add_subcommand("eval", "ROC/AUC report from a labeled scores file");
    eval->add_option("scores", data_path, "scores file with label column")->required();
    eval->add_option("--roc-out", roc_path, "write ROC points here");
    eval->add_option("--hist-out", hist_path, "write score histogram here");
    eval->add_option("--bins", bins, "histogram bin count");

    auto* grid = app.add_subcommand("gridsearch", "Optimize alpha1/alpha2 on labeled data");
    grid->add_option("model", model_path, "model file")->required();
    grid->add_option("data", data_path, "labeled validation dataset")->required();
    grid->add_option("--grid-step", grid_step, "lattice step in (0, 0.5]");
    grid->add_option("-o,--out", out_path, "write model with best weights here");

    auto* synth = app.add_subcommand("synth", "Generate the annulus benchmark dataset");
    synth->add_option("-o,--out-dir", out_path, "output directory")->required();
    synth->add_option("--n-train", n_train, "training normals");
    synth->add_option("--n-test", n_test, "held-out normals");
    synth->add_option("--n-cluster", n_cluster, "points per anomaly cluster");
    synth->add_option("--seed", seed, "random seed");

    auto* flows = app.add_subcommand("flows", "Encode network flows into feature files");
    flows->add_option("flows", data_path, "flow file")->required();
    flows->add_option("-o,--out-dir", out_path, "output directory")->required();
    flows->add_option("--window-size", window_size, "IP-pair counting window");
    flows->add_flag("--strict", strict, "abort on the first malformed line");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return cmd_fit(train_path, model_path, psi, trees, l_max, seed);
        if (add->parsed()) return cmd_add_anomalies(model_path, data_path, out_path, refit_path);
        if (score->parsed()) return cmd_score(model_path, data_path, out_path, alpha1, alpha2);
        if (eval->parsed()) return cmd_eval(data_path, roc_path, hist_path, bins);
        if (grid->parsed()) return cmd_gridsearch(model_path, data_path, grid_step, out_path);
        if (synth->parsed()) return cmd_synth(out_path, n_train, n_test, n_cluster, seed);
        if (flows->parsed()) return cmd_flows(data_path, out_path, window_size, strict);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

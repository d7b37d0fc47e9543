#include "hif/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hif {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_node(std::ostream& out, const TreeNode& node) {
    if (!node.is_external()) {
        out << "I " << node.split_dim << ' ' << fmt(node.split_val) << '\n';
        write_node(out, *node.left);
        write_node(out, *node.right);
        return;
    }
    out << "E " << node.size << ' ' << (node.normal_centroid ? 1 : 0);
    if (node.normal_centroid) {
        for (double v : *node.normal_centroid) out << ' ' << fmt(v);
    }
    out << ' ' << node.anomaly_points.size() << '\n';
    for (std::size_t i = 0; i < node.anomaly_points.size(); ++i) {
        out << "A " << node.anomaly_labels[i];
        for (double v : node.anomaly_points[i]) out << ' ' << fmt(v);
        out << '\n';
    }
}

struct LineReader {
    std::istream& in;
    std::size_t line_no = 0;

    std::string next() {
        std::string line;
        if (!std::getline(in, line)) {
            throw std::invalid_argument("model file truncated at line " +
                                        std::to_string(line_no));
        }
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    [[noreturn]] void fail(const std::string& what) {
        throw std::invalid_argument("model file line " + std::to_string(line_no) + ": " + what);
    }
};

std::unique_ptr<TreeNode> read_node(LineReader& reader, std::size_t dim) {
    std::istringstream ls(reader.next());
    std::string kind;
    ls >> kind;
    auto node = std::make_unique<TreeNode>();
    if (kind == "I") {
        if (!(ls >> node->split_dim >> node->split_val)) reader.fail("bad internal node");
        node->left = read_node(reader, dim);
        node->right = read_node(reader, dim);
        return node;
    }
    if (kind != "E") reader.fail("expected node record, got '" + kind + "'");

    int has_centroid = 0;
    if (!(ls >> node->size >> has_centroid)) reader.fail("bad external node");
    if (has_centroid) {
        Instance c(dim);
        for (double& v : c) {
            if (!(ls >> v)) reader.fail("truncated centroid");
        }
        node->normal_centroid = std::move(c);
    }
    std::size_t n_anomalies = 0;
    if (!(ls >> n_anomalies)) reader.fail("missing anomaly count");
    for (std::size_t i = 0; i < n_anomalies; ++i) {
        std::istringstream as(reader.next());
        std::string tag, label;
        if (!(as >> tag >> label) || tag != "A") reader.fail("expected anomaly record");
        Instance x(dim);
        for (double& v : x) {
            if (!(as >> v)) reader.fail("truncated anomaly point");
        }
        node->anomaly_labels.push_back(std::move(label));
        node->anomaly_points.push_back(std::move(x));
    }
    return node;
}

void write_codebook(std::ostream& out, const flow::Codebook& cb) {
    out << "codebook\n";
    out << "window_size " << cb.window_size << '\n';
    out << "protocols " << cb.protocol_map().size() << '\n';
    for (const auto& [name, slot] : cb.protocol_map()) out << name << ' ' << slot << '\n';
    out << "directions " << cb.direction_map().size() << '\n';
    for (const auto& [name, slot] : cb.direction_map()) out << name << ' ' << slot << '\n';
    out << "minmax " << (cb.minmax_fitted() ? 1 : 0) << '\n';
    if (cb.minmax_fitted()) {
        for (const auto& [lo, hi] : cb.feature_ranges()) {
            out << fmt(lo) << ' ' << fmt(hi) << '\n';
        }
    }
    out << "end_codebook\n";
}

flow::Codebook read_codebook(LineReader& reader) {
    flow::Codebook cb;
    std::map<std::string, std::size_t> protocols, directions;
    std::string key;
    std::size_t count = 0;

    auto expect = [&](const std::string& line, const char* what) {
        std::istringstream ls(line);
        if (!(ls >> key >> count) || key != what) reader.fail(std::string("expected ") + what);
    };

    expect(reader.next(), "window_size");
    cb.window_size = count;
    expect(reader.next(), "protocols");
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream ls(reader.next());
        std::string name;
        std::size_t slot;
        if (!(ls >> name >> slot)) reader.fail("bad protocol entry");
        protocols[name] = slot;
    }
    cb.set_protocol_map(std::move(protocols));
    expect(reader.next(), "directions");
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream ls(reader.next());
        std::string name;
        std::size_t slot;
        if (!(ls >> name >> slot)) reader.fail("bad direction entry");
        directions[name] = slot;
    }
    cb.set_direction_map(std::move(directions));
    expect(reader.next(), "minmax");
    if (count) {
        std::array<std::pair<double, double>, flow::kFeatureCount> ranges;
        for (auto& [lo, hi] : ranges) {
            std::istringstream ls(reader.next());
            if (!(ls >> lo >> hi)) reader.fail("bad feature range");
        }
        cb.set_feature_ranges(ranges);
    }
    if (reader.next() != "end_codebook") reader.fail("unterminated codebook");
    cb.freeze();
    return cb;
}

}  // namespace

void save_model(std::ostream& out, const ModelArtifact& model) {
    const HybridForest& f = model.forest;
    out << "hif-model " << model.format_version << '\n';
    out << "psi " << f.psi << '\n';
    out << "trees " << f.trees.size() << '\n';
    out << "lmax " << f.l_max << '\n';
    out << "dim " << f.dim << '\n';
    out << "seed " << f.seed << '\n';
    out << "finalized " << (f.anomalies_finalized ? 1 : 0) << '\n';
    if (model.normalizer) {
        const auto& n = *model.normalizer;
        out << "normalizer " << fmt(n.path.min) << ' ' << fmt(n.path.max) << ' '
            << fmt(n.centroid.min) << ' ' << fmt(n.centroid.max) << ' '
            << fmt(n.anomaly_ratio.min) << ' ' << fmt(n.anomaly_ratio.max) << '\n';
    } else {
        out << "normalizer none\n";
    }
    out << "alpha " << fmt(model.params.alpha1) << ' ' << fmt(model.params.alpha2) << '\n';
    if (model.codebook) write_codebook(out, *model.codebook);
    for (std::size_t i = 0; i < f.trees.size(); ++i) {
        out << "tree " << i << '\n';
        write_node(out, *f.trees[i]);
    }
    out << "end\n";
}

ModelArtifact load_model(std::istream& in) {
    LineReader reader{in};
    ModelArtifact model;

    {
        std::istringstream ls(reader.next());
        std::string magic;
        if (!(ls >> magic >> model.format_version) || magic != "hif-model") {
            reader.fail("not a model file");
        }
        if (model.format_version > kModelFormatVersion) {
            reader.fail("format version " + std::to_string(model.format_version) +
                        " is newer than supported version " +
                        std::to_string(kModelFormatVersion));
        }
    }

    HybridForest& f = model.forest;
    std::size_t n_trees = 0;
    int finalized = 0;
    auto scalar = [&](const char* name, auto& value) {
        std::istringstream ls(reader.next());
        std::string key;
        if (!(ls >> key >> value) || key != name) {
            reader.fail(std::string("expected '") + name + "' field");
        }
    };
    scalar("psi", f.psi);
    scalar("trees", n_trees);
    scalar("lmax", f.l_max);
    scalar("dim", f.dim);
    scalar("seed", f.seed);
    scalar("finalized", finalized);

    {
        std::istringstream ls(reader.next());
        std::string key, first;
        if (!(ls >> key >> first) || key != "normalizer") reader.fail("expected normalizer");
        if (first != "none") {
            ScoreNormalizer n;
            n.path.min = std::stod(first);
            if (!(ls >> n.path.max >> n.centroid.min >> n.centroid.max >>
                  n.anomaly_ratio.min >> n.anomaly_ratio.max)) {
                reader.fail("bad normalizer record");
            }
            model.normalizer = n;
        }
    }
    {
        std::istringstream ls(reader.next());
        std::string key;
        if (!(ls >> key >> model.params.alpha1 >> model.params.alpha2) || key != "alpha") {
            reader.fail("expected alpha record");
        }
    }

    std::string line = reader.next();
    if (line == "codebook") {
        model.codebook = read_codebook(reader);
        line = reader.next();
    }

    for (std::size_t i = 0; i < n_trees; ++i) {
        std::istringstream ls(line);
        std::string key;
        std::size_t index = 0;
        if (!(ls >> key >> index) || key != "tree" || index != i) {
            reader.fail("expected tree " + std::to_string(i));
        }
        f.trees.push_back(read_node(reader, f.dim));
        if (i + 1 < n_trees) line = reader.next();
    }
    if (reader.next() != "end") reader.fail("missing end marker");

    // anomaly centroids are derived data; rebuild them from the stored points
    if (finalized) finalize_anomaly_centroids(f);
    return model;
}

void save_model_file(const std::string& path, const ModelArtifact& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_model(out, model);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

ModelArtifact load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_model(in);
}

Dataset read_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty dataset, header expected");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            header.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    const bool has_label = !header.empty() && header.back() == "label";
    const std::size_t dim = header.size() - (has_label ? 1 : 0);
    if (dim == 0) throw std::invalid_argument("dataset has no feature columns");

    Dataset ds;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        Instance x;
        x.reserve(dim);
        std::size_t start = 0;
        for (std::size_t c = 0; c < header.size(); ++c) {
            const std::size_t comma = line.find(',', start);
            const std::string field = line.substr(start, comma == std::string::npos
                                                             ? std::string::npos
                                                             : comma - start);
            if (c < dim) {
                try {
                    std::size_t used = 0;
                    x.push_back(std::stod(field, &used));
                    if (used != field.size()) throw std::invalid_argument("");
                } catch (const std::exception&) {
                    throw std::invalid_argument("line " + std::to_string(line_no) +
                                                ": malformed value '" + field + "'");
                }
            } else {
                ds.labels.push_back(field);
            }
            if (comma == std::string::npos) {
                if (c + 1 < header.size()) {
                    throw std::invalid_argument("line " + std::to_string(line_no) +
                                                ": too few fields");
                }
                break;
            }
            start = comma + 1;
        }
        if (x.size() != dim) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(dim) + " features");
        }
        ds.instances.push_back(std::move(x));
    }
    return ds;
}

Dataset read_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<Instance>& instances,
                   const std::vector<std::string>* labels) {
    const std::size_t dim = instances.empty() ? 0 : instances.front().size();
    for (std::size_t i = 0; i < dim; ++i) {
        if (i) out << ',';
        out << 'f' << i;
    }
    if (labels) out << ",label";
    out << '\n';
    for (std::size_t r = 0; r < instances.size(); ++r) {
        for (std::size_t i = 0; i < dim; ++i) {
            if (i) out << ',';
            out << fmt(instances[r][i]);
        }
        if (labels) out << ',' << (*labels)[r];
        out << '\n';
    }
}

bool label_is_anomaly(const std::string& label) {
    return !label.empty() && label != "normal" && label != "0";
}

}  // namespace hif

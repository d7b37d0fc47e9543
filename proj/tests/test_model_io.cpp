#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "hif/model_io.hpp"
#include "hif/synthetic.hpp"

using namespace hif;

namespace {

ModelArtifact make_model(std::uint64_t seed, bool with_anomalies) {
    RandomStream rng = RandomStream::for_tree(seed, 0);
    const auto train = sample_annulus(400, 1.5, 4.0, rng);

    ForestParams params;
    params.psi = 64;
    params.trees = 32;
    params.seed = seed;

    ModelArtifact model;
    model.forest = build_forest(train, params);
    if (with_anomalies) {
        const auto reds = sample_gaussian(5, kRedCluster.mean, kRedCluster.cov_diag, rng);
        for (const auto& x : reds) add_anomaly(model.forest, x, "red");
        finalize_anomaly_centroids(model.forest);
    }
    model.normalizer = fit_normalizer(model.forest, train);
    model.params = {0.2, 0.7};
    return model;
}

std::string to_text(const ModelArtifact& model) {
    std::ostringstream out;
    save_model(out, model);
    return out.str();
}

}  // namespace

TEST_CASE("model round trip preserves scores on a probe set") {
    const ModelArtifact model = make_model(3, true);
    std::istringstream in(to_text(model));
    const ModelArtifact loaded = load_model(in);

    CHECK(loaded.forest.psi == model.forest.psi);
    CHECK(loaded.forest.l_max == model.forest.l_max);
    CHECK(loaded.forest.anomalies_finalized);
    CHECK(loaded.params.alpha1 == model.params.alpha1);

    RandomStream rng = RandomStream::for_tree(3, 9);
    const auto probes = sample_annulus(100, 0.0, 6.0, rng);
    for (const auto& x : probes) {
        const ScoreTriple a = raw_scores(model.forest, x);
        const ScoreTriple b = raw_scores(loaded.forest, x);
        CHECK(a.path_score == doctest::Approx(b.path_score).epsilon(1e-12));
        CHECK(a.centroid_score == doctest::Approx(b.centroid_score).epsilon(1e-12));
        CHECK(a.anomaly_ratio_score == doctest::Approx(b.anomaly_ratio_score).epsilon(1e-12));
    }
}

TEST_CASE("save-load-save is byte identical") {
    const ModelArtifact model = make_model(5, true);
    const std::string first = to_text(model);
    std::istringstream in(first);
    const ModelArtifact loaded = load_model(in);
    CHECK(to_text(loaded) == first);
}

TEST_CASE("identical builds serialize identically") {
    CHECK(to_text(make_model(11, false)) == to_text(make_model(11, false)));
}

TEST_CASE("newer format version is rejected") {
    ModelArtifact model = make_model(7, false);
    model.format_version = kModelFormatVersion + 1;
    std::istringstream in(to_text(model));
    CHECK_THROWS_WITH_AS(load_model(in), doctest::Contains("newer"), std::invalid_argument);
}

TEST_CASE("garbage input is rejected") {
    std::istringstream in("not a model\n");
    CHECK_THROWS_AS(load_model(in), std::invalid_argument);
    std::istringstream truncated("hif-model 1\npsi 64\n");
    CHECK_THROWS_AS(load_model(truncated), std::invalid_argument);
}

TEST_CASE("codebook round trip") {
    ModelArtifact model = make_model(13, false);
    flow::Codebook cb;
    cb.window_size = 50;
    cb.protocol_slot("tcp_ip");
    cb.protocol_slot("udp_ip");
    cb.direction_slot("L2R");
    model.codebook = cb;

    std::istringstream in(to_text(model));
    const ModelArtifact loaded = load_model(in);
    REQUIRE(loaded.codebook.has_value());
    CHECK(loaded.codebook->window_size == 50);
    CHECK(loaded.codebook->protocol_map().at("udp_ip") == 1);
    CHECK(loaded.codebook->frozen());
    CHECK(to_text(loaded) == to_text(model));
}

TEST_CASE("dataset read and write round trip") {
    const std::vector<Instance> instances = {{1.5, -2.0}, {0.0, 3.25}};
    const std::vector<std::string> labels = {"normal", "red"};
    std::ostringstream out;
    write_dataset(out, instances, &labels);

    std::istringstream in(out.str());
    const Dataset ds = read_dataset(in);
    CHECK(ds.instances == instances);
    CHECK(ds.labels == labels);
}

TEST_CASE("dataset parsing errors") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_dataset(empty), std::invalid_argument);
    std::istringstream bad("f0,f1\n1.0,abc\n");
    CHECK_THROWS_AS(read_dataset(bad), std::invalid_argument);
    std::istringstream short_row("f0,f1\n1.0\n");
    CHECK_THROWS_AS(read_dataset(short_row), std::invalid_argument);
}

TEST_CASE("label conventions") {
    CHECK_FALSE(label_is_anomaly(""));
    CHECK_FALSE(label_is_anomaly("normal"));
    CHECK_FALSE(label_is_anomaly("0"));
    CHECK(label_is_anomaly("red"));
    CHECK(label_is_anomaly("attack"));
    CHECK(label_is_anomaly("1"));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hif/flow.hpp"
#include "hif/forest.hpp"

using namespace hif::flow;

namespace {

FlowRecord make_record(const std::string& src_ip, const std::string& dst_ip) {
    FlowRecord r;
    r.app_layer = "HTTPWeb";
    r.protocol_name = "tcp_ip";
    r.direction = "L2R";
    r.source_port = 1000;
    r.dest_port = 80;
    r.source_ip = src_ip;
    r.dest_ip = dst_ip;
    return r;
}

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
    hif::RandomStream rng = hif::RandomStream::for_tree(seed, 0);
    std::vector<std::uint8_t> bytes(n);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.uniform_below(256));
    return bytes;
}

}  // namespace

TEST_CASE("parse_flows basics") {
    SUBCASE("header-only file gives an empty list") {
        std::istringstream in(
            "app_layer,protocol_name,direction,source_port,dest_port,source_tcp_flags,"
            "dest_tcp_flags,source_payload,dest_payload,duration,total_source_bytes,"
            "total_dest_bytes,total_source_packets,total_dest_packets,source_ip,dest_ip\n");
        CHECK(parse_flows(in).empty());
    }

    SUBCASE("missing mandatory column is fatal") {
        std::istringstream in(
            "app_layer,protocol_name,direction,dest_port,source_tcp_flags,"
            "dest_tcp_flags,source_payload,dest_payload,duration,total_source_bytes,"
            "total_dest_bytes,total_source_packets,total_dest_packets,source_ip,dest_ip\n");
        CHECK_THROWS_WITH_AS(parse_flows(in), doctest::Contains("source_port"),
                             std::invalid_argument);
    }

    SUBCASE("out-of-range port reported with its line number") {
        std::ifstream fixture(std::string(FIXTURE_DIR) + "/flows_small.csv");
        std::stringstream content;
        content << fixture.rdbuf();
        std::string text = content.str();
        const auto pos = text.find("4444");
        text.replace(pos, 4, "70000");
        std::istringstream in(text);
        CHECK_THROWS_WITH_AS(parse_flows(in, true), doctest::Contains("line 2"),
                             std::invalid_argument);

        // lenient mode skips the bad row and reports it
        std::istringstream in2(text);
        std::vector<ParseIssue> issues;
        const auto records = parse_flows(in2, false, &issues);
        CHECK(records.size() == 2);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].line == 2);
    }
}

TEST_CASE("fixture parse and round trip") {
    std::ifstream in(std::string(FIXTURE_DIR) + "/flows_small.csv");
    REQUIRE(in.good());
    const auto records = parse_flows(in);
    REQUIRE(records.size() == 3);

    CHECK(records[0].app_layer == "HTTPWeb");
    CHECK(records[0].source_payload == std::vector<std::uint8_t>{'a', 'b', 'c'});
    CHECK(records[0].dest_payload ==
          std::vector<std::uint8_t>{'H', 'e', 'l', 'l', 'o'});
    CHECK(records[0].source_tcp_flags == std::array<bool, 6>{true, true, false, false, false,
                                                             false});
    CHECK(records[0].label == std::optional<bool>{false});
    CHECK(records[1].label == std::optional<bool>{true});
    CHECK_FALSE(records[2].label.has_value());

    std::ostringstream out;
    serialize_flows(out, records);
    std::istringstream back(out.str());
    CHECK(parse_flows(back) == records);
}

TEST_CASE("payload histogram") {
    SUBCASE("empty payload is all zeros") {
        const auto hist = payload_histogram({});
        for (double v : hist) CHECK(v == 0.0);
    }

    SUBCASE("constant payload concentrates in one bin") {
        const std::vector<std::uint8_t> payload(100, 0);
        const auto hist = payload_histogram(payload);
        CHECK(hist[0] == 1.0);
        for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] == 0.0);
    }

    SUBCASE("random payload matches a brute-force recount") {
        const auto payload = random_bytes(1000, 7);
        const auto hist = payload_histogram(payload);
        std::array<double, kPayloadBins> expected{};
        for (std::uint8_t b : payload) {
            expected[static_cast<std::size_t>(std::floor(b / 25.6))] += 1.0 / 1000.0;
        }
        for (std::size_t i = 0; i < kPayloadBins; ++i) {
            CHECK(hist[i] == doctest::Approx(expected[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("IP pair counting") {
    SUBCASE("window of one is always one") {
        std::vector<FlowRecord> records;
        for (int i = 0; i < 5; ++i) {
            records.push_back(make_record("10.0.0." + std::to_string(i), "10.0.1.1"));
        }
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK(count_ip_pairs(records, 1, i) == 1);
        }
    }

    SUBCASE("shared pair counts once") {
        const std::vector<FlowRecord> records(10, make_record("1.1.1.1", "2.2.2.2"));
        CHECK(count_ip_pairs(records, 10, 9) == 1);
    }

    SUBCASE("sliding brute-force equivalence on a 500-flow trace") {
        hif::RandomStream rng = hif::RandomStream::for_tree(11, 0);
        std::vector<FlowRecord> records;
        for (int i = 0; i < 500; ++i) {
            records.push_back(
                make_record("10.0.0." + std::to_string(rng.uniform_below(20)),
                            "10.0.1." + std::to_string(rng.uniform_below(20))));
        }
        for (std::size_t i = 0; i < records.size(); ++i) {
            std::set<std::pair<std::string, std::string>> pairs;
            const std::size_t begin = i + 1 >= 100 ? i + 1 - 100 : 0;
            for (std::size_t j = begin; j <= i; ++j) {
                pairs.emplace(records[j].source_ip, records[j].dest_ip);
            }
            CHECK(count_ip_pairs(records, 100, i) == pairs.size());
        }
    }
}

TEST_CASE("encode produces the hand-assembled fixture vector") {
    std::ifstream in(std::string(FIXTURE_DIR) + "/flows_small.csv");
    const auto records = parse_flows(in);
    Codebook codebook;
    const FeatureVector v = encode(records[0], codebook, 1);

    FeatureVector expected{};
    // dest payload "Hello": bytes 72,101,108,108,111
    expected[2] = 0.2;
    expected[3] = 0.2;
    expected[4] = 0.6;
    expected[10] = 80.0;                      // dest port
    expected[12] = 1.0;                       // dest TCPFlag1
    expected[17] = 1.0;                       // direction slot 0 (L2R seen first)
    expected[21] = 1.0;                       // protocol slot 0 (tcp_ip seen first)
    expected[30] = 1.0;                       // source payload "abc", all in bin 3
    expected[37] = 4444.0;                    // source port
    expected[38] = 1.0;                       // source TCPFlag0
    expected[39] = 1.0;                       // source TCPFlag1
    expected[44] = 1.5;                       // duration
    expected[45] = 4000.0;                    // total dest bytes
    expected[46] = 6.0;                       // total dest packets
    expected[47] = 300.0;                     // total source bytes
    expected[48] = 5.0;                       // total source packets
    expected[49] = 1.0;                       // IP pair count

    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        CAPTURE(f);
        CHECK(v[f] == doctest::Approx(expected[f]).epsilon(1e-15));
    }
}

TEST_CASE("one-hot encoding places a single protocol bit") {
    Codebook codebook;
    codebook.protocol_slot("a");
    codebook.protocol_slot("b");
    FlowRecord r = make_record("1.1.1.1", "2.2.2.2");
    r.protocol_name = "c";  // lands in slot 2
    const FeatureVector v = encode(r, codebook, 1);
    CHECK(v[23] == 1.0);
    CHECK(v[21] + v[22] + v[24] + v[25] + v[26] == 0.0);
}

TEST_CASE("frozen codebook rejects unknown categories") {
    Codebook codebook;
    codebook.protocol_slot("tcp_ip");
    codebook.direction_slot("L2R");
    codebook.freeze();
    FlowRecord r = make_record("1.1.1.1", "2.2.2.2");
    r.protocol_name = "icmp";
    CHECK_THROWS_AS(encode(r, codebook, 1), std::out_of_range);
}

TEST_CASE("min-max normalization") {
    Codebook codebook;
    FlowRecord r = make_record("1.1.1.1", "2.2.2.2");
    const FeatureVector v = encode(r, codebook, 1);

    SUBCASE("fit on one vector maps it to zero") {
        codebook.fit_minmax(std::vector<FeatureVector>{v});
        for (double f : codebook.apply_minmax(v)) CHECK(f == 0.0);
    }

    SUBCASE("fit-set values land in the unit cube and test values clamp") {
        FlowRecord r2 = r;
        r2.dest_port = 8080;
        r2.duration = 10.0;
        const FeatureVector v2 = encode(r2, codebook, 3);
        codebook.fit_minmax(std::vector<FeatureVector>{v, v2});
        for (const auto& fv : {v, v2}) {
            for (double f : codebook.apply_minmax(fv)) {
                CHECK(f >= 0.0);
                CHECK(f <= 1.0);
            }
        }
        FlowRecord below = r;
        below.dest_port = 21;  // below the fitted min
        const FeatureVector vb = encode(below, codebook, 1);
        CHECK(codebook.apply_minmax(vb)[10] == 0.0);
    }
}

TEST_CASE("split_by_app_layer partitions and preserves order") {
    std::ifstream in(std::string(FIXTURE_DIR) + "/flows_small.csv");
    const auto records = parse_flows(in);
    const auto layers = split_by_app_layer(records);
    REQUIRE(layers.size() == 2);
    CHECK(layers.at("HTTPWeb").size() == 2);
    CHECK(layers.at("SSH").size() == 1);
    CHECK(layers.at("HTTPWeb")[0] == records[0]);
    CHECK(layers.at("HTTPWeb")[1] == records[2]);

    std::size_t total = 0;
    for (const auto& [name, group] : layers) total += group.size();
    CHECK(total == records.size());
}

TEST_CASE("feature invariants hold over a random corpus") {
    hif::RandomStream rng = hif::RandomStream::for_tree(29, 0);
    std::vector<FlowRecord> records;
    const char* protocols[] = {"tcp_ip", "udp_ip", "icmp_ip"};
    const char* directions[] = {"L2R", "R2L", "L2L"};
    for (int i = 0; i < 10000; ++i) {
        FlowRecord r;
        r.app_layer = "HTTPWeb";
        r.protocol_name = protocols[rng.uniform_below(3)];
        r.direction = directions[rng.uniform_below(3)];
        r.source_port = static_cast<int>(rng.uniform_below(65536));
        r.dest_port = static_cast<int>(rng.uniform_below(65536));
        for (auto& f : r.source_tcp_flags) f = rng.uniform01() < 0.5;
        for (auto& f : r.dest_tcp_flags) f = rng.uniform01() < 0.5;
        r.source_payload = random_bytes(rng.uniform_below(64),
                                        1000 + static_cast<std::uint64_t>(i));
        r.dest_payload = random_bytes(rng.uniform_below(64),
                                      2000 + static_cast<std::uint64_t>(i));
        r.duration = rng.uniform01() * 100.0;
        r.total_source_bytes = static_cast<double>(rng.uniform_below(100000));
        r.total_dest_bytes = static_cast<double>(rng.uniform_below(100000));
        r.total_source_packets = static_cast<double>(rng.uniform_below(1000));
        r.total_dest_packets = static_cast<double>(rng.uniform_below(1000));
        r.source_ip = "10.0.0." + std::to_string(rng.uniform_below(30));
        r.dest_ip = "10.0.1." + std::to_string(rng.uniform_below(30));
        records.push_back(std::move(r));
    }

    Codebook raw_codebook;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const FeatureVector v =
            encode(records[i], raw_codebook, count_ip_pairs(records, 100, i));
        // payload histogram blocks carry unit mass unless the payload is empty
        double dest_mass = 0.0, src_mass = 0.0;
        for (std::size_t b = 0; b < kPayloadBins; ++b) {
            dest_mass += v[b];
            src_mass += v[27 + b];
        }
        const double expected_dest = records[i].dest_payload.empty() ? 0.0 : 1.0;
        const double expected_src = records[i].source_payload.empty() ? 0.0 : 1.0;
        CHECK(dest_mass == doctest::Approx(expected_dest).epsilon(1e-9));
        CHECK(src_mass == doctest::Approx(expected_src).epsilon(1e-9));
    }

    Codebook codebook;
    const auto normalized = encode_dataset(records, codebook);
    CHECK(normalized.size() == records.size());
    for (const auto& v : normalized) {
        for (double f : v) {
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
        }
    }

    // re-encoding is bit-identical
    const FeatureVector again =
        encode(records[42], codebook, count_ip_pairs(records, 100, 42));
    const FeatureVector again2 =
        encode(records[42], codebook, count_ip_pairs(records, 100, 42));
    CHECK(again == again2);
}

TEST_CASE("base64 round trip") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        hif::RandomStream rng = hif::RandomStream::for_tree(seed, 77);
        const auto bytes = random_bytes(rng.uniform_below(200), seed + 500);
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
    CHECK_THROWS_AS(base64_decode("abc"), std::invalid_argument);
    CHECK_THROWS_AS(base64_decode("a=bc"), std::invalid_argument);
    CHECK_THROWS_AS(base64_decode("ab!c"), std::invalid_argument);
}

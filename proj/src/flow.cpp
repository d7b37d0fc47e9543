#include "hif/flow.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hif::flow {

namespace {

constexpr char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

const std::vector<std::string>& canonical_columns() {
    static const std::vector<std::string> columns = {
        "app_layer",        "protocol_name",      "direction",
        "source_port",      "dest_port",          "source_tcp_flags",
        "dest_tcp_flags",   "source_payload",     "dest_payload",
        "duration",         "total_source_bytes", "total_dest_bytes",
        "total_source_packets", "total_dest_packets", "source_ip",
        "dest_ip"};
    return columns;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

int parse_port(const std::string& text) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("malformed port '" + text + "'");
    }
    if (value < 0 || value > 65535) {
        throw std::invalid_argument("port " + text + " out of [0,65535]");
    }
    return value;
}

double parse_number(const std::string& text, const char* what) {
    try {
        std::size_t consumed = 0;
        const double value = std::stod(text, &consumed);
        if (consumed != text.size() || !std::isfinite(value)) throw std::invalid_argument("");
        return value;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("malformed ") + what + " '" + text + "'");
    }
}

double parse_count(const std::string& text, const char* what) {
    const double value = parse_number(text, what);
    if (value < 0.0) throw std::invalid_argument(std::string(what) + " must be non-negative");
    return value;
}

std::array<bool, 6> parse_flags(const std::string& text) {
    if (text.size() != 6) {
        throw std::invalid_argument("TCP flags must be 6 binary digits, got '" + text + "'");
    }
    std::array<bool, 6> flags{};
    for (std::size_t i = 0; i < 6; ++i) {
        if (text[i] != '0' && text[i] != '1') {
            throw std::invalid_argument("TCP flag digit must be 0 or 1 in '" + text + "'");
        }
        flags[i] = text[i] == '1';
    }
    return flags;
}

std::string flags_to_string(const std::array<bool, 6>& flags) {
    std::string s(6, '0');
    for (std::size_t i = 0; i < 6; ++i) s[i] = flags[i] ? '1' : '0';
    return s;
}

}  // namespace

std::size_t Codebook::slot_for(std::map<std::string, std::size_t>& slots,
                               std::size_t capacity, const std::string& name,
                               const char* what) {
    const auto it = slots.find(name);
    if (it != slots.end()) return it->second;
    if (frozen_) {
        throw std::out_of_range(std::string("unknown ") + what + " category '" + name +
                                "' in frozen codebook");
    }
    if (slots.size() >= capacity) {
        throw std::out_of_range(std::string(what) + " categories exceed " +
                                std::to_string(capacity) + " slots");
    }
    const std::size_t slot = slots.size();
    slots.emplace(name, slot);
    return slot;
}

std::size_t Codebook::protocol_slot(const std::string& name) {
    return slot_for(protocols_, kProtocolSlots, name, "protocol");
}

std::size_t Codebook::direction_slot(const std::string& name) {
    return slot_for(directions_, kDirectionSlots, name, "direction");
}

void Codebook::fit_minmax(std::span<const FeatureVector> vectors) {
    if (vectors.empty()) throw std::invalid_argument("cannot fit min-max on empty set");
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double lo = vectors.front()[f];
        double hi = lo;
        for (const auto& v : vectors) {
            lo = std::min(lo, v[f]);
            hi = std::max(hi, v[f]);
        }
        ranges_[f] = {lo, hi};
    }
    minmax_fitted_ = true;
}

FeatureVector Codebook::apply_minmax(const FeatureVector& v) const {
    if (!minmax_fitted_) throw std::logic_error("min-max ranges not fitted");
    FeatureVector out{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const auto [lo, hi] = ranges_[f];
        if (hi <= lo) {
            out[f] = 0.0;
        } else {
            out[f] = std::clamp((v[f] - lo) / (hi - lo), 0.0, 1.0);
        }
    }
    return out;
}

std::vector<FlowRecord> parse_flows(std::istream& in, bool strict,
                                    std::vector<ParseIssue>* issues) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty flow file, header expected");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv(line);
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
    for (const auto& name : canonical_columns()) {
        if (!column.contains(name)) {
            throw std::invalid_argument("missing mandatory column '" + name + "'");
        }
    }
    const bool has_label = column.contains("label");

    std::vector<FlowRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            const auto fields = split_csv(line);
            if (fields.size() < header.size()) {
                throw std::invalid_argument("expected " + std::to_string(header.size()) +
                                            " fields, got " + std::to_string(fields.size()));
            }
            auto field = [&](const std::string& name) -> const std::string& {
                return fields[column.at(name)];
            };

            FlowRecord r;
            r.app_layer = field("app_layer");
            r.protocol_name = field("protocol_name");
            r.direction = field("direction");
            r.source_port = parse_port(field("source_port"));
            r.dest_port = parse_port(field("dest_port"));
            r.source_tcp_flags = parse_flags(field("source_tcp_flags"));
            r.dest_tcp_flags = parse_flags(field("dest_tcp_flags"));
            r.source_payload = base64_decode(field("source_payload"));
            r.dest_payload = base64_decode(field("dest_payload"));
            r.duration = parse_count(field("duration"), "duration");
            r.total_source_bytes = parse_count(field("total_source_bytes"), "byte count");
            r.total_dest_bytes = parse_count(field("total_dest_bytes"), "byte count");
            r.total_source_packets = parse_count(field("total_source_packets"), "packet count");
            r.total_dest_packets = parse_count(field("total_dest_packets"), "packet count");
            r.source_ip = field("source_ip");
            r.dest_ip = field("dest_ip");
            if (has_label && !field("label").empty()) {
                const std::string& lab = field("label");
                if (lab != "normal" && lab != "attack") {
                    throw std::invalid_argument("label must be 'normal' or 'attack', got '" +
                                                lab + "'");
                }
                r.label = lab == "attack";
            }
            records.push_back(std::move(r));
        } catch (const std::exception& e) {
            if (strict) {
                throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
            }
            if (issues) issues->push_back({line_no, e.what()});
        }
    }
    return records;
}

void serialize_flows(std::ostream& out, std::span<const FlowRecord> records) {
    for (std::size_t i = 0; i < canonical_columns().size(); ++i) {
        if (i) out << ',';
        out << canonical_columns()[i];
    }
    out << ",label\n";
    char buf[64];
    auto num = [&](double v) -> std::string {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    };
    for (const auto& r : records) {
        out << r.app_layer << ',' << r.protocol_name << ',' << r.direction << ','
            << r.source_port << ',' << r.dest_port << ',' << flags_to_string(r.source_tcp_flags)
            << ',' << flags_to_string(r.dest_tcp_flags) << ',' << base64_encode(r.source_payload)
            << ',' << base64_encode(r.dest_payload) << ',' << num(r.duration) << ','
            << num(r.total_source_bytes) << ',' << num(r.total_dest_bytes) << ','
            << num(r.total_source_packets) << ',' << num(r.total_dest_packets) << ','
            << r.source_ip << ',' << r.dest_ip << ','
            << (r.label ? (*r.label ? "attack" : "normal") : "") << '\n';
    }
}

std::array<double, kPayloadBins> payload_histogram(std::span<const std::uint8_t> payload) {
    std::array<double, kPayloadBins> hist{};
    if (payload.empty()) return hist;
    for (std::uint8_t b : payload) {
        hist[static_cast<std::size_t>(b) * kPayloadBins / 256] += 1.0;
    }
    for (auto& v : hist) v /= static_cast<double>(payload.size());
    return hist;
}

std::size_t count_ip_pairs(std::span<const FlowRecord> records, std::size_t window_size,
                           std::size_t index) {
    if (window_size < 1) throw std::invalid_argument("window_size must be >= 1");
    if (index >= records.size()) throw std::out_of_range("flow index out of range");
    const std::size_t begin = index + 1 >= window_size ? index + 1 - window_size : 0;
    std::set<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = begin; i <= index; ++i) {
        pairs.emplace(records[i].source_ip, records[i].dest_ip);
    }
    return pairs.size();
}

FeatureVector encode(const FlowRecord& record, Codebook& codebook, std::size_t pair_count) {
    FeatureVector v{};
    std::size_t f = 0;

    const auto dest_hist = payload_histogram(record.dest_payload);
    for (double h : dest_hist) v[f++] = h;
    v[f++] = static_cast<double>(record.dest_port);
    for (bool flag : record.dest_tcp_flags) v[f++] = flag ? 1.0 : 0.0;

    const std::size_t dir = codebook.direction_slot(record.direction);
    for (std::size_t i = 0; i < kDirectionSlots; ++i) v[f++] = i == dir ? 1.0 : 0.0;
    const std::size_t proto = codebook.protocol_slot(record.protocol_name);
    for (std::size_t i = 0; i < kProtocolSlots; ++i) v[f++] = i == proto ? 1.0 : 0.0;

    const auto src_hist = payload_histogram(record.source_payload);
    for (double h : src_hist) v[f++] = h;
    v[f++] = static_cast<double>(record.source_port);
    for (bool flag : record.source_tcp_flags) v[f++] = flag ? 1.0 : 0.0;

    v[f++] = record.duration;
    v[f++] = record.total_dest_bytes;
    v[f++] = record.total_dest_packets;
    v[f++] = record.total_source_bytes;
    v[f++] = record.total_source_packets;
    v[f++] = static_cast<double>(pair_count);

    return v;
}

std::map<std::string, std::vector<FlowRecord>> split_by_app_layer(
    std::span<const FlowRecord> records) {
    std::map<std::string, std::vector<FlowRecord>> layers;
    for (const auto& r : records) layers[r.app_layer].push_back(r);
    return layers;
}

std::vector<FeatureVector> encode_dataset(std::span<const FlowRecord> records,
                                          Codebook& codebook) {
    std::vector<FeatureVector> raw;
    raw.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        raw.push_back(encode(records[i], codebook,
                             count_ip_pairs(records, codebook.window_size, i)));
    }
    if (raw.empty()) return raw;
    codebook.fit_minmax(raw);
    for (auto& v : raw) v = codebook.apply_minmax(v);
    return raw;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
        if (i + 1 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
        if (i + 2 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 2]);
        out.push_back(kBase64Chars[(chunk >> 18) & 0x3f]);
        out.push_back(kBase64Chars[(chunk >> 12) & 0x3f]);
        out.push_back(i + 1 < bytes.size() ? kBase64Chars[(chunk >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < bytes.size() ? kBase64Chars[chunk & 0x3f] : '=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw std::invalid_argument("base64 length must be multiple of 4");
    auto value_of = [](char c) -> std::uint32_t {
        if (c >= 'A' && c <= 'Z') return static_cast<std::uint32_t>(c - 'A');
        if (c >= 'a' && c <= 'z') return static_cast<std::uint32_t>(c - 'a' + 26);
        if (c >= '0' && c <= '9') return static_cast<std::uint32_t>(c - '0' + 52);
        if (c == '+') return 62;
        if (c == '/') return 63;
        throw std::invalid_argument(std::string("invalid base64 character '") + c + "'");
    };
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::size_t pad = 0;
        std::uint32_t chunk = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            const char c = text[i + j];
            if (c == '=') {
                if (i + 4 != text.size() || j < 2) {
                    throw std::invalid_argument("misplaced base64 padding");
                }
                ++pad;
                chunk <<= 6;
            } else {
                if (pad) throw std::invalid_argument("data after base64 padding");
                chunk = (chunk << 6) | value_of(c);
            }
        }
        out.push_back(static_cast<std::uint8_t>((chunk >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((chunk >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(chunk & 0xff));
    }
    return out;
}

}  // namespace hif::flow

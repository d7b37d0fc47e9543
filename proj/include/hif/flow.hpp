#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hif::flow {

inline constexpr std::size_t kFeatureCount = 50;
inline constexpr std::size_t kPayloadBins = 10;
inline constexpr std::size_t kProtocolSlots = 6;
inline constexpr std::size_t kDirectionSlots = 4;

using FeatureVector = std::array<double, kFeatureCount>;

/// One network flow prior to encoding. Payloads are raw bytes; on disk
/// they travel base64-encoded inside the delimited text format.
struct FlowRecord {
    std::string app_layer;
    std::string protocol_name;
    std::string direction;
    int source_port = 0;
    int dest_port = 0;
    std::array<bool, 6> source_tcp_flags{};
    std::array<bool, 6> dest_tcp_flags{};
    std::vector<std::uint8_t> source_payload;
    std::vector<std::uint8_t> dest_payload;
    double duration = 0.0;
    double total_source_bytes = 0.0;
    double total_dest_bytes = 0.0;
    double total_source_packets = 0.0;
    double total_dest_packets = 0.0;
    std::string source_ip;
    std::string dest_ip;
    std::optional<bool> label;  // true = attack

    bool operator==(const FlowRecord&) const = default;
};

/// Category-to-slot maps plus per-feature normalization ranges.
class Codebook {
public:
    std::size_t window_size = 100;

    /// Returns the slot for a category, assigning a new one unless frozen.
    std::size_t protocol_slot(const std::string& name);
    std::size_t direction_slot(const std::string& name);

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    const std::map<std::string, std::size_t>& protocol_map() const { return protocols_; }
    const std::map<std::string, std::size_t>& direction_map() const { return directions_; }
    void set_protocol_map(std::map<std::string, std::size_t> m) { protocols_ = std::move(m); }
    void set_direction_map(std::map<std::string, std::size_t> m) { directions_ = std::move(m); }

    bool minmax_fitted() const { return minmax_fitted_; }
    const std::array<std::pair<double, double>, kFeatureCount>& feature_ranges() const {
        return ranges_;
    }
    void set_feature_ranges(const std::array<std::pair<double, double>, kFeatureCount>& r) {
        ranges_ = r;
        minmax_fitted_ = true;
    }

    /// Records per-feature min/max over the fit set.
    void fit_minmax(std::span<const FeatureVector> vectors);

    /// Affine map to [0,1] with clamping; constant features map to 0.
    FeatureVector apply_minmax(const FeatureVector& v) const;

private:
    std::size_t slot_for(std::map<std::string, std::size_t>& slots, std::size_t capacity,
                         const std::string& name, const char* what);

    std::map<std::string, std::size_t> protocols_;
    std::map<std::string, std::size_t> directions_;
    std::array<std::pair<double, double>, kFeatureCount> ranges_{};
    bool minmax_fitted_ = false;
    bool frozen_ = false;
};

struct ParseIssue {
    std::size_t line = 0;
    std::string message;
};

/// Reads header-bearing comma-separated flow text. In strict mode any
/// malformed line throws; otherwise bad lines are reported and skipped.
std::vector<FlowRecord> parse_flows(std::istream& in, bool strict = true,
                                    std::vector<ParseIssue>* issues = nullptr);

void serialize_flows(std::ostream& out, std::span<const FlowRecord> records);

/// Byte-value histogram over 10 equal-width bins spanning [0,255],
/// normalized by payload length. Empty payload gives all zeros.
std::array<double, kPayloadBins> payload_histogram(std::span<const std::uint8_t> payload);

/// Distinct (source_ip, dest_ip) pairs among the window_size flows ending
/// at index, truncated at the start of the trace.
std::size_t count_ip_pairs(std::span<const FlowRecord> records, std::size_t window_size,
                           std::size_t index);

FeatureVector encode(const FlowRecord& record, Codebook& codebook, std::size_t pair_count);

std::map<std::string, std::vector<FlowRecord>> split_by_app_layer(
    std::span<const FlowRecord> records);

/// Pair-counts, encodes, fits min-max, and normalizes one ordered trace.
std::vector<FeatureVector> encode_dataset(std::span<const FlowRecord> records,
                                          Codebook& codebook);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace hif::flow

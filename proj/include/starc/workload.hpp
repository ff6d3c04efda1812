#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "starc/types.hpp"

namespace starc {

// Gaussian-mixture key stream whose component means random-walk during
// decoding, so late-decode keys drift away from the prefill distribution.
struct SyntheticConfig {
    std::int32_t d_h = 128;
    std::int32_t prefill_len = 2048;
    std::int32_t decode_len = 2048;
    std::int32_t n_components = 8;
    float drift = 0.02f;           // per-step component-mean displacement magnitude
    float persistence = 0.8f;      // probability a token reuses its predecessor's component
    float query_alignment = 0.9f;  // probability a query is drawn near a component mean
    float noise_sigma = 0.15f;     // within-component standard deviation
    std::uint64_t seed = 1;

    void validate() const; // throws ArgumentError
};

struct Trace {
    std::int32_t d_h = 0;
    TokenId prefill_len = 0;
    TokenId total_len = 0;
    std::vector<float> keys;    // total_len x d_h
    std::vector<float> values;  // total_len x d_h
    std::vector<float> queries; // (total_len - prefill_len) x d_h, one per decoding step

    // Generator metadata, not serialized: mixture component of each key row.
    std::vector<std::int32_t> key_component;

    TokenId decode_len() const { return total_len - prefill_len; }
    MatrixView keys_view() const { return {keys.data(), total_len, d_h}; }
    MatrixView values_view() const { return {values.data(), total_len, d_h}; }
    MatrixView queries_view() const { return {queries.data(), decode_len(), d_h}; }
    std::span<const float> query(TokenId step) const { return queries_view().row(step); }

    bool payload_equal(const Trace& other) const;
};

Trace generate(const SyntheticConfig& config);

// Binary trace format, little-endian throughout:
//   offset  0: magic "STARCTRC" (8 bytes)
//   offset  8: u32 version (currently 1)
//   offset 12: u32 d_h
//   offset 16: u64 prefill_len
//   offset 24: u64 total_len
//   offset 32: u32 element encoding (1 = IEEE-754 binary32, little-endian)
//   offset 36: keys, values, queries as row-major float32
inline constexpr char kTraceMagic[8] = {'S', 'T', 'A', 'R', 'C', 'T', 'R', 'C'};
inline constexpr std::uint32_t kTraceVersion = 1;
inline constexpr std::size_t kTraceHeaderSize = 36;

void save_trace(const Trace& trace, const std::string& path);

// Validates magic, version, encoding, header/payload consistency and
// element finiteness; FormatError messages carry byte offsets.
Trace load_trace(const std::string& path);

} // namespace starc

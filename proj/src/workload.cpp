#include "starc/workload.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "starc/rng.hpp"

namespace starc {

void SyntheticConfig::validate() const {
    if (d_h < 1 || prefill_len < 1 || decode_len < 1 || n_components < 1) {
        throw ArgumentError("SyntheticConfig: d_h, prefill_len, decode_len and n_components "
                            "must all be >= 1");
    }
    if (persistence < 0.0f || persistence > 1.0f || query_alignment < 0.0f ||
        query_alignment > 1.0f) {
        throw ArgumentError("SyntheticConfig: probabilities must lie in [0, 1]");
    }
    if (noise_sigma < 0.0f || drift < 0.0f) {
        throw ArgumentError("SyntheticConfig: noise_sigma and drift must be >= 0");
    }
}

bool Trace::payload_equal(const Trace& other) const {
    auto bits_equal = [](const std::vector<float>& a, const std::vector<float>& b) {
        return a.size() == b.size() &&
               (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
    };
    return d_h == other.d_h && prefill_len == other.prefill_len && total_len == other.total_len &&
           bits_equal(keys, other.keys) && bits_equal(values, other.values) &&
           bits_equal(queries, other.queries);
}

Trace generate(const SyntheticConfig& config) {
    config.validate();
    Rng rng(config.seed);

    const std::int32_t d = config.d_h;
    const std::int32_t n = config.n_components;
    Trace trace;
    trace.d_h = d;
    trace.prefill_len = config.prefill_len;
    trace.total_len = config.prefill_len + config.decode_len;
    trace.keys.resize(static_cast<std::size_t>(trace.total_len) * d);
    trace.values.resize(static_cast<std::size_t>(trace.total_len) * d);
    trace.queries.resize(static_cast<std::size_t>(config.decode_len) * d);
    trace.key_component.resize(trace.total_len);

    std::vector<double> means(static_cast<std::size_t>(n) * d);
    for (double& m : means) {
        m = rng.next_gaussian();
    }

    auto emit_key_value = [&](TokenId t, std::int32_t comp) {
        float* key = trace.keys.data() + static_cast<std::size_t>(t) * d;
        float* value = trace.values.data() + static_cast<std::size_t>(t) * d;
        const double* mean = means.data() + static_cast<std::size_t>(comp) * d;
        for (std::int32_t i = 0; i < d; ++i) {
            key[i] = static_cast<float>(mean[i] + config.noise_sigma * rng.next_gaussian());
        }
        for (std::int32_t i = 0; i < d; ++i) {
            value[i] = static_cast<float>(rng.next_gaussian());
        }
        trace.key_component[t] = comp;
    };

    std::int32_t comp = static_cast<std::int32_t>(rng.next_below(n));
    emit_key_value(0, comp);
    for (TokenId t = 1; t < config.prefill_len; ++t) {
        if (rng.next_float() >= config.persistence) {
            comp = static_cast<std::int32_t>(rng.next_below(n));
        }
        emit_key_value(t, comp);
    }

    std::vector<double> direction(d);
    for (TokenId step = 0; step < config.decode_len; ++step) {
        // Component means random-walk by `drift` per decoding step.
        for (std::int32_t j = 0; j < n; ++j) {
            double norm_sq = 0.0;
            for (std::int32_t i = 0; i < d; ++i) {
                direction[i] = rng.next_gaussian();
                norm_sq += direction[i] * direction[i];
            }
            double norm = std::sqrt(norm_sq);
            if (norm < 1e-12) {
                continue;
            }
            double* mean = means.data() + static_cast<std::size_t>(j) * d;
            for (std::int32_t i = 0; i < d; ++i) {
                mean[i] += config.drift * direction[i] / norm;
            }
        }

        if (rng.next_float() >= config.persistence) {
            comp = static_cast<std::int32_t>(rng.next_below(n));
        }
        emit_key_value(config.prefill_len + step, comp);

        float* q = trace.queries.data() + static_cast<std::size_t>(step) * d;
        if (rng.next_float() < config.query_alignment) {
            std::int32_t cq = static_cast<std::int32_t>(rng.next_below(n));
            const double* mean = means.data() + static_cast<std::size_t>(cq) * d;
            for (std::int32_t i = 0; i < d; ++i) {
                q[i] = static_cast<float>(mean[i] + config.noise_sigma * rng.next_gaussian());
            }
        } else {
            for (std::int32_t i = 0; i < d; ++i) {
                q[i] = static_cast<float>(rng.next_gaussian());
            }
        }
    }
    return trace;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFULL));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(const char* p) {
    auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])); };
    return b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
}

std::uint64_t get_u64(const char* p) {
    return static_cast<std::uint64_t>(get_u32(p)) |
           (static_cast<std::uint64_t>(get_u32(p + 4)) << 32);
}

void write_floats(std::ofstream& out, const std::vector<float>& data) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(float)));
    } else {
        std::string buf;
        buf.reserve(data.size() * 4);
        for (float f : data) {
            put_u32(buf, std::bit_cast<std::uint32_t>(f));
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

void read_floats(const char* p, std::size_t count, std::vector<float>& out) {
    out.resize(count);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), p, count * sizeof(float));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            out[i] = std::bit_cast<float>(get_u32(p + i * 4));
        }
    }
}

void check_finite(const std::vector<float>& data, std::size_t base_offset, const char* what) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw FormatError(std::string("trace: non-finite ") + what + " element at byte offset " +
                              std::to_string(base_offset + i * 4));
        }
    }
}

} // namespace

void save_trace(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("save_trace: cannot open '" + path + "' for writing");
    }
    std::string header;
    header.append(kTraceMagic, sizeof(kTraceMagic));
    put_u32(header, kTraceVersion);
    put_u32(header, static_cast<std::uint32_t>(trace.d_h));
    put_u64(header, static_cast<std::uint64_t>(trace.prefill_len));
    put_u64(header, static_cast<std::uint64_t>(trace.total_len));
    put_u32(header, 1); // element encoding: float32 little-endian
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    write_floats(out, trace.keys);
    write_floats(out, trace.values);
    write_floats(out, trace.queries);
    if (!out) {
        throw FormatError("save_trace: write to '" + path + "' failed");
    }
}

Trace load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw FormatError("load_trace: cannot open '" + path + "'");
    }
    std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<char> bytes(static_cast<std::size_t>(size));
    in.read(bytes.data(), size);
    if (!in) {
        throw FormatError("load_trace: read of '" + path + "' failed");
    }

    if (bytes.size() < kTraceHeaderSize) {
        throw FormatError("trace: truncated header, file holds " + std::to_string(bytes.size()) +
                          " bytes but the header needs " + std::to_string(kTraceHeaderSize));
    }
    if (std::memcmp(bytes.data(), kTraceMagic, sizeof(kTraceMagic)) != 0) {
        throw FormatError("trace: bad magic at byte offset 0");
    }
    std::uint32_t version = get_u32(bytes.data() + 8);
    if (version != kTraceVersion) {
        throw FormatError("trace: unsupported version " + std::to_string(version) +
                          " at byte offset 8 (expected " + std::to_string(kTraceVersion) + ")");
    }
    std::uint32_t d_h = get_u32(bytes.data() + 12);
    std::uint64_t prefill = get_u64(bytes.data() + 16);
    std::uint64_t total = get_u64(bytes.data() + 24);
    std::uint32_t encoding = get_u32(bytes.data() + 32);
    if (encoding != 1) {
        throw FormatError("trace: unknown element encoding " + std::to_string(encoding) +
                          " at byte offset 32");
    }
    if (d_h < 1) {
        throw FormatError("trace: d_h must be >= 1 (byte offset 12)");
    }
    if (prefill > total) {
        throw FormatError("trace: prefill_len exceeds total_len (byte offsets 16, 24)");
    }
    constexpr std::uint64_t kMaxDim = 1u << 30;
    if (total > kMaxDim || d_h > kMaxDim || total * d_h > (1ULL << 40)) {
        throw FormatError("trace: header sizes implausibly large");
    }

    std::uint64_t kv_elems = total * d_h;
    std::uint64_t query_elems = (total - prefill) * d_h;
    std::uint64_t expected_payload = (2 * kv_elems + query_elems) * 4;
    std::uint64_t actual_payload = bytes.size() - kTraceHeaderSize;
    if (actual_payload != expected_payload) {
        throw FormatError("trace: payload ends at byte offset " +
                          std::to_string(bytes.size()) + ", expected " +
                          std::to_string(kTraceHeaderSize + expected_payload) + " (" +
                          std::to_string(expected_payload) + " payload bytes for the declared " +
                          "header, found " + std::to_string(actual_payload) + ")");
    }

    Trace trace;
    trace.d_h = static_cast<std::int32_t>(d_h);
    trace.prefill_len = static_cast<TokenId>(prefill);
    trace.total_len = static_cast<TokenId>(total);

    const char* p = bytes.data() + kTraceHeaderSize;
    read_floats(p, kv_elems, trace.keys);
    read_floats(p + kv_elems * 4, kv_elems, trace.values);
    read_floats(p + 2 * kv_elems * 4, query_elems, trace.queries);

    check_finite(trace.keys, kTraceHeaderSize, "key");
    check_finite(trace.values, kTraceHeaderSize + kv_elems * 4, "value");
    check_finite(trace.queries, kTraceHeaderSize + 2 * kv_elems * 4, "query");
    return trace;
}

} // namespace starc

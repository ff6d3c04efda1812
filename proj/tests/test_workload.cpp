#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "starc/workload.hpp"

using namespace starc;

namespace {

double mean_cosine_between(const Trace& trace, TokenId a_begin, TokenId a_end, TokenId b_begin,
                           TokenId b_end) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (TokenId i = a_begin; i < a_end; i += 7) {
        for (TokenId j = b_begin; j < b_end; j += 7) {
            sum += cosine_similarity(trace.keys_view().row(i), trace.keys_view().row(j));
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

void corrupt_byte(const std::string& path, std::size_t offset, char value) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(offset));
    f.write(&value, 1);
}

} // namespace

TEST_CASE("generation is bit-identical per seed") {
    SyntheticConfig config;
    config.d_h = 16;
    config.prefill_len = 128;
    config.decode_len = 64;
    config.seed = 42;
    Trace a = generate(config);
    Trace b = generate(config);
    CHECK(a.payload_equal(b));
    config.seed = 43;
    CHECK(!generate(config).payload_equal(a));
}

TEST_CASE("persistence 1.0 keeps every token in its predecessor's component") {
    SyntheticConfig config;
    config.d_h = 8;
    config.prefill_len = 64;
    config.decode_len = 64;
    config.n_components = 4;
    config.persistence = 1.0f;
    config.seed = 5;
    Trace trace = generate(config);
    REQUIRE(trace.key_component.size() == 128);
    for (std::size_t t = 1; t < trace.key_component.size(); ++t) {
        CHECK(trace.key_component[t] == trace.key_component[0]);
    }
}

TEST_CASE("zero drift with one component keeps prefill and decode aligned") {
    SyntheticConfig config;
    config.d_h = 16;
    config.prefill_len = 512;
    config.decode_len = 512;
    config.n_components = 1;
    config.drift = 0.0f;
    config.noise_sigma = 0.25f;
    config.seed = 9;
    Trace trace = generate(config);
    // Grand mean of key components differs between phases only by noise:
    // threshold 4 * sigma * sqrt(2 / (N * d)).
    double pre = 0.0;
    double dec = 0.0;
    std::int64_t n = static_cast<std::int64_t>(512) * 16;
    for (TokenId t = 0; t < 512; ++t) {
        for (int d = 0; d < 16; ++d) {
            pre += trace.keys_view().row(t)[d];
            dec += trace.keys_view().row(512 + t)[d];
        }
    }
    double diff = std::fabs(pre - dec) / static_cast<double>(n);
    double threshold = 4.0 * 0.25 * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(diff < threshold);
}

TEST_CASE("drift pushes late-decode keys away from the prefill distribution") {
    // One component isolates the drift mechanism; in a mixture the estimator
    // is dominated by cross-component pairs.
    int agree = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticConfig config;
        config.d_h = 32;
        config.prefill_len = 256;
        config.decode_len = 512;
        config.n_components = 1;
        config.drift = 0.1f;
        config.seed = seed;
        Trace trace = generate(config);
        TokenId dec = trace.prefill_len;
        double early = mean_cosine_between(trace, 0, 256, dec, dec + 128);
        double late = mean_cosine_between(trace, 0, 256, dec + 384, dec + 512);
        if (late < early) {
            ++agree;
        }
    }
    CHECK(agree >= 4); // statistical over seeds
}

TEST_CASE("save/load round-trips bit-exactly") {
    SyntheticConfig config;
    config.d_h = 12;
    config.prefill_len = 96;
    config.decode_len = 32;
    config.seed = 77;
    Trace trace = generate(config);
    const std::string path = "roundtrip_trace.bin";
    save_trace(trace, path);
    Trace loaded = load_trace(path);
    CHECK(loaded.payload_equal(trace));
    std::remove(path.c_str());
}

TEST_CASE("trace file size follows the header arithmetic") {
    SyntheticConfig config;
    config.d_h = 128;
    config.prefill_len = 2048;
    config.decode_len = 2048;
    config.seed = 3;
    Trace trace = generate(config);
    const std::string path = "size_trace.bin";
    save_trace(trace, path);
    // keys+values are total x d each, queries are (total - prefill) x d.
    std::uintmax_t expected =
        36 + (static_cast<std::uintmax_t>(4096) * 128 * 2 + 2048 * 128) * 4;
    CHECK(std::filesystem::file_size(path) == expected);
    std::remove(path.c_str());
}

TEST_CASE("loader rejects corrupted and truncated files with byte offsets") {
    SyntheticConfig config;
    config.d_h = 8;
    config.prefill_len = 32;
    config.decode_len = 16;
    config.seed = 1;
    Trace trace = generate(config);
    const std::string path = "corrupt_trace.bin";

    SUBCASE("bad magic") {
        save_trace(trace, path);
        corrupt_byte(path, 0, 'X');
        CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("offset 0"), FormatError);
    }
    SUBCASE("bad version") {
        save_trace(trace, path);
        corrupt_byte(path, 8, 9);
        CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("version"), FormatError);
    }
    SUBCASE("bad encoding") {
        save_trace(trace, path);
        corrupt_byte(path, 32, 7);
        CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("encoding"), FormatError);
    }
    SUBCASE("truncated payload by one byte") {
        save_trace(trace, path);
        auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 1);
        CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("payload"), FormatError);
    }
    SUBCASE("trailing garbage") {
        save_trace(trace, path);
        std::ofstream f(path, std::ios::binary | std::ios::app);
        f.write("zz", 2);
        f.close();
        CHECK_THROWS_AS(load_trace(path), FormatError);
    }
    SUBCASE("non-finite payload element") {
        save_trace(trace, path);
        // 0x7FC00000 is a quiet NaN; poke it into the first key element.
        corrupt_byte(path, 36 + 3, static_cast<char>(0x7F));
        corrupt_byte(path, 36 + 2, static_cast<char>(0xC0));
        CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("non-finite"), FormatError);
    }
    SUBCASE("prefill larger than total") {
        save_trace(trace, path);
        corrupt_byte(path, 16, 127); // prefill_len low byte -> 127 > total 48
        CHECK_THROWS_AS(load_trace(path), FormatError);
    }
    std::remove(path.c_str());
}

TEST_CASE("config validation") {
    SyntheticConfig config;
    config.n_components = 0;
    CHECK_THROWS_AS(config.validate(), ArgumentError);
    config = SyntheticConfig{};
    config.persistence = 1.5f;
    CHECK_THROWS_AS(config.validate(), ArgumentError);
    config = SyntheticConfig{};
    config.noise_sigma = -1.0f;
    CHECK_THROWS_AS(config.validate(), ArgumentError);
}

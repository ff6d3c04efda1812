#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "starc/clustering.hpp"
#include "starc/rng.hpp"

using namespace starc;

namespace {

std::vector<float> random_rows(Rng& rng, std::int32_t rows, std::int32_t dim) {
    std::vector<float> data(static_cast<std::size_t>(rows) * dim);
    for (float& x : data) {
        x = static_cast<float>(rng.next_gaussian());
    }
    return data;
}

KVCache cache_from_keys(const std::vector<float>& keys, std::int32_t rows, std::int32_t dim,
                        Rng& rng) {
    std::vector<float> values = random_rows(rng, rows, dim);
    return KVCache::with_prefill({keys.data(), rows, dim}, {values.data(), rows, dim});
}

// Every token in [0, L) sits in exactly one cluster or in the unclustered buffer.
void check_partition(const ClusterStore& store, TokenId total_len) {
    std::vector<int> seen(total_len, 0);
    for (const auto& cluster : store.clusters()) {
        CHECK(!cluster.members.empty());
        CHECK(std::is_sorted(cluster.members.begin(), cluster.members.end()));
        for (TokenId m : cluster.members) {
            REQUIRE(m >= 0);
            REQUIRE(m < total_len);
            ++seen[m];
        }
    }
    for (TokenId m : store.unclustered()) {
        REQUIRE(m >= 0);
        REQUIRE(m < total_len);
        ++seen[m];
    }
    for (TokenId t = 0; t < total_len; ++t) {
        CHECK(seen[t] == 1);
    }
}

void check_centroids_are_means(const ClusterStore& store, const KVCache& cache, double tol) {
    for (const auto& cluster : store.clusters()) {
        std::vector<double> mean(cache.dim(), 0.0);
        for (TokenId m : cluster.members) {
            auto row = cache.key(m);
            for (std::int32_t d = 0; d < cache.dim(); ++d) {
                mean[d] += row[d];
            }
        }
        for (std::int32_t d = 0; d < cache.dim(); ++d) {
            mean[d] /= static_cast<double>(cluster.members.size());
            CHECK(std::fabs(mean[d] - cluster.centroid[d]) < tol);
        }
    }
}

} // namespace

TEST_CASE("kmeanspp_init with identical rows returns the shared vector") {
    std::vector<float> keys = {1, 2, 1, 2, 1, 2, 1, 2}; // 4 copies of (1,2)
    auto centroids = kmeanspp_init({keys.data(), 4, 2}, 1, 99);
    REQUIRE(centroids.size() == 1);
    CHECK(centroids[0] == HeadVector{1, 2});
}

TEST_CASE("kmeanspp_init separates antipodal groups") {
    // 8 copies of +u then 8 copies of -u.
    std::vector<float> keys;
    for (int i = 0; i < 8; ++i) {
        keys.insert(keys.end(), {0.6f, 0.8f});
    }
    for (int i = 0; i < 8; ++i) {
        keys.insert(keys.end(), {-0.6f, -0.8f});
    }
    for (std::uint64_t seed : {0ull, 1ull, 7ull, 1234ull}) {
        auto centroids = kmeanspp_init({keys.data(), 16, 2}, 2, seed);
        REQUIRE(centroids.size() == 2);
        // Brute-force group check: the two seeds must come from different antipodes.
        bool first_positive = centroids[0][0] > 0;
        bool second_positive = centroids[1][0] > 0;
        CHECK(first_positive != second_positive);
    }
}

TEST_CASE("kmeanspp_init is deterministic per seed") {
    Rng rng(31);
    auto keys = random_rows(rng, 16, 8);
    auto a = kmeanspp_init({keys.data(), 16, 8}, 4, 7);
    auto b = kmeanspp_init({keys.data(), 16, 8}, 4, 7);
    CHECK(a == b);
}

TEST_CASE("kmeanspp_init rejects infeasible k and zero-norm rows") {
    Rng rng(32);
    auto keys = random_rows(rng, 4, 3);
    CHECK_THROWS_AS(kmeanspp_init({keys.data(), 4, 3}, 5, 0), ArgumentError);
    CHECK_THROWS_AS(kmeanspp_init({keys.data(), 4, 3}, 0, 0), ArgumentError);
    std::vector<float> with_zero = keys;
    with_zero[3] = with_zero[4] = with_zero[5] = 0.0f;
    CHECK_THROWS_AS(kmeanspp_init({with_zero.data(), 4, 3}, 2, 0), DegenerateVectorError);
}

TEST_CASE("spherical_kmeans with k = rows forces singletons, even with duplicates") {
    std::vector<float> keys = {1, 0, 1, 0, 0, 1, 1, 0}; // rows 0, 1, 3 identical
    auto clusters = spherical_kmeans({keys.data(), 4, 2}, 4, 15, 5);
    REQUIRE(clusters.size() == 4);
    std::vector<bool> used(4, false);
    for (const auto& c : clusters) {
        REQUIRE(c.members.size() == 1);
        used[c.members[0]] = true;
        // Singleton centroid equals the member's key.
        auto key = MatrixView{keys.data(), 4, 2}.row(c.members[0]);
        CHECK(c.centroid[0] == key[0]);
        CHECK(c.centroid[1] == key[1]);
    }
    CHECK(std::all_of(used.begin(), used.end(), [](bool b) { return b; }));
}

TEST_CASE("spherical_kmeans keeps well-separated blobs apart") {
    // Two orthogonal unit centers, sigma = 0.1: separation is 14 sigma.
    Rng rng(0);
    const std::int32_t dim = 16;
    std::vector<float> keys;
    std::vector<int> blob_of;
    for (int b = 0; b < 2; ++b) {
        for (int i = 0; i < 32; ++i) {
            for (std::int32_t d = 0; d < dim; ++d) {
                float center = (b == 0 && d == 0) || (b == 1 && d == 1) ? 1.0f : 0.0f;
                keys.push_back(center + 0.1f * static_cast<float>(rng.next_gaussian()));
            }
            blob_of.push_back(b);
        }
    }
    auto clusters = spherical_kmeans({keys.data(), 64, dim}, 2, 15, 0);
    REQUIRE(clusters.size() == 2);
    for (const auto& c : clusters) {
        int first_blob = blob_of[c.members[0]];
        for (TokenId m : c.members) {
            CHECK(blob_of[m] == first_blob); // zero cross-blob assignments
        }
    }
}

TEST_CASE("spherical_kmeans objective is non-increasing per iteration") {
    Rng rng(3);
    SUBCASE("64 rows, k=2, seed=3") {
        auto keys = random_rows(rng, 64, 12);
        KMeansTrace trace;
        spherical_kmeans({keys.data(), 64, 12}, 2, 15, 3, &trace);
        REQUIRE(trace.iterations >= 1);
        for (std::size_t i = 1; i < trace.objective.size(); ++i) {
            CHECK(trace.objective[i] <= trace.objective[i - 1] + 1e-9);
        }
    }
    SUBCASE("randomized instances") {
        for (int trial = 0; trial < 10; ++trial) {
            std::int32_t rows = 32 + static_cast<std::int32_t>(rng.next_below(96));
            std::int32_t k = 1 + static_cast<std::int32_t>(rng.next_below(8));
            auto keys = random_rows(rng, rows, 8);
            KMeansTrace trace;
            spherical_kmeans({keys.data(), rows, 8}, k, 15, trial, &trace);
            for (std::size_t i = 1; i < trace.objective.size(); ++i) {
                CHECK(trace.objective[i] <= trace.objective[i - 1] + 1e-9);
            }
        }
    }
}

TEST_CASE("spherical_kmeans covers every row exactly once") {
    Rng rng(4);
    auto keys = random_rows(rng, 100, 6);
    auto clusters = spherical_kmeans({keys.data(), 100, 6}, 7, 15, 11);
    std::vector<int> seen(100, 0);
    for (const auto& c : clusters) {
        for (TokenId m : c.members) {
            ++seen[m];
        }
    }
    CHECK(std::count(seen.begin(), seen.end(), 1) == 100);
}

TEST_CASE("spherical_kmeans rejects an empty slice") {
    std::vector<float> keys;
    CHECK_THROWS_AS(spherical_kmeans({keys.data(), 0, 4}, 1, 15, 0), ArgumentError);
}

TEST_CASE("initial_cluster uses prefill_len / divisor clusters") {
    Rng rng(6);
    SUBCASE("2048 prefill tokens at divisor 32 give 64 clusters") {
        auto keys = random_rows(rng, 2048, 16);
        KVCache cache = cache_from_keys(keys, 2048, 16, rng);
        ClusterStore store(128, 32);
        store.initial_cluster(cache, 1);
        CHECK(store.clusters().size() == 64);
        CHECK(store.unclustered().empty());
        check_partition(store, 2048);
    }
    SUBCASE("16 prefill tokens at divisor 32 clamp to one cluster") {
        auto keys = random_rows(rng, 16, 8);
        KVCache cache = cache_from_keys(keys, 16, 8, rng);
        ClusterStore store(128, 32);
        store.initial_cluster(cache, 1);
        CHECK(store.clusters().size() == 1);
    }
    SUBCASE("96 prefill tokens at divisor 32 partition into 3 clusters") {
        auto keys = random_rows(rng, 96, 8);
        KVCache cache = cache_from_keys(keys, 96, 8, rng);
        ClusterStore store(128, 32);
        store.initial_cluster(cache, 9);
        CHECK(store.clusters().size() == 3);
        check_partition(store, 96);
    }
}

TEST_CASE("initial_cluster rejects a second call and empty prefill") {
    Rng rng(7);
    auto keys = random_rows(rng, 64, 8);
    KVCache cache = cache_from_keys(keys, 64, 8, rng);
    ClusterStore store(128, 32);
    store.initial_cluster(cache, 1);
    CHECK_THROWS_AS(store.initial_cluster(cache, 1), StateError);

    KVCache no_prefill(8);
    ClusterStore fresh(128, 32);
    CHECK_THROWS_AS(fresh.initial_cluster(no_prefill, 1), ArgumentError);
}

TEST_CASE("append_token buffers below the interval and flushes at it") {
    Rng rng(8);
    auto keys = random_rows(rng, 64, 8);
    KVCache cache = cache_from_keys(keys, 64, 8, rng);
    ClusterStore store(128, 32);
    store.initial_cluster(cache, 1);
    std::size_t initial_clusters = store.clusters().size();

    SUBCASE("127 appends leave the buffer unflushed") {
        for (int i = 0; i < 127; ++i) {
            auto kv = random_rows(rng, 2, 8);
            store.append_token(cache, {kv.data(), 8}, {kv.data() + 8, 8}, mix_seed(1, i));
        }
        CHECK(store.unclustered().size() == 127);
        CHECK(store.clusters().size() == initial_clusters);
    }
    SUBCASE("the 128th append makes 128/32 = 4 new clusters and empties the buffer") {
        auto before = store.clusters();
        for (int i = 0; i < 128; ++i) {
            auto kv = random_rows(rng, 2, 8);
            store.append_token(cache, {kv.data(), 8}, {kv.data() + 8, 8}, mix_seed(1, i));
        }
        CHECK(store.unclustered().empty());
        CHECK(store.clusters().size() == initial_clusters + 4);
        check_partition(store, cache.size());
        // Earlier generations compare deep-equal after the flush.
        for (std::size_t i = 0; i < before.size(); ++i) {
            CHECK(store.clusters()[i] == before[i]);
        }
        // The new generation covers exactly the flushed tokens.
        for (std::size_t i = before.size(); i < store.clusters().size(); ++i) {
            CHECK(store.clusters()[i].generation == 1);
            for (TokenId m : store.clusters()[i].members) {
                CHECK(m >= 64);
                CHECK(m < 64 + 128);
            }
        }
    }
}

TEST_CASE("append_token requires an initialized store") {
    KVCache cache(4);
    ClusterStore store(8, 4);
    HeadVector k{1, 2, 3, 4};
    CHECK_THROWS_AS(store.append_token(cache, k, k, 0), StateError);
}

TEST_CASE("partition and centroid invariants hold across random op sequences") {
    Rng rng(10);
    for (int trial = 0; trial < 3; ++trial) {
        std::int32_t prefill = 64 + static_cast<std::int32_t>(rng.next_below(192));
        std::int32_t interval = 16 + static_cast<std::int32_t>(rng.next_below(48));
        std::int32_t divisor = 4 + static_cast<std::int32_t>(rng.next_below(28));
        std::int32_t appends = static_cast<std::int32_t>(rng.next_below(256));

        auto keys = random_rows(rng, prefill, 8);
        KVCache cache = cache_from_keys(keys, prefill, 8, rng);
        ClusterStore store(interval, divisor);
        store.initial_cluster(cache, trial);
        for (std::int32_t i = 0; i < appends; ++i) {
            auto kv = random_rows(rng, 2, 8);
            store.append_token(cache, {kv.data(), 8}, {kv.data() + 8, 8}, mix_seed(trial, i));
        }
        check_partition(store, cache.size());
        check_centroids_are_means(store, cache, 1e-5);
    }
}

TEST_CASE("replaying a prefix of the op log yields a prefix of the cluster list") {
    Rng rng(20);
    const std::int32_t prefill = 96;
    const std::int32_t appends = 200;
    auto keys = random_rows(rng, prefill, 8);
    auto values = random_rows(rng, prefill, 8);
    std::vector<float> stream = random_rows(rng, appends, 16); // key+value pairs

    auto build = [&](std::int32_t n_appends) {
        KVCache cache = KVCache::with_prefill({keys.data(), prefill, 8},
                                              {values.data(), prefill, 8});
        ClusterStore store(32, 8);
        store.initial_cluster(cache, 42);
        for (std::int32_t i = 0; i < n_appends; ++i) {
            const float* kv = stream.data() + static_cast<std::size_t>(i) * 16;
            store.append_token(cache, {kv, 8}, {kv + 8, 8}, mix_seed(42, i));
        }
        return store;
    };

    ClusterStore full = build(appends);
    for (std::int32_t cut : {0, 31, 32, 100, 199}) {
        ClusterStore partial = build(cut);
        REQUIRE(partial.clusters().size() <= full.clusters().size());
        for (std::size_t i = 0; i < partial.clusters().size(); ++i) {
            CHECK(partial.clusters()[i] == full.clusters()[i]);
        }
    }
}

TEST_CASE("clustering is deterministic for identical inputs and seeds") {
    Rng rng(21);
    const std::int32_t prefill = 128;
    auto keys = random_rows(rng, prefill, 8);
    auto values = random_rows(rng, prefill, 8);
    auto stream = random_rows(rng, 96, 16);

    auto build = [&]() {
        KVCache cache = KVCache::with_prefill({keys.data(), prefill, 8},
                                              {values.data(), prefill, 8});
        ClusterStore store(24, 6);
        store.initial_cluster(cache, 5);
        for (std::int32_t i = 0; i < 96; ++i) {
            const float* kv = stream.data() + static_cast<std::size_t>(i) * 16;
            store.append_token(cache, {kv, 8}, {kv + 8, 8}, mix_seed(5, i));
        }
        return store;
    };
    CHECK(build() == build());
}

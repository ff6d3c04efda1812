#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "starc/types.hpp"

namespace starc {

// Iteration cap that is sufficient for convergence at these cluster sizes.
inline constexpr int kDefaultKMeansIters = 15;
inline constexpr std::int32_t kDefaultClusterInterval = 128;
inline constexpr std::int32_t kDefaultTokensPerCluster = 32;

struct Cluster {
    std::int32_t id = 0;
    std::int32_t generation = 0;
    std::vector<TokenId> members; // sorted ascending, never empty
    HeadVector centroid;          // unnormalized arithmetic mean of member keys

    bool operator==(const Cluster&) const = default;
};

// Per-iteration diagnostics of one spherical_kmeans call.
struct KMeansTrace {
    std::vector<double> objective; // sum_i (1 - cos(key_i, centroid_of(i))) per assignment round
    int iterations = 0;
    bool converged_early = false;
};

// K-means++ seeding with d(a,b) = 1 - cosine(a,b) as the weighting distance,
// classic squared-distance weights. Returns k centroids copied from k distinct
// input rows; deterministic for a fixed seed.
std::vector<HeadVector> kmeanspp_init(MatrixView keys, std::int32_t k, std::uint64_t seed);

// Cosine k-means over the given rows: assignment maximizes cosine similarity,
// update takes the arithmetic mean of member rows. Runs at most `iters` rounds,
// exiting early once assignments stabilize. Returned clusters have
// id = 0..k-1, generation = 0, and member indices local to the slice.
std::vector<Cluster> spherical_kmeans(MatrixView keys, std::int32_t k, int iters,
                                      std::uint64_t seed, KMeansTrace* trace = nullptr);

// Append-only clustering state: one generation per clustering pass, plus the
// buffer of not-yet-clustered recent tokens. Earlier generations are never
// revisited once written.
class ClusterStore {
public:
    explicit ClusterStore(std::int32_t interval = kDefaultClusterInterval,
                          std::int32_t tokens_per_cluster = kDefaultTokensPerCluster);

    // Clusters the prefill keys with k = max(1, prefill_len / tokens_per_cluster)
    // as generation 0. The store must be empty.
    void initial_cluster(const KVCache& cache, std::uint64_t seed);

    // Appends the pair to the cache and buffers the token; once `interval`
    // tokens are buffered, clusters exactly those tokens as a new generation.
    void append_token(KVCache& cache, std::span<const float> key, std::span<const float> value,
                      std::uint64_t seed);

    bool initialized() const { return initialized_; }
    const std::vector<Cluster>& clusters() const { return clusters_; }
    std::span<const TokenId> unclustered() const { return unclustered_; }
    std::int32_t interval() const { return interval_; }
    std::int32_t tokens_per_cluster() const { return tokens_per_cluster_; }
    std::int32_t generations() const { return next_generation_; }

    bool operator==(const ClusterStore&) const = default;

private:
    void absorb(std::vector<Cluster>&& fresh, TokenId base);

    std::int32_t interval_;
    std::int32_t tokens_per_cluster_;
    bool initialized_ = false;
    std::int32_t next_generation_ = 0;
    std::vector<Cluster> clusters_;
    std::vector<TokenId> unclustered_;
};

} // namespace starc

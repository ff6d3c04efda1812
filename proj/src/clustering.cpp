#include "starc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "starc/kernels.hpp"
#include "starc/rng.hpp"

namespace starc {

namespace {

double dot_d(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double norm_d(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) {
        acc += static_cast<double>(x) * static_cast<double>(x);
    }
    return std::sqrt(acc);
}

// 1 - cosine(a, b); norms precomputed by the caller.
double cos_dist(std::span<const float> a, double na, std::span<const float> b, double nb) {
    return 1.0 - dot_d(a, b) / (na * nb);
}

std::vector<double> row_norms_checked(MatrixView keys) {
    std::vector<double> norms(keys.rows);
    for (std::int32_t i = 0; i < keys.rows; ++i) {
        norms[i] = norm_d(keys.row(i));
        if (norms[i] == 0.0) {
            throw DegenerateVectorError("clustering: key row " + std::to_string(i) +
                                        " has zero norm");
        }
    }
    return norms;
}

// Moves the point farthest from each empty centroid out of a cluster that can
// spare it, so every one of the k clusters ends the round non-empty.
void repair_empty_clusters(MatrixView keys, std::span<const double> key_norms,
                           MatrixView centroids, std::span<std::int32_t> assign,
                           std::span<std::int32_t> counts) {
    for (std::int32_t c = 0; c < centroids.rows; ++c) {
        if (counts[c] != 0) {
            continue;
        }
        auto centroid = centroids.row(c);
        double cnorm = norm_d(centroid);
        std::int32_t farthest = -1;
        double farthest_dist = -std::numeric_limits<double>::infinity();
        for (std::int32_t i = 0; i < keys.rows; ++i) {
            if (counts[assign[i]] < 2) {
                continue;
            }
            double d = cnorm > 0.0 ? cos_dist(keys.row(i), key_norms[i], centroid, cnorm) : 1.0;
            if (d > farthest_dist) {
                farthest_dist = d;
                farthest = i;
            }
        }
        // k <= rows guarantees a donor cluster with at least two members.
        --counts[assign[farthest]];
        assign[farthest] = c;
        counts[c] = 1;
    }
}

} // namespace

std::vector<HeadVector> kmeanspp_init(MatrixView keys, std::int32_t k, std::uint64_t seed) {
    if (keys.rows < 1) {
        throw ArgumentError("kmeanspp_init: empty input");
    }
    if (k < 1 || k > keys.rows) {
        throw ArgumentError("kmeanspp_init: k = " + std::to_string(k) + " infeasible for " +
                            std::to_string(keys.rows) + " rows");
    }
    auto norms = row_norms_checked(keys);

    Rng rng(seed);
    std::vector<bool> chosen(keys.rows, false);
    std::vector<std::int32_t> picks;
    picks.reserve(k);

    std::int32_t first = static_cast<std::int32_t>(rng.next_below(keys.rows));
    picks.push_back(first);
    chosen[first] = true;

    // d2[i]: squared cosine distance to the nearest chosen seed.
    std::vector<double> d2(keys.rows);
    auto refresh = [&](std::int32_t new_pick) {
        auto c = keys.row(new_pick);
        double cn = norms[new_pick];
        for (std::int32_t i = 0; i < keys.rows; ++i) {
            double d = cos_dist(keys.row(i), norms[i], c, cn);
            double sq = d * d;
            if (picks.size() == 1 || sq < d2[i]) {
                d2[i] = sq;
            }
        }
    };
    refresh(first);

    while (static_cast<std::int32_t>(picks.size()) < k) {
        double total = 0.0;
        for (std::int32_t i = 0; i < keys.rows; ++i) {
            total += chosen[i] ? 0.0 : d2[i];
        }
        std::int32_t pick = -1;
        if (total > 0.0 && std::isfinite(total)) {
            double r = rng.next_double() * total;
            double cum = 0.0;
            for (std::int32_t i = 0; i < keys.rows; ++i) {
                if (chosen[i]) {
                    continue;
                }
                cum += d2[i];
                if (cum > r) {
                    pick = i;
                    break;
                }
            }
        }
        if (pick < 0) {
            // All residual weights vanished (duplicate rows); take the lowest unchosen row.
            for (std::int32_t i = 0; i < keys.rows; ++i) {
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            }
        }
        picks.push_back(pick);
        chosen[pick] = true;
        refresh(pick);
    }

    std::vector<HeadVector> centroids;
    centroids.reserve(k);
    for (std::int32_t p : picks) {
        auto row = keys.row(p);
        centroids.emplace_back(row.begin(), row.end());
    }
    return centroids;
}

std::vector<Cluster> spherical_kmeans(MatrixView keys, std::int32_t k, int iters,
                                      std::uint64_t seed, KMeansTrace* trace) {
    if (keys.rows < 1) {
        throw ArgumentError("spherical_kmeans: empty input");
    }
    if (iters < 1) {
        throw ArgumentError("spherical_kmeans: iters must be >= 1");
    }
    auto seeds = kmeanspp_init(keys, k, seed); // validates k and row norms
    auto key_norms = row_norms_checked(keys);

    std::int32_t cols = keys.cols;

    // Iterations run on direction vectors (spherical k-means proper): the
    // update takes the mean of the normalized member keys, which is the
    // direction maximizing the summed cosine and keeps the objective
    // non-increasing even when key norms vary. The returned centroid is the
    // arithmetic mean of the raw member keys.
    std::vector<float> directions(static_cast<std::size_t>(keys.rows) * cols);
    for (std::int32_t i = 0; i < keys.rows; ++i) {
        auto row = keys.row(i);
        float* out = directions.data() + static_cast<std::size_t>(i) * cols;
        for (std::int32_t d = 0; d < cols; ++d) {
            out[d] = static_cast<float>(row[d] / key_norms[i]);
        }
    }
    MatrixView direction_view{directions.data(), keys.rows, cols};

    std::vector<float> centroids(static_cast<std::size_t>(k) * cols);
    for (std::int32_t c = 0; c < k; ++c) {
        std::copy(seeds[c].begin(), seeds[c].end(),
                  centroids.begin() + static_cast<std::size_t>(c) * cols);
    }
    MatrixView centroid_view{centroids.data(), k, cols};

    std::vector<std::int32_t> assign(keys.rows, -1);
    std::vector<std::int32_t> prev(keys.rows, -1);
    std::vector<double> dist(keys.rows);
    std::vector<std::int32_t> counts(k, 0);

    if (trace) {
        *trace = KMeansTrace{};
    }

    for (int it = 0; it < iters; ++it) {
        // Cosine ignores scale, so assigning raw keys against the direction
        // centroids matches assigning normalized keys.
        kernels::assign_nearest_cosine(keys, centroid_view, assign, dist);

        std::fill(counts.begin(), counts.end(), 0);
        for (std::int32_t a : assign) {
            ++counts[a];
        }
        double objective = 0.0;
        for (double d : dist) {
            objective += d;
        }
        if (trace) {
            trace->objective.push_back(objective);
            trace->iterations = it + 1;
        }

        repair_empty_clusters(keys, key_norms, centroid_view, assign, counts);

        if (assign == prev) {
            if (trace) {
                trace->converged_early = true;
            }
            break;
        }

        kernels::centroid_means(direction_view, assign, k, centroids, counts);
        for (std::int32_t c = 0; c < k; ++c) {
            if (norm_d(centroid_view.row(c)) == 0.0) {
                // Perfectly antipodal members; fall back to the first member's key.
                for (std::int32_t i = 0; i < keys.rows; ++i) {
                    if (assign[i] == c) {
                        auto row = keys.row(i);
                        std::copy(row.begin(), row.end(),
                                  centroids.begin() + static_cast<std::size_t>(c) * cols);
                        break;
                    }
                }
                std::fprintf(stderr,
                             "spherical_kmeans: cluster %d mean has zero norm, "
                             "re-seeded from its first member\n",
                             c);
            }
        }
        prev = assign;
    }

    // Stored centroids are the arithmetic means of the raw member keys.
    std::vector<float> means(static_cast<std::size_t>(k) * cols);
    kernels::centroid_means(keys, assign, k, means, counts);
    MatrixView mean_view{means.data(), k, cols};
    for (std::int32_t c = 0; c < k; ++c) {
        if (norm_d(mean_view.row(c)) == 0.0) {
            for (std::int32_t i = 0; i < keys.rows; ++i) {
                if (assign[i] == c) {
                    auto row = keys.row(i);
                    std::copy(row.begin(), row.end(),
                              means.begin() + static_cast<std::size_t>(c) * cols);
                    break;
                }
            }
            std::fprintf(stderr,
                         "spherical_kmeans: cluster %d mean has zero norm, "
                         "re-seeded from its first member\n",
                         c);
        }
    }

    std::vector<Cluster> result(k);
    for (std::int32_t c = 0; c < k; ++c) {
        result[c].id = c;
        result[c].generation = 0;
        auto row = mean_view.row(c);
        result[c].centroid.assign(row.begin(), row.end());
    }
    for (std::int32_t i = 0; i < keys.rows; ++i) {
        result[assign[i]].members.push_back(i); // ascending by construction
    }
    return result;
}

ClusterStore::ClusterStore(std::int32_t interval, std::int32_t tokens_per_cluster)
    : interval_(interval), tokens_per_cluster_(tokens_per_cluster) {
    if (interval < 1) {
        throw ArgumentError("ClusterStore: interval must be >= 1");
    }
    if (tokens_per_cluster < 1) {
        throw ArgumentError("ClusterStore: tokens_per_cluster must be >= 1");
    }
}

void ClusterStore::initial_cluster(const KVCache& cache, std::uint64_t seed) {
    if (initialized_) {
        throw StateError("ClusterStore: already initialized");
    }
    if (cache.prefill_len() < 1) {
        throw ArgumentError("ClusterStore: cache has no prefill tokens");
    }
    TokenId n = cache.prefill_len();
    std::int32_t k = std::max<std::int32_t>(1, n / tokens_per_cluster_);
    auto fresh = spherical_kmeans(cache.keys_slice(0, n), k, kDefaultKMeansIters, seed);
    absorb(std::move(fresh), 0);
    for (TokenId t = n; t < cache.size(); ++t) {
        unclustered_.push_back(t);
    }
    initialized_ = true;
}

void ClusterStore::append_token(KVCache& cache, std::span<const float> key,
                                std::span<const float> value, std::uint64_t seed) {
    if (!initialized_) {
        throw StateError("ClusterStore: not initialized");
    }
    cache.append(key, value);
    unclustered_.push_back(cache.size() - 1);
    if (static_cast<std::int32_t>(unclustered_.size()) == interval_) {
        TokenId base = unclustered_.front(); // buffered indices are contiguous
        std::int32_t k = std::max<std::int32_t>(1, interval_ / tokens_per_cluster_);
        auto fresh =
            spherical_kmeans(cache.keys_slice(base, base + interval_), k, kDefaultKMeansIters,
                             seed);
        absorb(std::move(fresh), base);
        unclustered_.clear();
    }
}

void ClusterStore::absorb(std::vector<Cluster>&& fresh, TokenId base) {
    std::int32_t generation = next_generation_++;
    for (auto& cluster : fresh) {
        cluster.id = static_cast<std::int32_t>(clusters_.size());
        cluster.generation = generation;
        for (TokenId& m : cluster.members) {
            m += base;
        }
        clusters_.push_back(std::move(cluster));
    }
}

} // namespace starc

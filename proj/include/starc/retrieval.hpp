#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "starc/clustering.hpp"
#include "starc/types.hpp"

namespace starc {

// Token budget B of a sparsity policy.
struct RetrievalBudget {
    TokenId tokens = 1;
};

struct ClusterScore {
    std::int32_t cluster_id;
    float score; // dot(q, centroid)
};

// One score per cluster, in cluster-id order.
std::vector<ClusterScore> score_clusters(std::span<const float> q, const ClusterStore& store);

struct ClusterSelection {
    std::vector<std::int32_t> ranked_cluster_ids;  // descending score, ties to lower id
    SelectionMask included_tokens;                 // <= B tokens from selected clusters
    std::optional<std::int32_t> truncated_cluster_id;
    std::vector<TokenId> recent_tokens;            // unclustered tokens, outside the budget

    // included_tokens plus recent_tokens, as one sorted mask.
    SelectionMask attended() const;
};

// Cluster-granularity retrieval: rank clusters by centroid score, take whole
// clusters while they fit, truncate the first cluster that would overflow B
// by keeping its lowest member indices, and carry all unclustered recent
// tokens outside the budget.
ClusterSelection select_starc(std::span<const float> q, const ClusterStore& store,
                              RetrievalBudget budget);

// Baselines. Each returns a sorted mask of at most B tokens (select_full: all).
SelectionMask select_full(const KVCache& cache);
SelectionMask select_window(const KVCache& cache, RetrievalBudget budget);
SelectionMask select_token_oracle(std::span<const float> q, const KVCache& cache,
                                  RetrievalBudget budget);

// Top-r-component score approximation: scores use only the r components of q
// with the largest magnitude (ties to the lowest component index).
SelectionMask select_sparq(std::span<const float> q, const KVCache& cache, std::int32_t r,
                           RetrievalBudget budget);

// Positional pages with element-wise min/max key metadata.
struct PageIndex {
    std::int32_t page_size = 16;
    TokenId total_tokens = 0;
    std::vector<float> min_keys; // num_pages x d_h, row-major
    std::vector<float> max_keys;
    std::int32_t dim = 0;

    std::int32_t num_pages() const;
    std::int32_t page_len(std::int32_t page) const; // page_size except possibly the last
    std::span<const float> min_key(std::int32_t page) const;
    std::span<const float> max_key(std::int32_t page) const;
};

PageIndex build_page_index(const KVCache& cache, std::int32_t page_size);

// Page-granularity retrieval: page score = sum_d max(q_d*min_d, q_d*max_d),
// pages taken in descending score order until B tokens, last page truncated
// by lowest indices. A trailing short page has no finalized metadata and
// ranks after all complete pages.
SelectionMask select_page_quest(std::span<const float> q, const PageIndex& index,
                                RetrievalBudget budget);

} // namespace starc

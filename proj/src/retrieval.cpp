#include "starc/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "starc/kernels.hpp"

namespace starc {

namespace {

void check_budget(RetrievalBudget budget) {
    if (budget.tokens < 1) {
        throw ArgumentError("retrieval: budget must be >= 1");
    }
}

// Indices of the top-n scores, ties to the lower index; returned ascending.
std::vector<TokenId> top_n_by_score(std::span<const float> scores, TokenId n) {
    std::vector<TokenId> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](TokenId a, TokenId b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;
    };
    n = std::min<TokenId>(n, static_cast<TokenId>(order.size()));
    std::partial_sort(order.begin(), order.begin() + n, order.end(), better);
    order.resize(n);
    std::sort(order.begin(), order.end());
    return order;
}

} // namespace

std::vector<ClusterScore> score_clusters(std::span<const float> q, const ClusterStore& store) {
    if (!store.initialized() || store.clusters().empty()) {
        throw StateError("score_clusters: cluster store not initialized");
    }
    const auto& clusters = store.clusters();
    std::int32_t dim = static_cast<std::int32_t>(clusters.front().centroid.size());
    if (static_cast<std::int32_t>(q.size()) != dim) {
        throw DimensionError("score_clusters: query dimension mismatch");
    }
    std::int32_t k = static_cast<std::int32_t>(clusters.size());
    std::vector<float> centroids(static_cast<std::size_t>(k) * dim);
    for (std::int32_t c = 0; c < k; ++c) {
        std::copy(clusters[c].centroid.begin(), clusters[c].centroid.end(),
                  centroids.begin() + static_cast<std::size_t>(c) * dim);
    }
    std::vector<float> scores(k);
    kernels::dot_scores({centroids.data(), k, dim}, q, scores);

    std::vector<ClusterScore> result(k);
    for (std::int32_t c = 0; c < k; ++c) {
        result[c] = {c, scores[c]};
    }
    return result;
}

SelectionMask ClusterSelection::attended() const {
    SelectionMask mask = included_tokens;
    mask.indices.insert(mask.indices.end(), recent_tokens.begin(), recent_tokens.end());
    std::sort(mask.indices.begin(), mask.indices.end());
    return mask;
}

ClusterSelection select_starc(std::span<const float> q, const ClusterStore& store,
                              RetrievalBudget budget) {
    check_budget(budget);
    auto scores = score_clusters(q, store);

    ClusterSelection sel;
    sel.ranked_cluster_ids.resize(scores.size());
    std::iota(sel.ranked_cluster_ids.begin(), sel.ranked_cluster_ids.end(), 0);
    std::sort(sel.ranked_cluster_ids.begin(), sel.ranked_cluster_ids.end(),
              [&](std::int32_t a, std::int32_t b) {
                  if (scores[a].score != scores[b].score) {
                      return scores[a].score > scores[b].score;
                  }
                  return a < b;
              });

    const auto& clusters = store.clusters();
    TokenId taken = 0;
    for (std::int32_t id : sel.ranked_cluster_ids) {
        if (taken == budget.tokens) {
            break;
        }
        const auto& members = clusters[id].members;
        TokenId size = static_cast<TokenId>(members.size());
        if (taken + size <= budget.tokens) {
            sel.included_tokens.indices.insert(sel.included_tokens.indices.end(), members.begin(),
                                               members.end());
            taken += size;
        } else {
            TokenId keep = budget.tokens - taken; // lowest member indices fill the budget exactly
            sel.included_tokens.indices.insert(sel.included_tokens.indices.end(), members.begin(),
                                               members.begin() + keep);
            sel.truncated_cluster_id = id;
            taken = budget.tokens;
            break;
        }
    }
    std::sort(sel.included_tokens.indices.begin(), sel.included_tokens.indices.end());

    auto recent = store.unclustered();
    sel.recent_tokens.assign(recent.begin(), recent.end());
    return sel;
}

SelectionMask select_full(const KVCache& cache) {
    SelectionMask mask;
    mask.indices.resize(cache.size());
    std::iota(mask.indices.begin(), mask.indices.end(), 0);
    return mask;
}

SelectionMask select_window(const KVCache& cache, RetrievalBudget budget) {
    check_budget(budget);
    TokenId len = cache.size();
    TokenId first = std::max<TokenId>(0, len - budget.tokens);
    SelectionMask mask;
    mask.indices.resize(len - first);
    std::iota(mask.indices.begin(), mask.indices.end(), first);
    return mask;
}

SelectionMask select_token_oracle(std::span<const float> q, const KVCache& cache,
                                  RetrievalBudget budget) {
    check_budget(budget);
    if (cache.size() < 1) {
        throw ArgumentError("select_token_oracle: empty cache");
    }
    if (static_cast<std::int32_t>(q.size()) != cache.dim()) {
        throw DimensionError("select_token_oracle: query dimension mismatch");
    }
    std::vector<float> scores(cache.size());
    kernels::dot_scores(cache.keys_view(), q, scores);
    return SelectionMask{top_n_by_score(scores, budget.tokens)};
}

SelectionMask select_sparq(std::span<const float> q, const KVCache& cache, std::int32_t r,
                           RetrievalBudget budget) {
    check_budget(budget);
    if (r < 1 || r > cache.dim()) {
        throw ArgumentError("select_sparq: r = " + std::to_string(r) + " outside [1, " +
                            std::to_string(cache.dim()) + "]");
    }
    if (static_cast<std::int32_t>(q.size()) != cache.dim()) {
        throw DimensionError("select_sparq: query dimension mismatch");
    }
    // r components of q with the largest magnitude, ties to the lowest index.
    std::vector<std::int32_t> dims(q.size());
    std::iota(dims.begin(), dims.end(), 0);
    std::partial_sort(dims.begin(), dims.begin() + r, dims.end(),
                      [&](std::int32_t a, std::int32_t b) {
                          float ma = std::fabs(q[a]);
                          float mb = std::fabs(q[b]);
                          if (ma != mb) {
                              return ma > mb;
                          }
                          return a < b;
                      });
    dims.resize(r);
    std::sort(dims.begin(), dims.end()); // ascending, so accumulation order matches dot_scores

    std::vector<float> scores(cache.size());
    kernels::subset_scores(cache.keys_view(), q, dims, scores);
    return SelectionMask{top_n_by_score(scores, budget.tokens)};
}

std::int32_t PageIndex::num_pages() const {
    if (total_tokens == 0) {
        return 0;
    }
    return (total_tokens + page_size - 1) / page_size;
}

std::int32_t PageIndex::page_len(std::int32_t page) const {
    TokenId begin = page * page_size;
    return std::min<TokenId>(page_size, total_tokens - begin);
}

std::span<const float> PageIndex::min_key(std::int32_t page) const {
    return {min_keys.data() + static_cast<std::size_t>(page) * dim, static_cast<std::size_t>(dim)};
}

std::span<const float> PageIndex::max_key(std::int32_t page) const {
    return {max_keys.data() + static_cast<std::size_t>(page) * dim, static_cast<std::size_t>(dim)};
}

PageIndex build_page_index(const KVCache& cache, std::int32_t page_size) {
    if (page_size < 1) {
        throw ArgumentError("build_page_index: page_size must be >= 1");
    }
    PageIndex index;
    index.page_size = page_size;
    index.total_tokens = cache.size();
    index.dim = cache.dim();
    std::int32_t pages = index.num_pages();
    index.min_keys.resize(static_cast<std::size_t>(pages) * cache.dim());
    index.max_keys.resize(static_cast<std::size_t>(pages) * cache.dim());
    if (pages > 0) {
        kernels::page_minmax(cache.keys_view(), page_size, index.min_keys, index.max_keys);
    }
    return index;
}

SelectionMask select_page_quest(std::span<const float> q, const PageIndex& index,
                                RetrievalBudget budget) {
    check_budget(budget);
    if (static_cast<std::int32_t>(q.size()) != index.dim && index.num_pages() > 0) {
        throw DimensionError("select_page_quest: query dimension mismatch");
    }
    std::int32_t pages = index.num_pages();
    bool short_tail = pages > 0 && index.page_len(pages - 1) < index.page_size;
    std::int32_t scored_pages = short_tail ? pages - 1 : pages;

    std::vector<float> scores(scored_pages);
    for (std::int32_t p = 0; p < scored_pages; ++p) {
        auto mn = index.min_key(p);
        auto mx = index.max_key(p);
        double acc = 0.0;
        for (std::int32_t d = 0; d < index.dim; ++d) {
            double qd = q[d];
            acc += std::max(qd * mn[d], qd * mx[d]);
        }
        scores[p] = static_cast<float>(acc);
    }

    std::vector<std::int32_t> order(scored_pages);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;
    });
    if (short_tail) {
        // The in-flight tail page has no finalized min/max metadata; it joins
        // selection only after every complete page.
        order.push_back(pages - 1);
    }

    SelectionMask mask;
    TokenId taken = 0;
    for (std::int32_t p : order) {
        if (taken == budget.tokens) {
            break;
        }
        TokenId begin = p * index.page_size;
        TokenId len = index.page_len(p);
        TokenId keep = std::min<TokenId>(len, budget.tokens - taken);
        for (TokenId t = 0; t < keep; ++t) {
            mask.indices.push_back(begin + t);
        }
        taken += keep;
        if (keep < len) {
            break; // truncated the final page
        }
    }
    std::sort(mask.indices.begin(), mask.indices.end());
    return mask;
}

} // namespace starc

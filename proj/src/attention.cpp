#include "starc/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "starc/kernels.hpp"

namespace starc {

AttentionOutput sparse_attend(std::span<const float> q, const KVCache& cache,
                              const SelectionMask& mask) {
    if (mask.empty()) {
        throw ArgumentError("sparse_attend: empty selection");
    }
    mask.validate(cache.size());
    if (static_cast<std::int32_t>(q.size()) != cache.dim()) {
        throw DimensionError("sparse_attend: query dimension mismatch");
    }

    AttentionOutput out;
    out.tokens = mask.indices;
    out.weights.resize(mask.size());

    double scale = 1.0 / std::sqrt(static_cast<double>(cache.dim()));
    for (std::size_t i = 0; i < mask.size(); ++i) {
        out.weights[i] = static_cast<float>(dot(q, cache.key(mask.indices[i])) * scale);
    }
    kernels::softmax_inplace(out.weights);

    out.out.resize(cache.dim());
    kernels::weighted_sum_rows(cache.values_view(), out.tokens, out.weights, out.out);
    return out;
}

AttentionOutput dense_attend(std::span<const float> q, const KVCache& cache) {
    SelectionMask all;
    all.indices.resize(cache.size());
    std::iota(all.indices.begin(), all.indices.end(), 0);
    return sparse_attend(q, cache, all);
}

double recall_rate(const SelectionMask& mask, std::span<const float> q, const KVCache& cache,
                   RetrievalBudget budget) {
    if (budget.tokens < 1) {
        throw ArgumentError("recall_rate: budget must be >= 1");
    }
    if (cache.size() < budget.tokens) {
        throw ArgumentError("recall_rate: cache shorter than budget");
    }
    mask.validate(cache.size());

    // Pre-softmax logits order tokens identically to attention weights.
    SelectionMask top = select_token_oracle(q, cache, budget);
    std::size_t hits = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < mask.indices.size() && j < top.indices.size()) {
        if (mask.indices[i] == top.indices[j]) {
            ++hits;
            ++i;
            ++j;
        } else if (mask.indices[i] < top.indices[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(budget.tokens);
}

double output_error(const AttentionOutput& a, const AttentionOutput& b) {
    if (a.out.size() != b.out.size()) {
        throw DimensionError("output_error: dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.out.size(); ++i) {
        double d = static_cast<double>(a.out[i]) - static_cast<double>(b.out[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

} // namespace starc

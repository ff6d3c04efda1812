#pragma once

#include <span>
#include <vector>

#include "starc/retrieval.hpp"
#include "starc/types.hpp"

namespace starc {

struct AttentionOutput {
    HeadVector out;
    std::vector<TokenId> tokens;  // selected tokens, ascending
    std::vector<float> weights;   // softmax weights, aligned with tokens, sum to 1
};

// softmax(dot(q, k_i) / sqrt(d_h)) over the masked tokens, then the
// weight-averaged value vector.
AttentionOutput sparse_attend(std::span<const float> q, const KVCache& cache,
                              const SelectionMask& mask);

// Attention over every cached token.
AttentionOutput dense_attend(std::span<const float> q, const KVCache& cache);

// Fraction of the exact top-B tokens (by attention logit, ties to the lower
// index) that the mask retrieved. Requires L >= B.
double recall_rate(const SelectionMask& mask, std::span<const float> q, const KVCache& cache,
                   RetrievalBudget budget);

// L2 distance between the two output vectors.
double output_error(const AttentionOutput& a, const AttentionOutput& b);

} // namespace starc

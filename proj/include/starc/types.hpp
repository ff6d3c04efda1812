#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "starc/errors.hpp"

namespace starc {

// One key, value, query or centroid vector of a single attention head.
using HeadVector = std::vector<float>;

using TokenId = std::int32_t;

// Read-only view over a row-major float matrix.
struct MatrixView {
    const float* data = nullptr;
    std::int32_t rows = 0;
    std::int32_t cols = 0;

    std::span<const float> row(std::int32_t i) const {
        return {data + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
    }
};

float dot(std::span<const float> a, std::span<const float> b);
float l2_norm(std::span<const float> v);

// dot(a,b) / (|a|*|b|); throws DegenerateVectorError on a zero-norm input.
float cosine_similarity(std::span<const float> a, std::span<const float> b);

bool all_finite(std::span<const float> v);

// Set of token indices retrieved for one decoding step, sorted ascending, no duplicates.
struct SelectionMask {
    std::vector<TokenId> indices;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }

    // Throws ArgumentError if indices are unsorted, duplicated or out of [0, total_len).
    void validate(TokenId total_len) const;
};

// Per-head cache of paired key/value rows. Append-only, single writer.
class KVCache {
public:
    explicit KVCache(std::int32_t dim);

    // Builds a cache whose current contents are the prefill.
    static KVCache with_prefill(MatrixView keys, MatrixView values);

    // Appends one key/value pair; rows stay paired by construction.
    void append(std::span<const float> key, std::span<const float> value);

    std::int32_t dim() const { return dim_; }
    TokenId size() const { return static_cast<TokenId>(keys_.size() / dim_); }
    TokenId prefill_len() const { return prefill_len_; }

    std::span<const float> key(TokenId i) const;
    std::span<const float> value(TokenId i) const;

    MatrixView keys_view() const { return {keys_.data(), size(), dim_}; }
    MatrixView values_view() const { return {values_.data(), size(), dim_}; }
    // Rows [begin, end) of the key matrix.
    MatrixView keys_slice(TokenId begin, TokenId end) const;

private:
    std::int32_t dim_;
    TokenId prefill_len_ = 0;
    std::vector<float> keys_;
    std::vector<float> values_;
};

} // namespace starc

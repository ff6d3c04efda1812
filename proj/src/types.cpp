#include "starc/types.hpp"

#include <cmath>
#include <string>

namespace starc {

float dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw DimensionError("dot: length mismatch (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return static_cast<float>(acc);
}

float l2_norm(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) {
        acc += static_cast<double>(x) * static_cast<double>(x);
    }
    return static_cast<float>(std::sqrt(acc));
}

float cosine_similarity(std::span<const float> a, std::span<const float> b) {
    float d = dot(a, b);
    float na = l2_norm(a);
    float nb = l2_norm(b);
    if (na == 0.0f || nb == 0.0f) {
        throw DegenerateVectorError("cosine_similarity: zero-norm vector");
    }
    return d / (na * nb);
}

bool all_finite(std::span<const float> v) {
    for (float x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

void SelectionMask::validate(TokenId total_len) const {
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= total_len) {
            throw ArgumentError("SelectionMask: index " + std::to_string(indices[i]) +
                                " outside [0, " + std::to_string(total_len) + ")");
        }
        if (i > 0 && indices[i] <= indices[i - 1]) {
            throw ArgumentError("SelectionMask: indices not strictly ascending at position " +
                                std::to_string(i));
        }
    }
}

KVCache::KVCache(std::int32_t dim) : dim_(dim) {
    if (dim < 1) {
        throw ArgumentError("KVCache: head dimension must be >= 1");
    }
}

KVCache KVCache::with_prefill(MatrixView keys, MatrixView values) {
    if (keys.rows != values.rows || keys.cols != values.cols) {
        throw DimensionError("KVCache: prefill key/value shapes differ");
    }
    KVCache cache(keys.cols);
    for (TokenId i = 0; i < keys.rows; ++i) {
        cache.append(keys.row(i), values.row(i));
    }
    cache.prefill_len_ = keys.rows;
    return cache;
}

void KVCache::append(std::span<const float> key, std::span<const float> value) {
    if (static_cast<std::int32_t>(key.size()) != dim_ ||
        static_cast<std::int32_t>(value.size()) != dim_) {
        throw DimensionError("KVCache::append: row length does not match head dimension");
    }
    if (!all_finite(key) || !all_finite(value)) {
        throw ArgumentError("KVCache::append: non-finite component");
    }
    keys_.insert(keys_.end(), key.begin(), key.end());
    values_.insert(values_.end(), value.begin(), value.end());
}

std::span<const float> KVCache::key(TokenId i) const {
    return {keys_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
}

std::span<const float> KVCache::value(TokenId i) const {
    return {values_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
}

MatrixView KVCache::keys_slice(TokenId begin, TokenId end) const {
    if (begin < 0 || end < begin || end > size()) {
        throw ArgumentError("KVCache::keys_slice: bad range");
    }
    return {keys_.data() + static_cast<std::size_t>(begin) * dim_, end - begin, dim_};
}

} // namespace starc

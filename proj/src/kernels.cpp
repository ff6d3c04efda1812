#include "starc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace starc::kernels {

namespace {

inline double dot_d(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

inline double norm_d(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) {
        acc += static_cast<double>(x) * static_cast<double>(x);
    }
    return std::sqrt(acc);
}

inline void assign_one(MatrixView points, MatrixView centroids,
                       std::span<const double> centroid_norms, std::int32_t i,
                       std::span<std::int32_t> assign, std::span<double> distance) {
    auto p = points.row(i);
    double pnorm = norm_d(p);
    std::int32_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::int32_t c = 0; c < centroids.rows; ++c) {
        double denom = pnorm * centroid_norms[c];
        double sim = denom > 0.0 ? dot_d(p, centroids.row(c)) / denom : 0.0;
        if (sim > best_sim) {
            best_sim = sim;
            best = c;
        }
    }
    assign[i] = best;
    if (!distance.empty()) {
        distance[i] = 1.0 - best_sim;
    }
}

inline void subset_score_one(MatrixView rows, std::span<const float> q,
                             std::span<const std::int32_t> dims, std::int32_t i,
                             std::span<float> scores) {
    auto r = rows.row(i);
    double acc = 0.0;
    for (std::int32_t d : dims) {
        acc += static_cast<double>(q[d]) * static_cast<double>(r[d]);
    }
    scores[i] = static_cast<float>(acc);
}

inline void page_minmax_one(MatrixView keys, std::int32_t page_size, std::int32_t p,
                            std::span<float> min_out, std::span<float> max_out) {
    std::int32_t cols = keys.cols;
    TokenId begin = p * page_size;
    TokenId end = std::min<TokenId>(begin + page_size, keys.rows);
    float* mn = min_out.data() + static_cast<std::size_t>(p) * cols;
    float* mx = max_out.data() + static_cast<std::size_t>(p) * cols;
    auto first = keys.row(begin);
    std::copy(first.begin(), first.end(), mn);
    std::copy(first.begin(), first.end(), mx);
    for (TokenId t = begin + 1; t < end; ++t) {
        auto row = keys.row(t);
        for (std::int32_t d = 0; d < cols; ++d) {
            mn[d] = std::min(mn[d], row[d]);
            mx[d] = std::max(mx[d], row[d]);
        }
    }
}

} // namespace

void dot_scores(MatrixView rows, std::span<const float> q, std::span<float> scores) {
#pragma omp parallel for schedule(static)
    for (std::int32_t i = 0; i < rows.rows; ++i) {
        scores[i] = static_cast<float>(dot_d(q, rows.row(i)));
    }
}

void dot_scores_serial(MatrixView rows, std::span<const float> q, std::span<float> scores) {
    for (std::int32_t i = 0; i < rows.rows; ++i) {
        scores[i] = static_cast<float>(dot_d(q, rows.row(i)));
    }
}

void subset_scores(MatrixView rows, std::span<const float> q, std::span<const std::int32_t> dims,
                   std::span<float> scores) {
#pragma omp parallel for schedule(static)
    for (std::int32_t i = 0; i < rows.rows; ++i) {
        subset_score_one(rows, q, dims, i, scores);
    }
}

void subset_scores_serial(MatrixView rows, std::span<const float> q,
                          std::span<const std::int32_t> dims, std::span<float> scores) {
    for (std::int32_t i = 0; i < rows.rows; ++i) {
        subset_score_one(rows, q, dims, i, scores);
    }
}

void assign_nearest_cosine(MatrixView points, MatrixView centroids, std::span<std::int32_t> assign,
                           std::span<double> distance) {
    std::vector<double> centroid_norms(centroids.rows);
    for (std::int32_t c = 0; c < centroids.rows; ++c) {
        centroid_norms[c] = norm_d(centroids.row(c));
    }
#pragma omp parallel for schedule(static)
    for (std::int32_t i = 0; i < points.rows; ++i) {
        assign_one(points, centroids, centroid_norms, i, assign, distance);
    }
}

void assign_nearest_cosine_serial(MatrixView points, MatrixView centroids,
                                  std::span<std::int32_t> assign, std::span<double> distance) {
    std::vector<double> centroid_norms(centroids.rows);
    for (std::int32_t c = 0; c < centroids.rows; ++c) {
        centroid_norms[c] = norm_d(centroids.row(c));
    }
    for (std::int32_t i = 0; i < points.rows; ++i) {
        assign_one(points, centroids, centroid_norms, i, assign, distance);
    }
}

void centroid_means(MatrixView points, std::span<const std::int32_t> assign, std::int32_t k,
                    std::span<float> means, std::span<std::int32_t> counts) {
    std::int32_t cols = points.cols;
#pragma omp parallel for schedule(static)
    for (std::int32_t c = 0; c < k; ++c) {
        std::vector<double> acc(cols, 0.0);
        std::int32_t n = 0;
        for (std::int32_t i = 0; i < points.rows; ++i) {
            if (assign[i] != c) {
                continue;
            }
            auto row = points.row(i);
            for (std::int32_t d = 0; d < cols; ++d) {
                acc[d] += row[d];
            }
            ++n;
        }
        counts[c] = n;
        float* out = means.data() + static_cast<std::size_t>(c) * cols;
        for (std::int32_t d = 0; d < cols; ++d) {
            out[d] = n > 0 ? static_cast<float>(acc[d] / n) : 0.0f;
        }
    }
}

void centroid_means_serial(MatrixView points, std::span<const std::int32_t> assign, std::int32_t k,
                           std::span<float> means, std::span<std::int32_t> counts) {
    std::int32_t cols = points.cols;
    for (std::int32_t c = 0; c < k; ++c) {
        std::vector<double> acc(cols, 0.0);
        std::int32_t n = 0;
        for (std::int32_t i = 0; i < points.rows; ++i) {
            if (assign[i] != c) {
                continue;
            }
            auto row = points.row(i);
            for (std::int32_t d = 0; d < cols; ++d) {
                acc[d] += row[d];
            }
            ++n;
        }
        counts[c] = n;
        float* out = means.data() + static_cast<std::size_t>(c) * cols;
        for (std::int32_t d = 0; d < cols; ++d) {
            out[d] = n > 0 ? static_cast<float>(acc[d] / n) : 0.0f;
        }
    }
}

void page_minmax(MatrixView keys, std::int32_t page_size, std::span<float> min_out,
                 std::span<float> max_out) {
    std::int32_t num_pages = static_cast<std::int32_t>((keys.rows + page_size - 1) / page_size);
#pragma omp parallel for schedule(static)
    for (std::int32_t p = 0; p < num_pages; ++p) {
        page_minmax_one(keys, page_size, p, min_out, max_out);
    }
}

void page_minmax_serial(MatrixView keys, std::int32_t page_size, std::span<float> min_out,
                        std::span<float> max_out) {
    std::int32_t num_pages = static_cast<std::int32_t>((keys.rows + page_size - 1) / page_size);
    for (std::int32_t p = 0; p < num_pages; ++p) {
        page_minmax_one(keys, page_size, p, min_out, max_out);
    }
}

void softmax_inplace(std::span<float> logits) {
    if (logits.empty()) {
        return;
    }
    float max_logit = logits[0];
    for (float x : logits) {
        max_logit = std::max(max_logit, x);
    }
    double sum = 0.0;
    for (float& x : logits) {
        double e = std::exp(static_cast<double>(x) - static_cast<double>(max_logit));
        x = static_cast<float>(e);
        sum += e;
    }
    for (float& x : logits) {
        x = static_cast<float>(x / sum);
    }
}

void weighted_sum_rows(MatrixView values, std::span<const TokenId> tokens,
                       std::span<const float> weights, std::span<float> out) {
#pragma omp parallel for schedule(static)
    for (std::int32_t d = 0; d < values.cols; ++d) {
        double acc = 0.0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            acc += static_cast<double>(weights[i]) *
                   static_cast<double>(values.row(tokens[i])[d]);
        }
        out[d] = static_cast<float>(acc);
    }
}

void weighted_sum_rows_serial(MatrixView values, std::span<const TokenId> tokens,
                              std::span<const float> weights, std::span<float> out) {
    for (std::int32_t d = 0; d < values.cols; ++d) {
        double acc = 0.0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            acc += static_cast<double>(weights[i]) *
                   static_cast<double>(values.row(tokens[i])[d]);
        }
        out[d] = static_cast<float>(acc);
    }
}

} // namespace starc::kernels

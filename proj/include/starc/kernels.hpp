#pragma once

#include <cstdint>
#include <span>

#include "starc/types.hpp"

// Data-parallel inner loops shared by clustering, retrieval and attention.
//
// Every kernel comes in two variants: the default one, parallelized with
// OpenMP across independent output elements, and a *_serial reference.
// Parallelism is only ever across outputs and each output is accumulated
// in a fixed index order, so both variants produce bit-identical results
// for any thread count. Tests assert that equality; tools/bench_kernels
// compares their throughput.

namespace starc::kernels {

// scores[i] = dot(q, rows.row(i)), double accumulation in ascending column order.
void dot_scores(MatrixView rows, std::span<const float> q, std::span<float> scores);
void dot_scores_serial(MatrixView rows, std::span<const float> q, std::span<float> scores);

// Approximate scores over a column subset: scores[i] = sum_{d in dims} q[d] * rows[i][d].
// dims must be sorted ascending so the accumulation order matches dot_scores
// when dims covers every column.
void subset_scores(MatrixView rows, std::span<const float> q, std::span<const std::int32_t> dims,
                   std::span<float> scores);
void subset_scores_serial(MatrixView rows, std::span<const float> q,
                          std::span<const std::int32_t> dims, std::span<float> scores);

// assign[i] = argmax_c cosine(points.row(i), centroids.row(c)), ties to the lowest c.
// distance[i], when non-null, receives 1 - cosine to the chosen centroid.
void assign_nearest_cosine(MatrixView points, MatrixView centroids, std::span<std::int32_t> assign,
                           std::span<double> distance);
void assign_nearest_cosine_serial(MatrixView points, MatrixView centroids,
                                  std::span<std::int32_t> assign, std::span<double> distance);

// means.row(c) = arithmetic mean of points assigned to c, summed in ascending
// point order; counts[c] = member count. Empty clusters get a zero mean.
void centroid_means(MatrixView points, std::span<const std::int32_t> assign, std::int32_t k,
                    std::span<float> means, std::span<std::int32_t> counts);
void centroid_means_serial(MatrixView points, std::span<const std::int32_t> assign, std::int32_t k,
                           std::span<float> means, std::span<std::int32_t> counts);

// Element-wise min/max over each positional page of `keys`; the last page may be short.
// min_out/max_out are (num_pages x cols) row-major.
void page_minmax(MatrixView keys, std::int32_t page_size, std::span<float> min_out,
                 std::span<float> max_out);
void page_minmax_serial(MatrixView keys, std::int32_t page_size, std::span<float> min_out,
                        std::span<float> max_out);

// Numerically stabilized softmax (subtract max logit), in place.
// Reductions run serially in index order.
void softmax_inplace(std::span<float> logits);

// out[d] = sum_i weights[i] * values.row(tokens[i])[d], parallel across d,
// accumulated in ascending i order.
void weighted_sum_rows(MatrixView values, std::span<const TokenId> tokens,
                       std::span<const float> weights, std::span<float> out);
void weighted_sum_rows_serial(MatrixView values, std::span<const TokenId> tokens,
                              std::span<const float> weights, std::span<float> out);

} // namespace starc::kernels

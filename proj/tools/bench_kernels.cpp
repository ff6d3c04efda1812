// Compares the OpenMP kernels against their serial references: verifies
// bit-identical output, then reports throughput for both variants.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "starc/kernels.hpp"
#include "starc/rng.hpp"

using namespace starc;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn(); // warm-up
    auto start = Clock::now();
    for (int i = 0; i < reps; ++i) {
        fn();
    }
    auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

bool bits_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-22s %10.3f ms %10.3f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, identical ? "bit-identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    std::int32_t rows = 16384;
    std::int32_t dim = 128;
    int reps = 20;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        auto next = [&]() { return std::stol(argv[++i]); };
        if (arg == "--rows" && i + 1 < argc) {
            rows = static_cast<std::int32_t>(next());
        } else if (arg == "--dim" && i + 1 < argc) {
            dim = static_cast<std::int32_t>(next());
        } else if (arg == "--reps" && i + 1 < argc) {
            reps = static_cast<int>(next());
        } else {
            std::fprintf(stderr, "usage: %s [--rows N] [--dim D] [--reps R]\n", argv[0]);
            return 2;
        }
    }

#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP, both variants run serially\n");
#endif
    std::printf("rows %d, dim %d, %d reps\n\n", rows, dim, reps);
    std::printf("%-22s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    Rng rng(42);
    std::vector<float> data(static_cast<std::size_t>(rows) * dim);
    for (float& x : data) {
        x = static_cast<float>(rng.next_gaussian());
    }
    std::vector<float> q(dim);
    for (float& x : q) {
        x = static_cast<float>(rng.next_gaussian());
    }
    MatrixView points{data.data(), rows, dim};

    const std::int32_t k = 64;
    MatrixView centroids{data.data(), k, dim}; // first k rows as centroids

    {
        std::vector<float> a(rows);
        std::vector<float> b(rows);
        double s = time_ms([&] { kernels::dot_scores_serial(points, q, a); }, reps);
        double p = time_ms([&] { kernels::dot_scores(points, q, b); }, reps);
        report("dot_scores", s, p, bits_equal(a, b));
    }
    {
        std::vector<std::int32_t> dims = {0, 3, 7, 11, 19, 31, 63, dim - 1};
        std::vector<float> a(rows);
        std::vector<float> b(rows);
        double s = time_ms([&] { kernels::subset_scores_serial(points, q, dims, a); }, reps);
        double p = time_ms([&] { kernels::subset_scores(points, q, dims, b); }, reps);
        report("subset_scores", s, p, bits_equal(a, b));
    }
    std::vector<std::int32_t> assign_a(rows);
    {
        std::vector<std::int32_t> assign_b(rows);
        std::vector<double> da(rows);
        std::vector<double> db(rows);
        double s = time_ms(
            [&] { kernels::assign_nearest_cosine_serial(points, centroids, assign_a, da); }, reps);
        double p =
            time_ms([&] { kernels::assign_nearest_cosine(points, centroids, assign_b, db); }, reps);
        report("assign_nearest_cosine", s, p, assign_a == assign_b && da == db);
    }
    {
        std::vector<float> ma(static_cast<std::size_t>(k) * dim);
        std::vector<float> mb(static_cast<std::size_t>(k) * dim);
        std::vector<std::int32_t> ca(k);
        std::vector<std::int32_t> cb(k);
        double s =
            time_ms([&] { kernels::centroid_means_serial(points, assign_a, k, ma, ca); }, reps);
        double p = time_ms([&] { kernels::centroid_means(points, assign_a, k, mb, cb); }, reps);
        report("centroid_means", s, p, bits_equal(ma, mb) && ca == cb);
    }
    {
        const std::int32_t page = 16;
        std::int32_t pages = (rows + page - 1) / page;
        std::vector<float> mna(static_cast<std::size_t>(pages) * dim);
        std::vector<float> mxa(mna.size());
        std::vector<float> mnb(mna.size());
        std::vector<float> mxb(mna.size());
        double s = time_ms([&] { kernels::page_minmax_serial(points, page, mna, mxa); }, reps);
        double p = time_ms([&] { kernels::page_minmax(points, page, mnb, mxb); }, reps);
        report("page_minmax", s, p, bits_equal(mna, mnb) && bits_equal(mxa, mxb));
    }
    {
        std::vector<TokenId> tokens(rows / 2);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            tokens[i] = static_cast<TokenId>(2 * i);
        }
        std::vector<float> w(tokens.size(), 1.0f / tokens.size());
        std::vector<float> oa(dim);
        std::vector<float> ob(dim);
        double s =
            time_ms([&] { kernels::weighted_sum_rows_serial(points, tokens, w, oa); }, reps);
        double p = time_ms([&] { kernels::weighted_sum_rows(points, tokens, w, ob); }, reps);
        report("weighted_sum_rows", s, p, bits_equal(oa, ob));
    }
    return 0;
}

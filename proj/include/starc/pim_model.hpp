#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "starc/clustering.hpp"
#include "starc/types.hpp"

namespace starc {

// Row-granularity access geometry. group_size is the number of complete
// key/value vectors one memory read delivers (8 for HBM3 bursts at head
// dimension 128).
struct PimGeometry {
    std::int32_t group_size = 8;
    bool row_align_clusters = true;
    std::int32_t banks_per_channel = 64; // informational only
};

struct GroupSlot {
    std::int32_t group = -1;
    std::int32_t slot = -1;
};

// Token -> (fetch group, slot) placement. Complete and injective over [0, L).
class LayoutMap {
public:
    LayoutMap(TokenId total_tokens, std::int32_t num_groups)
        : slots_(total_tokens), occupancy_(num_groups, 0) {}

    GroupSlot slot_of(TokenId token) const { return slots_[token]; }
    TokenId total_tokens() const { return static_cast<TokenId>(slots_.size()); }
    std::int32_t num_groups() const { return static_cast<std::int32_t>(occupancy_.size()); }
    std::int32_t occupancy(std::int32_t group) const { return occupancy_[group]; }

    void place(TokenId token, std::int32_t group, std::int32_t slot);

private:
    std::vector<GroupSlot> slots_;
    std::vector<std::int32_t> occupancy_;
};

// token i -> (group i / G, slot i % G).
LayoutMap layout_sequential(TokenId total_tokens, const PimGeometry& geom);

// Clusters in id order, members ascending within each cluster; with
// row_align_clusters every cluster (and the trailing unclustered region)
// starts at a fresh group. Unclustered tokens follow in positional order.
LayoutMap layout_clustered(const ClusterStore& store, const PimGeometry& geom);

struct FetchStats {
    std::int64_t fetches = 0;          // distinct groups touched
    std::int64_t processed_tokens = 0; // fetches * group_size
    std::int64_t useful_tokens = 0;    // |mask|
    double waste_ratio = 0.0;          // (processed - useful) / processed
};

FetchStats count_fetches(const SelectionMask& mask, const LayoutMap& layout,
                         const PimGeometry& geom);

// Dimensionless by default; reports are normalized against the full-KV run.
struct CostModel {
    double t_fetch = 1.0;
    double t_gemv = 1.0;
    double t_overhead = 0.0;
    double e_fetch = 1.0;
    double e_gemv = 1.0;
    double e_overhead = 0.0;
    double write_cost_per_token = 0.0; // one-time remap write cost, surfaced in reports
};

struct CostResult {
    double latency = 0.0;
    double energy = 0.0;
};

CostResult cost(const FetchStats& stats, const CostModel& model);

struct PimConfig {
    PimGeometry geometry;
    CostModel cost;
};

// Plain-text key=value file; keys: group_size, row_align, t_fetch, t_gemv,
// t_overhead, e_fetch, e_gemv, e_overhead, write_cost_per_token.
PimConfig load_pim_config(const std::string& path);

} // namespace starc

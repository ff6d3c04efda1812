#include "starc/pim_model.hpp"

#include <algorithm>
#include <string>

#include "starc/kv_config.hpp"

namespace starc {

void LayoutMap::place(TokenId token, std::int32_t group, std::int32_t slot) {
    if (token < 0 || token >= total_tokens()) {
        throw LayoutError("LayoutMap::place: token " + std::to_string(token) + " out of range");
    }
    if (slots_[token].group >= 0) {
        throw LayoutError("LayoutMap::place: token " + std::to_string(token) + " placed twice");
    }
    slots_[token] = {group, slot};
    ++occupancy_[group];
}

LayoutMap layout_sequential(TokenId total_tokens, const PimGeometry& geom) {
    if (geom.group_size < 1) {
        throw ArgumentError("layout_sequential: group_size must be >= 1");
    }
    std::int32_t groups =
        static_cast<std::int32_t>((total_tokens + geom.group_size - 1) / geom.group_size);
    LayoutMap layout(total_tokens, groups);
    for (TokenId i = 0; i < total_tokens; ++i) {
        layout.place(i, i / geom.group_size, i % geom.group_size);
    }
    return layout;
}

LayoutMap layout_clustered(const ClusterStore& store, const PimGeometry& geom) {
    if (geom.group_size < 1) {
        throw ArgumentError("layout_clustered: group_size must be >= 1");
    }
    if (!store.initialized()) {
        throw StateError("layout_clustered: cluster store not initialized");
    }
    const std::int32_t g = geom.group_size;
    auto align = [&](TokenId pos) {
        if (geom.row_align_clusters && pos % g != 0) {
            return pos + (g - pos % g);
        }
        return pos;
    };

    // First walk: total slots, so the group count is known up front.
    TokenId pos = 0;
    TokenId total_tokens = 0;
    for (const auto& cluster : store.clusters()) {
        pos = align(pos);
        pos += static_cast<TokenId>(cluster.members.size());
        total_tokens += static_cast<TokenId>(cluster.members.size());
    }
    pos = align(pos);
    pos += static_cast<TokenId>(store.unclustered().size());
    total_tokens += static_cast<TokenId>(store.unclustered().size());

    std::int32_t groups = static_cast<std::int32_t>((pos + g - 1) / g);
    LayoutMap layout(total_tokens, groups);

    pos = 0;
    for (const auto& cluster : store.clusters()) {
        pos = align(pos);
        for (TokenId m : cluster.members) {
            layout.place(m, pos / g, pos % g);
            ++pos;
        }
    }
    pos = align(pos);
    for (TokenId m : store.unclustered()) {
        layout.place(m, pos / g, pos % g);
        ++pos;
    }
    return layout;
}

FetchStats count_fetches(const SelectionMask& mask, const LayoutMap& layout,
                         const PimGeometry& geom) {
    std::vector<bool> touched(layout.num_groups(), false);
    FetchStats stats;
    for (TokenId token : mask.indices) {
        if (token < 0 || token >= layout.total_tokens()) {
            throw LayoutError("count_fetches: token " + std::to_string(token) +
                              " absent from layout");
        }
        touched[layout.slot_of(token).group] = true;
    }
    for (bool t : touched) {
        stats.fetches += t ? 1 : 0;
    }
    stats.processed_tokens = stats.fetches * geom.group_size;
    stats.useful_tokens = static_cast<std::int64_t>(mask.size());
    stats.waste_ratio =
        stats.processed_tokens > 0
            ? static_cast<double>(stats.processed_tokens - stats.useful_tokens) /
                  static_cast<double>(stats.processed_tokens)
            : 0.0;
    return stats;
}

CostResult cost(const FetchStats& stats, const CostModel& model) {
    CostResult result;
    result.latency = model.t_overhead + static_cast<double>(stats.fetches) * model.t_fetch +
                     static_cast<double>(stats.processed_tokens) * model.t_gemv;
    result.energy = model.e_overhead + static_cast<double>(stats.fetches) * model.e_fetch +
                    static_cast<double>(stats.processed_tokens) * model.e_gemv;
    return result;
}

PimConfig load_pim_config(const std::string& path) {
    PimConfig config;
    for (const auto& [key, value] : parse_kv_file(path)) {
        if (key == "group_size") {
            config.geometry.group_size = static_cast<std::int32_t>(to_int(key, value));
        } else if (key == "row_align") {
            config.geometry.row_align_clusters = to_bool(key, value);
        } else if (key == "banks_per_channel") {
            config.geometry.banks_per_channel = static_cast<std::int32_t>(to_int(key, value));
        } else if (key == "t_fetch") {
            config.cost.t_fetch = to_double(key, value);
        } else if (key == "t_gemv") {
            config.cost.t_gemv = to_double(key, value);
        } else if (key == "t_overhead") {
            config.cost.t_overhead = to_double(key, value);
        } else if (key == "e_fetch") {
            config.cost.e_fetch = to_double(key, value);
        } else if (key == "e_gemv") {
            config.cost.e_gemv = to_double(key, value);
        } else if (key == "e_overhead") {
            config.cost.e_overhead = to_double(key, value);
        } else if (key == "write_cost_per_token") {
            config.cost.write_cost_per_token = to_double(key, value);
        } else {
            throw FormatError("pim config: unknown key '" + key + "'");
        }
    }
    if (config.geometry.group_size < 1) {
        throw FormatError("pim config: group_size must be >= 1");
    }
    const double rates[] = {config.cost.t_fetch,    config.cost.t_gemv,
                            config.cost.t_overhead, config.cost.e_fetch,
                            config.cost.e_gemv,     config.cost.e_overhead,
                            config.cost.write_cost_per_token};
    for (double r : rates) {
        if (r < 0.0) {
            throw FormatError("pim config: cost parameters must be >= 0");
        }
    }
    return config;
}

} // namespace starc

#include "starc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

#include "starc/attention.hpp"
#include "starc/retrieval.hpp"
#include "starc/rng.hpp"

namespace starc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

FetchStats full_cache_stats(TokenId cache_len, const PimGeometry& geom) {
    FetchStats stats;
    stats.fetches = (cache_len + geom.group_size - 1) / geom.group_size;
    stats.processed_tokens = stats.fetches * geom.group_size;
    stats.useful_tokens = cache_len;
    stats.waste_ratio = stats.processed_tokens > 0
                            ? static_cast<double>(stats.processed_tokens - stats.useful_tokens) /
                                  static_cast<double>(stats.processed_tokens)
                            : 0.0;
    return stats;
}

} // namespace

std::string PolicySpec::name() const {
    switch (kind) {
    case Kind::Full:
        return "full";
    case Kind::Window:
        return "window";
    case Kind::TokenOracle:
        return "token_oracle";
    case Kind::Sparq:
        return "sparq:" + std::to_string(param);
    case Kind::Page:
        return "page:" + std::to_string(param);
    case Kind::Starc:
        return "starc";
    }
    return "?";
}

PolicySpec parse_policy(const std::string& text) {
    std::string head = text;
    std::string arg;
    if (auto colon = text.find(':'); colon != std::string::npos) {
        head = text.substr(0, colon);
        arg = text.substr(colon + 1);
    }
    auto want_param = [&](PolicySpec::Kind kind) {
        if (arg.empty()) {
            throw ArgumentError("policy '" + text + "' needs a parameter, e.g. '" + head + ":16'");
        }
        char* end = nullptr;
        long v = std::strtol(arg.c_str(), &end, 10);
        if (end == arg.c_str() || *end != '\0' || v < 1) {
            throw ArgumentError("policy '" + text + "' has a bad parameter '" + arg + "'");
        }
        return PolicySpec{kind, static_cast<std::int32_t>(v)};
    };
    auto no_param = [&](PolicySpec::Kind kind) {
        if (!arg.empty()) {
            throw ArgumentError("policy '" + head + "' takes no parameter");
        }
        return PolicySpec{kind, 0};
    };
    if (head == "full") {
        return no_param(PolicySpec::Kind::Full);
    }
    if (head == "window") {
        return no_param(PolicySpec::Kind::Window);
    }
    if (head == "token_oracle") {
        return no_param(PolicySpec::Kind::TokenOracle);
    }
    if (head == "starc") {
        return no_param(PolicySpec::Kind::Starc);
    }
    if (head == "sparq") {
        return want_param(PolicySpec::Kind::Sparq);
    }
    if (head == "page") {
        return want_param(PolicySpec::Kind::Page);
    }
    throw ArgumentError("unknown policy '" + text + "'");
}

void ExperimentSpec::validate() const {
    if (policies.empty()) {
        throw ArgumentError("experiment: at least one policy is required");
    }
    if (budgets.empty()) {
        throw ArgumentError("experiment: at least one budget is required");
    }
    for (TokenId b : budgets) {
        if (b < 1) {
            throw ArgumentError("experiment: budgets must be >= 1");
        }
    }
    if (seeds.empty()) {
        throw ArgumentError("experiment: at least one seed is required");
    }
    if (cluster_interval < 1 || tokens_per_cluster < 1) {
        throw ArgumentError("experiment: cluster_interval and tokens_per_cluster must be >= 1");
    }
    if (!trace_path) {
        synth.validate();
    }
}

namespace {

void run_single(const ExperimentSpec& spec, const Trace& trace, TokenId budget,
                std::uint64_t seed, RunResult& result) {
    const PimGeometry& geom = spec.pim.geometry;
    const CostModel& model = spec.pim.cost;
    const RetrievalBudget rb{budget};

    bool has_starc = std::any_of(spec.policies.begin(), spec.policies.end(), [](const auto& p) {
        return p.kind == PolicySpec::Kind::Starc;
    });

    KVCache cache = KVCache::with_prefill({trace.keys.data(), trace.prefill_len, trace.d_h},
                                          {trace.values.data(), trace.prefill_len, trace.d_h});
    ClusterStore store(spec.cluster_interval, spec.tokens_per_cluster);
    double remap_tokens = 0.0;
    if (has_starc) {
        store.initial_cluster(cache, mix_seed(seed, 0));
        remap_tokens += trace.prefill_len;
    }

    for (TokenId step = 0; step < trace.decode_len(); ++step) {
        TokenId row = trace.prefill_len + step;
        auto key = trace.keys_view().row(row);
        auto value = trace.values_view().row(row);
        auto q = trace.query(step);

        if (has_starc) {
            std::int32_t gens = store.generations();
            store.append_token(cache, key, value, mix_seed(seed, 1 + step));
            if (store.generations() != gens) {
                remap_tokens += spec.cluster_interval;
            }
        } else {
            cache.append(key, value);
        }
        TokenId cache_len = cache.size();

        LayoutMap seq_layout = layout_sequential(cache_len, geom);
        std::optional<LayoutMap> clustered_layout;
        if (has_starc) {
            clustered_layout = layout_clustered(store, geom);
            if (clustered_layout->total_tokens() != cache_len) {
                throw StateError("clustered layout incomplete at step " + std::to_string(step));
            }
        }

        std::optional<AttentionOutput> dense;
        if (spec.compute_output_error) {
            dense = dense_attend(q, cache);
        }

        for (std::size_t pi = 0; pi < spec.policies.size(); ++pi) {
            const PolicySpec& policy = spec.policies[pi];
            SelectionMask mask;
            const LayoutMap* layout = &seq_layout;
            std::optional<ClusterSelection> starc_sel;

            switch (policy.kind) {
            case PolicySpec::Kind::Full:
                mask = select_full(cache);
                break;
            case PolicySpec::Kind::Window:
                mask = select_window(cache, rb);
                break;
            case PolicySpec::Kind::TokenOracle:
                mask = select_token_oracle(q, cache, rb);
                break;
            case PolicySpec::Kind::Sparq:
                mask = select_sparq(q, cache, policy.param, rb);
                break;
            case PolicySpec::Kind::Page: {
                PageIndex index = build_page_index(cache, policy.param);
                mask = select_page_quest(q, index, rb);
                break;
            }
            case PolicySpec::Kind::Starc:
                starc_sel = select_starc(q, store, rb);
                mask = starc_sel->attended();
                layout = &*clustered_layout;
                break;
            }

            mask.validate(cache_len);
            if (policy.kind == PolicySpec::Kind::Starc) {
                if (static_cast<TokenId>(starc_sel->included_tokens.size()) > budget) {
                    throw StateError("starc budget compliance violated at step " +
                                     std::to_string(step));
                }
            } else if (policy.kind != PolicySpec::Kind::Full &&
                       static_cast<TokenId>(mask.size()) > budget) {
                throw StateError("policy " + policy.name() + " exceeded budget at step " +
                                 std::to_string(step));
            }

            FetchStats stats = count_fetches(mask, *layout, geom);
            if (policy.kind == PolicySpec::Kind::Starc && geom.row_align_clusters) {
                // Padding bound: B + contributing clusters * (G-1) + recent groups * G.
                std::int64_t g = geom.group_size;
                std::int64_t contributing = 0;
                TokenId counted = 0;
                for (std::int32_t id : starc_sel->ranked_cluster_ids) {
                    if (counted >= budget) {
                        break;
                    }
                    ++contributing;
                    counted += static_cast<TokenId>(store.clusters()[id].members.size());
                }
                std::int64_t recent_groups =
                    (static_cast<std::int64_t>(starc_sel->recent_tokens.size()) + g - 1) / g;
                std::int64_t bound =
                    static_cast<std::int64_t>(budget) + contributing * (g - 1) + recent_groups * g;
                if (stats.processed_tokens > bound) {
                    throw StateError("starc fetch bound violated at step " + std::to_string(step) +
                                     ": processed " + std::to_string(stats.processed_tokens) +
                                     " > " + std::to_string(bound));
                }
            }

            StepRecord rec;
            rec.seed = seed;
            rec.budget = budget;
            rec.step = step;
            rec.policy = static_cast<std::int32_t>(pi);
            rec.cache_len = cache_len;
            rec.mask_size = static_cast<std::int64_t>(mask.size());
            rec.recall = recall_rate(mask, q, cache, {std::min(budget, cache_len)});
            rec.fetches = stats.fetches;
            rec.processed_tokens = stats.processed_tokens;
            rec.useful_tokens = stats.useful_tokens;
            rec.waste_ratio = stats.waste_ratio;
            CostResult c = cost(stats, model);
            rec.latency = c.latency;
            rec.energy = c.energy;
            rec.output_err = dense ? output_error(sparse_attend(q, cache, mask), *dense) : kNaN;
            result.records.push_back(rec);
        }
    }

    if (has_starc) {
        result.remap_notes.push_back({budget, seed, remap_tokens});
    }
}

} // namespace

RunResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();

    std::vector<TokenId> budgets;
    for (TokenId b : spec.budgets) {
        if (std::find(budgets.begin(), budgets.end(), b) != budgets.end()) {
            std::fprintf(stderr, "warning: duplicate budget %d ignored\n", b);
            continue;
        }
        budgets.push_back(b);
    }

    RunResult result;
    result.policies = spec.policies;

    std::optional<Trace> file_trace;
    if (spec.trace_path) {
        file_trace = load_trace(*spec.trace_path);
    }

    for (TokenId budget : budgets) {
        for (std::uint64_t seed : spec.seeds) {
            if (file_trace) {
                run_single(spec, *file_trace, budget, seed, result);
            } else {
                SyntheticConfig config = spec.synth;
                config.seed = seed;
                Trace trace = generate(config);
                run_single(spec, trace, budget, seed, result);
            }
        }
    }

    // Per-(budget, policy) means, normalized against the full-KV cost on the
    // same steps.
    std::map<TokenId, std::pair<double, double>> baseline; // budget -> mean latency/energy
    for (TokenId budget : budgets) {
        double lat = 0.0;
        double en = 0.0;
        std::int64_t n = 0;
        for (const auto& rec : result.records) {
            if (rec.budget != budget || rec.policy != 0) {
                continue;
            }
            CostResult c = cost(full_cache_stats(rec.cache_len, spec.pim.geometry), spec.pim.cost);
            lat += c.latency;
            en += c.energy;
            ++n;
        }
        baseline[budget] = {n ? lat / n : kNaN, n ? en / n : kNaN};
    }

    for (TokenId budget : budgets) {
        for (std::size_t pi = 0; pi < spec.policies.size(); ++pi) {
            PolicySummary s;
            s.budget = budget;
            s.policy = spec.policies[pi].name();
            double recall_sum = 0.0;
            std::int64_t recall_n = 0;
            double err_sum = 0.0;
            std::int64_t err_n = 0;
            for (const auto& rec : result.records) {
                if (rec.budget != budget || rec.policy != static_cast<std::int32_t>(pi)) {
                    continue;
                }
                ++s.steps;
                s.mean_mask_size += static_cast<double>(rec.mask_size);
                s.mean_fetches += static_cast<double>(rec.fetches);
                s.mean_processed += static_cast<double>(rec.processed_tokens);
                s.mean_waste += rec.waste_ratio;
                s.mean_latency += rec.latency;
                s.mean_energy += rec.energy;
                if (std::isfinite(rec.recall)) {
                    recall_sum += rec.recall;
                    ++recall_n;
                }
                if (std::isfinite(rec.output_err)) {
                    err_sum += rec.output_err;
                    ++err_n;
                }
            }
            if (s.steps > 0) {
                s.mean_mask_size /= static_cast<double>(s.steps);
                s.mean_fetches /= static_cast<double>(s.steps);
                s.mean_processed /= static_cast<double>(s.steps);
                s.mean_waste /= static_cast<double>(s.steps);
                s.mean_latency /= static_cast<double>(s.steps);
                s.mean_energy /= static_cast<double>(s.steps);
            }
            s.mean_recall = recall_n ? recall_sum / recall_n : kNaN;
            s.mean_output_err = err_n ? err_sum / err_n : kNaN;
            s.norm_latency = s.mean_latency / baseline[budget].first;
            s.norm_energy = s.mean_energy / baseline[budget].second;
            if (spec.policies[pi].kind == PolicySpec::Kind::Starc) {
                double tokens = 0.0;
                std::int64_t n = 0;
                for (const auto& note : result.remap_notes) {
                    if (note.budget == budget) {
                        tokens += note.tokens_written;
                        ++n;
                    }
                }
                s.remap_write_cost =
                    n ? (tokens / n) * spec.pim.cost.write_cost_per_token : 0.0;
            }
            result.summaries.push_back(s);
        }
    }
    return result;
}

void write_steps_csv(const RunResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FormatError("write_steps_csv: cannot open '" + path + "'");
    }
    out << "seed,budget,step,policy,cache_len,mask_size,recall,fetches,processed_tokens,"
           "useful_tokens,waste_ratio,latency,energy,output_err\n";
    for (const auto& rec : result.records) {
        out << rec.seed << ',' << rec.budget << ',' << rec.step << ','
            << result.policies[rec.policy].name() << ',' << rec.cache_len << ',' << rec.mask_size
            << ',' << rec.recall << ',' << rec.fetches << ',' << rec.processed_tokens << ','
            << rec.useful_tokens << ',' << rec.waste_ratio << ',' << rec.latency << ','
            << rec.energy << ',' << rec.output_err << '\n';
    }
    if (!out) {
        throw FormatError("write_steps_csv: write to '" + path + "' failed");
    }
}

void write_summary_csv(const RunResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FormatError("write_summary_csv: cannot open '" + path + "'");
    }
    out << "budget,policy,steps,mean_mask_size,mean_recall,mean_fetches,mean_processed,"
           "mean_waste,mean_latency,mean_energy,norm_latency,norm_energy,mean_output_err,"
           "remap_write_cost\n";
    for (const auto& s : result.summaries) {
        out << s.budget << ',' << s.policy << ',' << s.steps << ',' << s.mean_mask_size << ','
            << s.mean_recall << ',' << s.mean_fetches << ',' << s.mean_processed << ','
            << s.mean_waste << ',' << s.mean_latency << ',' << s.mean_energy << ','
            << s.norm_latency << ',' << s.norm_energy << ',' << s.mean_output_err << ','
            << s.remap_write_cost << '\n';
    }
    if (!out) {
        throw FormatError("write_summary_csv: write to '" + path + "' failed");
    }
}

void write_summary_text(const RunResult& result, std::ostream& os) {
    os << std::left << std::setw(8) << "budget" << std::setw(16) << "policy" << std::right
       << std::setw(10) << "recall" << std::setw(12) << "processed" << std::setw(10) << "waste"
       << std::setw(12) << "norm_lat" << std::setw(12) << "norm_energy" << std::setw(12)
       << "out_err" << '\n';
    for (const auto& s : result.summaries) {
        os << std::left << std::setw(8) << s.budget << std::setw(16) << s.policy << std::right
           << std::fixed << std::setprecision(4) << std::setw(10) << s.mean_recall << std::setw(12)
           << std::setprecision(1) << s.mean_processed << std::setw(10) << std::setprecision(4)
           << s.mean_waste << std::setw(12) << s.norm_latency << std::setw(12) << s.norm_energy
           << std::setw(12) << s.mean_output_err << '\n';
        os.unsetf(std::ios::fixed);
        os << std::setprecision(6);
    }
    for (const auto& s : result.summaries) {
        if (s.policy == "starc" && s.remap_write_cost > 0.0) {
            os << "starc remap write cost (budget " << s.budget << "): " << s.remap_write_cost
               << '\n';
        }
    }
}

} // namespace starc

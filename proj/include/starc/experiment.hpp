#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "starc/pim_model.hpp"
#include "starc/workload.hpp"

namespace starc {

struct PolicySpec {
    enum class Kind { Full, Window, TokenOracle, Sparq, Page, Starc };

    Kind kind = Kind::Full;
    std::int32_t param = 0; // r for sparq, page size for page

    std::string name() const;
};

// Accepts "full", "window", "token_oracle", "sparq:<r>", "page:<size>", "starc".
PolicySpec parse_policy(const std::string& text);

struct ExperimentSpec {
    std::optional<std::string> trace_path; // when absent, synth is generated per seed
    SyntheticConfig synth;
    std::vector<PolicySpec> policies;
    std::vector<TokenId> budgets = {1024};
    PimConfig pim;
    std::int32_t cluster_interval = kDefaultClusterInterval;
    std::int32_t tokens_per_cluster = kDefaultTokensPerCluster;
    std::vector<std::uint64_t> seeds = {1};
    bool compute_output_error = true;

    void validate() const; // throws ArgumentError
};

struct StepRecord {
    std::uint64_t seed = 0;
    TokenId budget = 0;
    TokenId step = 0;
    std::int32_t policy = 0; // index into ExperimentSpec::policies
    TokenId cache_len = 0;
    std::int64_t mask_size = 0;
    double recall = 0.0; // NaN when cache_len < budget
    std::int64_t fetches = 0;
    std::int64_t processed_tokens = 0;
    std::int64_t useful_tokens = 0;
    double waste_ratio = 0.0;
    double latency = 0.0;
    double energy = 0.0;
    double output_err = 0.0; // vs dense attention; NaN when not computed
};

struct PolicySummary {
    TokenId budget = 0;
    std::string policy;
    std::int64_t steps = 0;
    double mean_mask_size = 0.0;
    double mean_recall = 0.0;
    double mean_fetches = 0.0;
    double mean_processed = 0.0;
    double mean_waste = 0.0;
    double mean_latency = 0.0;
    double mean_energy = 0.0;
    double norm_latency = 0.0; // vs the full-KV baseline on the same steps
    double norm_energy = 0.0;
    double mean_output_err = 0.0;
    double remap_write_cost = 0.0; // starc only: clustered tokens x write_cost_per_token
};

// One-time remap write accounting for the starc policy (tokens written into
// clustered placement over a run).
struct RemapNote {
    TokenId budget = 0;
    std::uint64_t seed = 0;
    double tokens_written = 0.0;
};

struct RunResult {
    std::vector<PolicySpec> policies;
    std::vector<StepRecord> records;
    std::vector<PolicySummary> summaries;
    std::vector<RemapNote> remap_notes;
};

// Runs every (seed, budget, decoding step, policy) combination. Clustering
// state advances once per step and is owned by the starc policy alone;
// internal invariants (budget compliance, layout completeness, the aligned
// fetch bound) abort the run with diagnostics if violated.
RunResult run_experiment(const ExperimentSpec& spec);

void write_steps_csv(const RunResult& result, const std::string& path);
void write_summary_csv(const RunResult& result, const std::string& path);
void write_summary_text(const RunResult& result, std::ostream& os);

} // namespace starc

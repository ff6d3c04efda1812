// Experiment runner: generates or replays KV traces, evaluates sparsity
// policies against the row-granularity fetch model, and writes CSV reports.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "starc/experiment.hpp"
#include "starc/kv_config.hpp"

namespace {

struct CommonOptions {
    starc::SyntheticConfig synth;
    std::string trace_path;
    std::string policies = "full,window,token_oracle,sparq:32,page:16,starc";
    std::string seeds = "1";
    std::string pim_config_path;
    std::int32_t interval = starc::kDefaultClusterInterval;
    std::int32_t divisor = starc::kDefaultTokensPerCluster;
    bool no_output_error = false;
    std::string out_prefix = "experiment";
};

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            parts.push_back(item);
        }
    }
    return parts;
}

void add_synth_options(CLI::App* cmd, starc::SyntheticConfig& synth) {
    cmd->add_option("--dh", synth.d_h, "Head dimension");
    cmd->add_option("--prefill", synth.prefill_len, "Prefill length");
    cmd->add_option("--decode", synth.decode_len, "Decoding steps");
    cmd->add_option("--components", synth.n_components, "Mixture components");
    cmd->add_option("--drift", synth.drift, "Per-step component-mean drift");
    cmd->add_option("--persistence", synth.persistence, "Component persistence probability");
    cmd->add_option("--query-alignment", synth.query_alignment,
                    "Probability a query tracks a component mean");
    cmd->add_option("--noise-sigma", synth.noise_sigma, "Within-component sigma");
}

starc::ExperimentSpec build_spec(const CommonOptions& opts, const std::vector<starc::TokenId>& budgets) {
    starc::ExperimentSpec spec;
    if (!opts.trace_path.empty()) {
        spec.trace_path = opts.trace_path;
    }
    spec.synth = opts.synth;
    for (const auto& p : split_csv(opts.policies)) {
        spec.policies.push_back(starc::parse_policy(p));
    }
    spec.seeds.clear();
    for (const auto& s : split_csv(opts.seeds)) {
        spec.seeds.push_back(std::stoull(s));
    }
    if (spec.seeds.empty()) {
        spec.seeds = {1};
    }
    spec.budgets = budgets;
    if (!opts.pim_config_path.empty()) {
        spec.pim = starc::load_pim_config(opts.pim_config_path);
    }
    spec.cluster_interval = opts.interval;
    spec.tokens_per_cluster = opts.divisor;
    spec.compute_output_error = !opts.no_output_error;
    return spec;
}

void write_reports(const starc::RunResult& result, const std::string& prefix) {
    starc::write_steps_csv(result, prefix + "_steps.csv");
    starc::write_summary_csv(result, prefix + "_summary.csv");
    std::ofstream summary(prefix + "_summary.txt", std::ios::trunc);
    if (!summary) {
        throw starc::FormatError("cannot open '" + prefix + "_summary.txt'");
    }
    starc::write_summary_text(result, summary);
    starc::write_summary_text(result, std::cout);
    std::cout << "wrote " << prefix << "_steps.csv, " << prefix << "_summary.csv, " << prefix
              << "_summary.txt\n";
}

int inspect_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "inspect: cannot open '" << path << "'\n";
        return 1;
    }
    std::string line;
    if (!std::getline(in, line)) {
        std::cerr << "inspect: '" << path << "' is empty\n";
        return 1;
    }
    std::size_t columns = split_csv(line).size();
    if (columns < 2) {
        std::cerr << "inspect: '" << path << "' has no comma-separated header\n";
        return 1;
    }
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (std::count(line.begin(), line.end(), ',') + 1 != static_cast<long>(columns)) {
            std::cerr << "inspect: '" << path << "' line " << line_no << " has a column count "
                      << "different from the header\n";
            return 1;
        }
        ++rows;
    }
    std::cout << path << ": CSV report, " << columns << " columns, " << rows << " data rows\n";
    return 0;
}

int inspect_trace(const std::string& path) {
    starc::Trace trace = starc::load_trace(path);
    double key_norm = 0.0;
    for (starc::TokenId t = 0; t < trace.total_len; ++t) {
        key_norm += starc::l2_norm(trace.keys_view().row(t));
    }
    key_norm /= std::max<starc::TokenId>(1, trace.total_len);
    std::cout << path << ": trace v" << starc::kTraceVersion << ", d_h " << trace.d_h
              << ", prefill " << trace.prefill_len << ", total " << trace.total_len
              << ", decode steps " << trace.decode_len() << ", mean key norm " << key_norm
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clustering-based KV-cache remapping simulator for row-granularity PIM"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic trace file");
    starc::SyntheticConfig gen_config;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    add_synth_options(gen, gen_config);
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--out", gen_out, "Output trace path")->required();

    // run
    auto* run = app.add_subcommand("run", "Run policies at one budget");
    CommonOptions run_opts;
    starc::TokenId run_budget = 1024;
    add_synth_options(run, run_opts.synth);
    run->add_option("--trace", run_opts.trace_path, "Replay a trace file instead of generating");
    run->add_option("--policies", run_opts.policies, "Comma-separated policy list");
    run->add_option("--budget", run_budget, "Token budget B");
    run->add_option("--seeds", run_opts.seeds, "Comma-separated seed list");
    run->add_option("--pim-config", run_opts.pim_config_path, "Geometry / cost model file");
    run->add_option("--interval", run_opts.interval, "Clustering interval I");
    run->add_option("--divisor", run_opts.divisor, "Tokens per cluster target");
    run->add_flag("--no-output-error", run_opts.no_output_error,
                  "Skip dense-attention output error");
    run->add_option("--out", run_opts.out_prefix, "Report path prefix");
    run->set_config("--config");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run policies over a budget list");
    CommonOptions sweep_opts;
    std::string sweep_budgets = "256,512,1024,2048";
    add_synth_options(sweep, sweep_opts.synth);
    sweep->add_option("--trace", sweep_opts.trace_path, "Replay a trace file instead of generating");
    sweep->add_option("--policies", sweep_opts.policies, "Comma-separated policy list");
    sweep->add_option("--budgets", sweep_budgets, "Comma-separated budget list");
    sweep->add_option("--seeds", sweep_opts.seeds, "Comma-separated seed list");
    sweep->add_option("--pim-config", sweep_opts.pim_config_path, "Geometry / cost model file");
    sweep->add_option("--interval", sweep_opts.interval, "Clustering interval I");
    sweep->add_option("--divisor", sweep_opts.divisor, "Tokens per cluster target");
    sweep->add_flag("--no-output-error", sweep_opts.no_output_error,
                    "Skip dense-attention output error");
    sweep->add_option("--out", sweep_opts.out_prefix, "Report path prefix");
    sweep->set_config("--config");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Validate a trace or CSV report");
    std::string inspect_path;
    inspect->add_option("path", inspect_path, "File to validate")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            gen_config.seed = gen_seed;
            starc::Trace trace = starc::generate(gen_config);
            starc::save_trace(trace, gen_out);
            std::cout << "wrote " << gen_out << " (d_h " << trace.d_h << ", prefill "
                      << trace.prefill_len << ", total " << trace.total_len << ")\n";
            return 0;
        }
        if (run->parsed()) {
            auto spec = build_spec(run_opts, {run_budget});
            write_reports(starc::run_experiment(spec), run_opts.out_prefix);
            return 0;
        }
        if (sweep->parsed()) {
            std::vector<starc::TokenId> budgets;
            for (const auto& b : split_csv(sweep_budgets)) {
                budgets.push_back(static_cast<starc::TokenId>(std::stol(b)));
            }
            auto spec = build_spec(sweep_opts, budgets);
            write_reports(starc::run_experiment(spec), sweep_opts.out_prefix);
            return 0;
        }
        if (inspect->parsed()) {
            if (inspect_path.size() > 4 &&
                inspect_path.compare(inspect_path.size() - 4, 4, ".csv") == 0) {
                return inspect_csv(inspect_path);
            }
            return inspect_trace(inspect_path);
        }
    } catch (const starc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

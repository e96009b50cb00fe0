#pragma once

#include <filesystem>
#include <optional>

#include "tacos/config.hpp"
#include "tacos/otacos.hpp"
#include "tacos/sac.hpp"
#include "tacos/tables.hpp"

namespace tacos {

/// Result of one (cell, seed) run.
struct RunOutcome {
    LearningCurve curve;
    std::optional<RegretLedger> ledger; // model-based algorithms only
};

/// Builds the SAC configuration for an experiment (shared by the runner and
/// the acceptance suite).
SacConfig sac_config_from(const ExperimentConfig& e);
/// Builds the model-based configuration; planner kind follows the algorithm.
OtacosConfig otacos_config_from(const ExperimentConfig& e);

/// Resolved sweep cell: the experiment with one sweep value substituted.
ExperimentConfig resolve_cell(const ExperimentConfig& e, std::size_t cell_index);
std::size_t cell_count(const ExperimentConfig& e);
std::string cell_label(const ExperimentConfig& e, std::size_t cell_index);

/// Runs one resolved cell for one seed. When artifact_dir is given, the SAC
/// family also writes the final greedy episode record (episodes.txt) and the
/// actor checkpoint (actor.net) there.
RunOutcome run_cell_seed(const ExperimentConfig& cell, long seed,
                         const std::filesystem::path* artifact_dir = nullptr);

/// Executes the whole sweep, one artifact directory per (cell, seed):
///   <out_root>/<output>/<cell>/seed<k>/{config.cfg, metadata.kv, curve.csv,
///   regret.csv, episodes.txt, actor.net, done}
/// Cells with a `done` marker are skipped (resumable); failures leave a
/// `failed` marker and partial results. Returns the number of failed runs.
int run_experiment(const ExperimentConfig& e, const std::filesystem::path& out_root);

struct CellSummary {
    std::string cell;
    double sweep_value = 0.0;
    bool has_sweep_value = false;
    int n_seeds = 0;
    MeanSe eval_return;
    MeanSe eval_return_no_cost;
    MeanSe interactions;
    MeanSe episodes;
    MeanSe cum_regret; // model-based runs
    bool has_regret = false;
};

/// Aggregates every cell under an experiment artifact directory.
std::vector<CellSummary> summarize(const std::filesystem::path& experiment_dir);
void write_summary_csv(const std::filesystem::path& experiment_dir,
                       const std::vector<CellSummary>& summaries);

/// Per-figure tabular files and minimal SVG charts next to the artifacts.
void emit_plotdata(const std::filesystem::path& experiment_dir);

/// Output root resolution: explicit argument, else $TACOS_OUT_ROOT, else
/// ./results.
std::filesystem::path resolve_output_root(const std::string& cli_value);

} // namespace tacos

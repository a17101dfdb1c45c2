#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "storex/eval.hpp"
#include "storex/graph.hpp"
#include "storex/store.hpp"

namespace storex {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct ExperimentConfig {
  std::size_t n_graphs = 1000;
  uint64_t dataset_seed = 0;
  /// Load this dataset file instead of generating one.
  std::string dataset_path;
  StoreConfig store;
  std::vector<uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t parallel = 1;
  double heatmap_step = 0.1;
  std::size_t histogram_bins = 20;
};

// Config text is one `key = value` per line; `#` starts a comment. Keys are
// the dotted names produced by config_to_text. Lists are comma separated and
// seed lists also accept ranges such as 0-9.

/// Throws ParseError for a malformed line or unknown key, ParameterError for
/// an out-of-range value.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key in a fixed order; parse_config(config_to_text(c)) reproduces c.
std::string config_to_text(const ExperimentConfig& cfg);
std::map<std::string, std::string> config_entries(const ExperimentConfig& cfg);
/// 16 hex digits of FNV-1a over config_to_text.
std::string config_hash(const ExperimentConfig& cfg);
/// Throws ParameterError for an empty seed list, zero parallelism or an invalid StoreConfig.
void validate(const ExperimentConfig& cfg);

std::vector<uint64_t> parse_seed_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
/// `n` values from 0.9 down to 0.1, evenly spaced; {0.9} for n = 1.
std::vector<double> shrinking_schedule(std::size_t n);

Dataset load_or_generate(const ExperimentConfig& cfg);

struct SeedRun {
  uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<IterationRecord> history;
  HeatmapGrid heat_vanilla;
  HeatmapGrid heat_store;
  std::optional<WeightHistogram> histogram;
};

/// One STORE run: history[0] is the vanilla pair, history.back() the final one.
/// Failures are captured in `error` with the partial history kept.
SeedRun run_seed(const Dataset& ds, const ExperimentConfig& cfg, uint64_t seed);
/// All configured seeds over a pool of cfg.parallel workers, in seed-list order.
std::vector<SeedRun> run_seeds(const Dataset& ds, const ExperimentConfig& cfg);

struct Summary {
  double mean = 0.0;
  /// Sample standard deviation; 0 for fewer than two values.
  double std = 0.0;
  std::size_t n = 0;
};
Summary summarize(const std::vector<double>& values);

struct ExperimentOutcome {
  std::vector<SeedRun> runs;
  std::size_t failures = 0;
  std::string report_json;
};

/// Runs every seed and writes results.csv, history.csv, heatmap_vanilla.{csv,svg},
/// heatmap_store.{csv,svg}, histograms.csv, report.json and one seed_<s>/
/// directory per seed under `out`.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const Dataset& ds,
                                 const std::filesystem::path& out);

/// Report built from finished runs; `timestamp` is the only non-deterministic field.
std::string build_report(const ExperimentConfig& cfg, const Dataset& ds,
                         const std::vector<SeedRun>& runs, const std::string& timestamp);

struct AblationRow {
  StrategyKind strategy = StrategyKind::kGaussian;
  std::vector<uint64_t> seeds;
  std::vector<double> auc;
  Summary summary;
  std::size_t failures = 0;
};

/// One multi-seed run per strategy; writes ablation.csv (one row per strategy)
/// and ablation_seeds.csv.
std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, const Dataset& ds,
                                      const std::vector<StrategyKind>& strategies,
                                      const std::filesystem::path& out);

enum class SweepParam { kIterations, kDeltaMu };
std::string to_string(SweepParam p);
SweepParam sweep_param_from_string(const std::string& s);

struct SweepRow {
  double value = 0.0;
  /// "ok", "infeasible" or "failed".
  std::string status;
  std::string message;
  Summary summary;
};

/// One multi-seed run per value, final-iteration AUC per seed. Iteration
/// values use shrinking_schedule; infeasible delta_mu values are reported
/// and skipped. Writes sweep.csv. Throws ParameterError for an empty list.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const Dataset& ds, SweepParam param,
                                const std::vector<double>& values, const std::filesystem::path& out);

}  // namespace storex

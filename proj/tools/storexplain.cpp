#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "storex/ba2motifs.hpp"
#include "storex/dataset_io.hpp"
#include "storex/errors.hpp"
#include "storex/experiment.hpp"

namespace fs = std::filesystem;
using namespace storex;

namespace {

constexpr int kOk = 0;
constexpr int kPartialFailure = 1;
constexpr int kConfigError = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("storexplain");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("STOREXPLAIN_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("STOREXPLAIN_LOG: unknown level '{}', keeping info", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

struct CommonFlags {
  std::string config;
  std::string seeds;
  std::string out = "storex_out";
  std::size_t parallel = 0;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Flat key = value config file");
  cmd->add_option("--seeds", f.seeds, "Seed list, e.g. 0-9 or 0,3,5");
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--parallel", f.parallel, "Seeds run concurrently");
  cmd->add_option("--set", f.overrides, "Extra key=value setting (repeatable)");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  std::string extra;
  for (const std::string& kv : f.overrides) extra += kv + "\n";
  cfg = parse_config(extra, cfg);
  if (!f.seeds.empty()) cfg.seeds = parse_seed_list(f.seeds);
  if (f.parallel > 0) cfg.parallel = f.parallel;
  validate(cfg);
  return cfg;
}

int exit_for(std::size_t failures, std::size_t total) {
  if (failures == 0) return kOk;
  spdlog::error("{} of {} seed runs failed", failures, total);
  return kPartialFailure;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Explanation refinement experiments on BA-2motifs"};
  app.require_subcommand(1);

  std::size_t n_graphs = 1000;
  uint64_t data_seed = 0;
  std::string data_out = "ba2motifs.json";
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a BA-2motifs dataset file");
  gen->add_option("--n", n_graphs, "Number of graphs (even)")->capture_default_str();
  gen->add_option("--seed", data_seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", data_out, "Output JSON path")->capture_default_str();

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "Vanilla and refined pipelines over all seeds");
  add_common(run, run_flags);

  CommonFlags abl_flags;
  std::vector<std::string> strategies;
  CLI::App* abl = app.add_subcommand("ablation", "Compare edge-weight samplers");
  add_common(abl, abl_flags);
  abl->add_option("--strategy", strategies, "gaussian, uniform or random (repeatable, comma list)")
      ->delimiter(',');

  CommonFlags sweep_flags;
  std::string sweep_param;
  std::string sweep_values;
  CLI::App* sweep = app.add_subcommand("sweep", "Final AUC across values of one parameter");
  add_common(sweep, sweep_flags);
  sweep->add_option("--sweep", sweep_param, "iterations or delta_mu")->required();
  sweep->add_option("--values", sweep_values, "Comma separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) {
      Rng rng(data_seed);
      const Dataset ds = generate_ba2motifs(n_graphs, rng);
      if (fs::path(data_out).has_parent_path()) fs::create_directories(fs::path(data_out).parent_path());
      save_dataset(ds, data_out);
      spdlog::info("wrote {} graphs to {}", ds.graphs.size(), data_out);
      return kOk;
    }
    if (*run) {
      const ExperimentConfig cfg = resolve(run_flags);
      const Dataset ds = load_or_generate(cfg);
      spdlog::info("run: {} seeds, config {}", cfg.seeds.size(), config_hash(cfg));
      const ExperimentOutcome o = run_experiment(cfg, ds, run_flags.out);
      spdlog::info("wrote {}/report.json", run_flags.out);
      return exit_for(o.failures, o.runs.size());
    }
    if (*abl) {
      const ExperimentConfig cfg = resolve(abl_flags);
      std::vector<StrategyKind> kinds;
      for (const std::string& s : strategies) kinds.push_back(strategy_from_string(s));
      if (kinds.empty()) kinds = {StrategyKind::kGaussian, StrategyKind::kUniformProduct, StrategyKind::kRandom};
      const Dataset ds = load_or_generate(cfg);
      std::size_t failures = 0;
      std::size_t total = 0;
      for (const AblationRow& r : run_ablation(cfg, ds, kinds, abl_flags.out)) {
        spdlog::info("{}: auc {:.4f} +- {:.4f} over {} seeds", to_string(r.strategy), r.summary.mean,
                     r.summary.std, r.summary.n);
        failures += r.failures;
        total += r.failures + r.summary.n;
      }
      return exit_for(failures, total);
    }
    if (*sweep) {
      const ExperimentConfig cfg = resolve(sweep_flags);
      const SweepParam param = sweep_param_from_string(sweep_param);
      const std::vector<double> values = parse_double_list(sweep_values);
      const Dataset ds = load_or_generate(cfg);
      bool any_failed = false;
      for (const SweepRow& r : run_sweep(cfg, ds, param, values, sweep_flags.out)) {
        spdlog::info("{} = {}: {} auc {:.4f} +- {:.4f}", to_string(param), format_double(r.value),
                     r.status, r.summary.mean, r.summary.std);
        any_failed = any_failed || r.status == "failed" || (r.status == "ok" && !r.message.empty());
      }
      return any_failed ? kPartialFailure : kOk;
    }
  } catch (const ParameterError& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kPartialFailure;
  }
  return kOk;
}

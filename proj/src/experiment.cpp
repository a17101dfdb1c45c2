#include "storex/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "storex/ba2motifs.hpp"
#include "storex/dataset_io.hpp"
#include "storex/errors.hpp"

namespace storex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr uint64_t kSeedStream = 77;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
    throw ParseError(key + ": expected a number, got '" + v + "'");
  }
  return x;
}

uint64_t parse_uint(const std::string& key, const std::string& v) {
  uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParseError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError(key + ": expected true or false, got '" + v + "'");
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::string join_seeds(const std::vector<uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field size_field(std::string key, T ExperimentConfig::*member) {
  return {key, [key, member](ExperimentConfig& c, const std::string& v) {
            c.*member = static_cast<T>(parse_uint(key, v));
          },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

#define STOREX_DOUBLE(KEY, EXPR)                                                          \
  Field {                                                                                 \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.EXPR = parse_double(KEY, v); }, \
        [](const ExperimentConfig& c) { return format_double(c.EXPR); }                   \
  }
#define STOREX_UINT(KEY, EXPR)                                                            \
  Field {                                                                                 \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.EXPR = parse_uint(KEY, v); },   \
        [](const ExperimentConfig& c) { return std::to_string(c.EXPR); }                  \
  }
#define STOREX_BOOL(KEY, EXPR)                                                            \
  Field {                                                                                 \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.EXPR = parse_bool(KEY, v); },   \
        [](const ExperimentConfig& c) { return std::string(c.EXPR ? "true" : "false"); }  \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      size_field("dataset.n_graphs", &ExperimentConfig::n_graphs),
      STOREX_UINT("dataset.seed", dataset_seed),
      {"dataset.path", [](ExperimentConfig& c, const std::string& v) { c.dataset_path = v; },
       [](const ExperimentConfig& c) { return c.dataset_path; }},
      {"seeds", [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_seed_list(v); },
       [](const ExperimentConfig& c) { return join_seeds(c.seeds); }},
      size_field("parallel", &ExperimentConfig::parallel),
      STOREX_DOUBLE("heatmap.step", heatmap_step),
      size_field("histogram.bins", &ExperimentConfig::histogram_bins),

      STOREX_UINT("store.iterations", store.iterations),
      STOREX_DOUBLE("store.delta_mu", store.delta_mu),
      STOREX_DOUBLE("store.alpha", store.alpha),
      {"store.topk_schedule",
       [](ExperimentConfig& c, const std::string& v) {
         c.store.topk_schedule = parse_double_list(v);
       },
       [](const ExperimentConfig& c) { return join_doubles(c.store.topk_schedule); }},
      {"store.explainer",
       [](ExperimentConfig& c, const std::string& v) { c.store.explainer = explainer_from_string(v); },
       [](const ExperimentConfig& c) { return to_string(c.store.explainer); }},
      {"store.strategy",
       [](ExperimentConfig& c, const std::string& v) {
         c.store.strategy.kind = strategy_from_string(v);
       },
       [](const ExperimentConfig& c) { return to_string(c.store.strategy.kind); }},
      STOREX_DOUBLE("store.uniform_u", store.strategy.uniform_u),
      STOREX_BOOL("store.augmented_only", store.augmented_only),
      STOREX_BOOL("store.warm_start", store.warm_start),
      STOREX_DOUBLE("store.fidelity_topk", store.fidelity_topk),

      STOREX_UINT("gcn.hidden", store.train.hidden),
      {"gcn.readout",
       [](ExperimentConfig& c, const std::string& v) { c.store.train.readout = readout_from_string(v); },
       [](const ExperimentConfig& c) { return to_string(c.store.train.readout); }},
      STOREX_BOOL("gcn.center_biases", store.train.center_biases),
      STOREX_UINT("train.epochs", store.train.epochs),
      STOREX_DOUBLE("train.learning_rate", store.train.learning_rate),
      STOREX_UINT("train.patience", store.train.patience),
      STOREX_UINT("train.batch_size", store.train.batch_size),

      STOREX_UINT("gnnexplainer.epochs", store.mask_opt.epochs),
      STOREX_DOUBLE("gnnexplainer.learning_rate", store.mask_opt.learning_rate),
      STOREX_DOUBLE("gnnexplainer.size_coef", store.mask_opt.size_coef),
      STOREX_DOUBLE("gnnexplainer.entropy_coef", store.mask_opt.entropy_coef),
      STOREX_DOUBLE("gnnexplainer.init_scale", store.mask_opt.init_scale),

      STOREX_UINT("pgexplainer.hidden", store.pg.hidden),
      STOREX_UINT("pgexplainer.epochs", store.pg.epochs),
      STOREX_DOUBLE("pgexplainer.learning_rate", store.pg.learning_rate),
      STOREX_DOUBLE("pgexplainer.weight_decay", store.pg.weight_decay),
      STOREX_DOUBLE("pgexplainer.temperature_start", store.pg.temperature_start),
      STOREX_DOUBLE("pgexplainer.temperature_end", store.pg.temperature_end),
      STOREX_DOUBLE("pgexplainer.size_coef", store.pg.size_coef),
      STOREX_DOUBLE("pgexplainer.entropy_coef", store.pg.entropy_coef),

      STOREX_DOUBLE("fidelity.alpha1", store.fidelity.alpha1),
      STOREX_DOUBLE("fidelity.alpha2", store.fidelity.alpha2),
      STOREX_UINT("fidelity.mc_samples", store.fidelity.mc_samples),
      STOREX_UINT("fidelity.seed", store.fidelity.seed),
  };
  return f;
}

#undef STOREX_DOUBLE
#undef STOREX_UINT
#undef STOREX_BOOL

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; }

json record_json(const IterationRecord& r) {
  return {{"iteration", r.iteration}, {"test_accuracy", r.test_accuracy}, {"auc", r.auc},
          {"auc_per_graph", r.auc_per_graph}, {"fid_plus", r.fid_plus}, {"fid_minus", r.fid_minus}};
}

const std::vector<std::string> kMetricNames = {"test_accuracy", "auc", "auc_per_graph", "fid_plus",
                                               "fid_minus"};

double metric(const IterationRecord& r, const std::string& name) {
  if (name == "test_accuracy") return r.test_accuracy;
  if (name == "auc") return r.auc;
  if (name == "auc_per_graph") return r.auc_per_graph;
  if (name == "fid_plus") return r.fid_plus;
  return r.fid_minus;
}

HeatmapGrid mean_grid(const std::vector<const HeatmapGrid*>& grids) {
  HeatmapGrid out = *grids.front();
  std::span<double> acc = out.accuracy.data();
  for (std::size_t k = 1; k < grids.size(); ++k) {
    const std::span<const double> other = grids[k]->accuracy.data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += other[i];
  }
  for (double& a : acc) a /= static_cast<double>(grids.size());
  return out;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::vector<double> final_aucs(const std::vector<SeedRun>& runs, std::size_t* failures) {
  std::vector<double> out;
  for (const SeedRun& r : runs) {
    if (r.ok) {
      out.push_back(r.history.back().auc);
    } else {
      ++*failures;
    }
  }
  return out;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ParseError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool schedule_set = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    apply_setting(base, key, trim(line.substr(eq + 1)));
    if (key == "store.topk_schedule") schedule_set = true;
  }
  if (!schedule_set && base.store.topk_schedule.size() != base.store.iterations) {
    base.store.topk_schedule = shrinking_schedule(base.store.iterations);
  }
  return base;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

std::map<std::string, std::string> config_entries(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> m;
  for (const Field& f : fields()) m[f.key] = f.get(cfg);
  return m;
}

std::string config_hash(const ExperimentConfig& cfg) {
  uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : config_to_text(cfg)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ParameterError("seed list is empty");
  if (cfg.parallel == 0) throw ParameterError("parallel must be >= 1");
  if (cfg.dataset_path.empty() && (cfg.n_graphs < 2 || cfg.n_graphs % 2 != 0)) {
    throw ParameterError("dataset.n_graphs must be even and >= 2 (odd n_graphs)");
  }
  const double cells = cfg.heatmap_step > 0.0 ? 1.0 / cfg.heatmap_step : 0.0;
  if (!(cfg.heatmap_step > 0.0 && cfg.heatmap_step <= 0.1) ||
      std::abs(cells - std::round(cells)) > 1e-9 || std::llround(cells) % 10 != 0) {
    throw ParameterError("heatmap.step must be 0.1 or 0.1/m for an integer m");
  }
  if (cfg.histogram_bins < 2) throw ParameterError("histogram.bins must be >= 2");
  validate(cfg.store);
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
  std::vector<uint64_t> out;
  for (const std::string& item : split_commas(text)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_uint("seeds", item));
      continue;
    }
    const uint64_t lo = parse_uint("seeds", trim(item.substr(0, dash)));
    const uint64_t hi = parse_uint("seeds", trim(item.substr(dash + 1)));
    if (hi < lo) throw ParseError("seeds: empty range '" + item + "'");
    for (uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split_commas(text)) out.push_back(parse_double("list", item));
  return out;
}

std::vector<double> shrinking_schedule(std::size_t n) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(n == 1 ? 0.9 : 0.9 - 0.8 * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

Dataset load_or_generate(const ExperimentConfig& cfg) {
  if (!cfg.dataset_path.empty()) return load_dataset(cfg.dataset_path);
  Rng rng(cfg.dataset_seed);
  return generate_ba2motifs(cfg.n_graphs, rng);
}

SeedRun run_seed(const Dataset& ds, const ExperimentConfig& cfg, uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  Rng rng = Rng(seed).split(kSeedStream);
  try {
    StoreResult res = store_loop(ds, cfg.store, rng, [seed](const IterationRecord& r) {
      spdlog::debug("seed {} iteration {}: acc {:.3f} auc {:.3f}", seed, r.iteration, r.test_accuracy,
                    r.auc);
    });
    run.history = std::move(res.history);
    run.heat_vanilla = weight_sweep_heatmap(res.vanilla_model, ds, cfg.heatmap_step);
    run.heat_store = weight_sweep_heatmap(res.model, ds, cfg.heatmap_step);
    if (!res.weight_params.empty()) {
      const GaussianWeightParams& p = res.weight_params.back();
      run.histogram = weight_histogram(res.last_expl_weights, res.last_other_weights,
                                       cfg.histogram_bins, p.mu1, p.mu2, p.sigma);
    }
    run.ok = true;
  } catch (const StoreLoopError& e) {
    run.history = e.history();
    run.error = e.what();
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  return run;
}

std::vector<SeedRun> run_seeds(const Dataset& ds, const ExperimentConfig& cfg) {
  std::vector<SeedRun> runs(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      spdlog::info("seed {} started", cfg.seeds[i]);
      runs[i] = run_seed(ds, cfg, cfg.seeds[i]);
      if (runs[i].ok) {
        spdlog::info("seed {} done: vanilla auc {:.3f}, final auc {:.3f}", cfg.seeds[i],
                     runs[i].history.front().auc, runs[i].history.back().auc);
      } else {
        spdlog::error("seed {} failed: {}", cfg.seeds[i], runs[i].error);
      }
    }
  };
  const std::size_t width = std::min(cfg.parallel, runs.size());
  if (width <= 1) {
    worker();
    return runs;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);
  pool.clear();
  return runs;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

std::string build_report(const ExperimentConfig& cfg, const Dataset& ds,
                         const std::vector<SeedRun>& runs, const std::string& timestamp) {
  json report;
  report["provenance"] = {{"artifact", "storexplain"},
                          {"version", kArtifactVersion},
                          {"config_hash", config_hash(cfg)},
                          {"dataset", ds.provenance},
                          {"dataset_seed", ds.seed},
                          {"n_graphs", ds.graphs.size()}};
  report["generated_at"] = timestamp;
  report["config"] = config_entries(cfg);

  json per_seed = json::array();
  json failures = json::array();
  std::map<std::string, std::vector<double>> vanilla, store;
  std::map<std::size_t, std::map<std::string, std::vector<double>>> by_iteration;
  std::vector<double> heat_v11, heat_v101, heat_s11, heat_s101;
  for (const SeedRun& r : runs) {
    if (!r.ok) {
      failures.push_back({{"seed", r.seed},
                          {"error", r.error},
                          {"completed_iterations", r.history.size()}});
      continue;
    }
    const IterationRecord& v = r.history.front();
    const IterationRecord& s = r.history.back();
    json row = {{"seed", r.seed}, {"vanilla", record_json(v)}, {"store", record_json(s)}};
    row["heatmap"] = {{"vanilla_1_1", r.heat_vanilla.at(1.0, 1.0)},
                      {"vanilla_1_0.1", r.heat_vanilla.at(1.0, 0.1)},
                      {"store_1_1", r.heat_store.at(1.0, 1.0)},
                      {"store_1_0.1", r.heat_store.at(1.0, 0.1)}};
    per_seed.push_back(row);
    for (const std::string& m : kMetricNames) {
      vanilla[m].push_back(metric(v, m));
      store[m].push_back(metric(s, m));
    }
    for (const IterationRecord& it : r.history) {
      for (const std::string& m : kMetricNames) by_iteration[it.iteration][m].push_back(metric(it, m));
    }
    heat_v11.push_back(r.heat_vanilla.at(1.0, 1.0));
    heat_v101.push_back(r.heat_vanilla.at(1.0, 0.1));
    heat_s11.push_back(r.heat_store.at(1.0, 1.0));
    heat_s101.push_back(r.heat_store.at(1.0, 0.1));
  }
  report["per_seed"] = per_seed;
  report["failures"] = failures;

  json agg;
  for (const std::string& m : kMetricNames) {
    agg["vanilla"][m] = summary_json(summarize(vanilla[m]));
    agg["store"][m] = summary_json(summarize(store[m]));
  }
  agg["heatmap"] = {{"vanilla_1_1", summary_json(summarize(heat_v11))},
                    {"vanilla_1_0.1", summary_json(summarize(heat_v101))},
                    {"store_1_1", summary_json(summarize(heat_s11))},
                    {"store_1_0.1", summary_json(summarize(heat_s101))}};
  json iters = json::array();
  for (const auto& [it, metrics] : by_iteration) {
    json row = {{"iteration", it}};
    for (const auto& [m, vals] : metrics) row[m] = summary_json(summarize(vals));
    iters.push_back(row);
  }
  agg["by_iteration"] = iters;
  report["aggregate"] = agg;
  return report.dump(2) + "\n";
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const Dataset& ds, const fs::path& out) {
  validate(cfg);
  fs::create_directories(out);
  ExperimentOutcome outcome;
  outcome.runs = run_seeds(ds, cfg);

  CsvTable results;
  results.header = {"seed", "variant"};
  results.header.insert(results.header.end(), kMetricNames.begin(), kMetricNames.end());
  CsvTable history;
  history.header = {"iteration", "seed", "test_accuracy", "auc", "fid_plus", "fid_minus", "auc_per_graph"};
  CsvTable hist_all;
  hist_all.header = {"seed", "bin_center", "count_expl", "count_non", "density1", "density2"};
  std::vector<const HeatmapGrid*> grids_v, grids_s;

  for (const SeedRun& r : outcome.runs) {
    for (const IterationRecord& it : r.history) {
      history.rows.push_back({std::to_string(it.iteration), std::to_string(r.seed),
                              format_double(it.test_accuracy), format_double(it.auc),
                              format_double(it.fid_plus), format_double(it.fid_minus),
                              format_double(it.auc_per_graph)});
    }
    if (!r.ok) {
      ++outcome.failures;
      continue;
    }
    for (const auto& [variant, rec] :
         {std::pair{"vanilla", r.history.front()}, std::pair{"store", r.history.back()}}) {
      std::vector<std::string> row{std::to_string(r.seed), variant};
      for (const std::string& m : kMetricNames) row.push_back(format_double(metric(rec, m)));
      results.rows.push_back(row);
    }
    const fs::path dir = out / ("seed_" + std::to_string(r.seed));
    fs::create_directories(dir);
    write_heatmap_csv(dir / "heatmap_vanilla.csv", r.heat_vanilla);
    write_heatmap_csv(dir / "heatmap_store.csv", r.heat_store);
    if (r.histogram) {
      write_histogram_csv(dir / "histograms.csv", *r.histogram);
      const WeightHistogram& h = *r.histogram;
      for (std::size_t b = 0; b < h.centers.size(); ++b) {
        hist_all.rows.push_back({std::to_string(r.seed), format_double(h.centers[b]),
                                 std::to_string(h.count_expl[b]), std::to_string(h.count_non[b]),
                                 format_double(h.density1[b]), format_double(h.density2[b])});
      }
    }
    grids_v.push_back(&r.heat_vanilla);
    grids_s.push_back(&r.heat_store);
  }

  write_csv(out / "results.csv", results);
  write_csv(out / "history.csv", history);
  write_csv(out / "histograms.csv", hist_all);
  if (!grids_v.empty()) {
    const HeatmapGrid mv = mean_grid(grids_v);
    const HeatmapGrid ms = mean_grid(grids_s);
    write_heatmap_csv(out / "heatmap_vanilla.csv", mv);
    write_heatmap_csv(out / "heatmap_store.csv", ms);
    write_heatmap_svg(out / "heatmap_vanilla.svg", mv, "vanilla classifier");
    write_heatmap_svg(out / "heatmap_store.svg", ms, "retrained classifier");
  }
  outcome.report_json = build_report(cfg, ds, outcome.runs, utc_timestamp());
  write_text(out / "report.json", outcome.report_json);
  return outcome;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, const Dataset& ds,
                                      const std::vector<StrategyKind>& strategies,
                                      const fs::path& out) {
  if (strategies.empty()) throw ParameterError("ablation: no strategies given");
  fs::create_directories(out);
  std::vector<AblationRow> rows;
  CsvTable per_seed;
  per_seed.header = {"strategy", "seed", "status", "auc"};
  for (const StrategyKind kind : strategies) {
    ExperimentConfig c = cfg;
    c.store.strategy.kind = kind;
    validate(c);
    spdlog::info("ablation: strategy {}", to_string(kind));
    AblationRow row;
    row.strategy = kind;
    for (const SeedRun& r : run_seeds(ds, c)) {
      if (!r.ok) {
        ++row.failures;
        per_seed.rows.push_back({to_string(kind), std::to_string(r.seed), "failed", ""});
        continue;
      }
      row.seeds.push_back(r.seed);
      row.auc.push_back(r.history.back().auc);
      per_seed.rows.push_back(
          {to_string(kind), std::to_string(r.seed), "ok", format_double(r.history.back().auc)});
    }
    row.summary = summarize(row.auc);
    rows.push_back(row);
  }
  CsvTable table;
  table.header = {"strategy", "n_seeds", "auc_mean", "auc_std", "failures"};
  for (const AblationRow& r : rows) {
    table.rows.push_back({to_string(r.strategy), std::to_string(r.summary.n),
                          format_double(r.summary.mean), format_double(r.summary.std),
                          std::to_string(r.failures)});
  }
  write_csv(out / "ablation.csv", table);
  write_csv(out / "ablation_seeds.csv", per_seed);
  return rows;
}

std::string to_string(SweepParam p) { return p == SweepParam::kIterations ? "iterations" : "delta_mu"; }

SweepParam sweep_param_from_string(const std::string& s) {
  if (s == "iterations") return SweepParam::kIterations;
  if (s == "delta_mu") return SweepParam::kDeltaMu;
  throw ParameterError("unknown sweep parameter '" + s + "' (valid: iterations, delta_mu)");
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const Dataset& ds, SweepParam param,
                                const std::vector<double>& values, const fs::path& out) {
  if (values.empty()) throw ParameterError("sweep: empty value list");
  ExperimentConfig base = cfg;
  validate(base);
  for (const double v : values) {
    if (param == SweepParam::kIterations && (v < 0.0 || v != std::floor(v))) {
      throw ParameterError("sweep: iterations must be non-negative integers, got " + format_double(v));
    }
  }
  fs::create_directories(out);
  std::vector<SweepRow> rows;
  for (const double v : values) {
    ExperimentConfig c = base;
    SweepRow row;
    row.value = v;
    if (param == SweepParam::kIterations) {
      c.store.iterations = static_cast<std::size_t>(v);
      c.store.topk_schedule = shrinking_schedule(c.store.iterations);
    } else {
      c.store.delta_mu = v;
    }
    try {
      validate(c);
    } catch (const ParameterError& e) {
      row.status = "infeasible";
      row.message = e.what();
      spdlog::warn("sweep {} = {}: {}", to_string(param), format_double(v), e.what());
      rows.push_back(row);
      continue;
    }
    spdlog::info("sweep {} = {}", to_string(param), format_double(v));
    std::size_t failures = 0;
    const std::vector<double> aucs = final_aucs(run_seeds(ds, c), &failures);
    row.summary = summarize(aucs);
    row.status = aucs.empty() ? "failed" : "ok";
    if (failures > 0) row.message = std::to_string(failures) + " seed(s) failed";
    rows.push_back(row);
  }
  CsvTable table;
  table.header = {"parameter", "value", "status", "n_seeds", "auc_mean", "auc_std", "message"};
  for (const SweepRow& r : rows) {
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    table.rows.push_back({to_string(param), format_double(r.value), r.status,
                          std::to_string(r.summary.n), format_double(r.summary.mean),
                          format_double(r.summary.std), msg});
  }
  write_csv(out / "sweep.csv", table);
  return rows;
}

}  // namespace storex

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "storex/augment.hpp"
#include "storex/ba2motifs.hpp"
#include "storex/dataset_io.hpp"
#include "storex/eval.hpp"
#include "storex/experiment.hpp"
#include "storex/normal.hpp"

namespace fs = std::filesystem;
using namespace storex;
using nd::Matrix;
using nd::Tape;
using nd::Var;
using nlohmann::json;

namespace {

constexpr double kRuntimeBudgetSeconds = 2.0 * 3600.0;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string printf_string(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

std::vector<double> collect(const std::vector<SeedRun>& runs, auto&& f) {
  std::vector<double> out;
  for (const SeedRun& r : runs) {
    if (r.ok) out.push_back(f(r));
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void sampler_statistics() {
  Rng rng(2024);
  const GaussianWeightParams p = sample_weight_params(0.5, 0.001, rng);
  const int n = 100000;
  int below = 0;
  double s1 = 0.0, q1 = 0.0, s2 = 0.0, q2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w1 = sample_truncated_normal(p.mu1, p.sigma, 0.0, 1.0, rng);
    const double w2 = sample_truncated_normal(p.mu2, p.sigma, 0.0, 1.0, rng);
    below += w1 < w2 ? 1 : 0;
    s1 += w1;
    q1 += w1 * w1;
    s2 += w2;
    q2 += w2 * w2;
  }
  const double rate = static_cast<double>(below) / n;
  const double half = 2.5758293035489 * std::sqrt(0.001 * 0.999 / n);
  const bool rate_ok = std::abs(rate - 0.001) <= half;

  auto z_score = [&](double s, double q, double mu) {
    const double m = s / n;
    const double se = std::sqrt((q / n - m * m) / n);
    return std::abs(m - truncated_normal_mean(mu, p.sigma, 0.0, 1.0)) / se;
  };
  const double z1 = z_score(s1, q1, p.mu1);
  const double z2 = z_score(s2, q2, p.mu2);
  const bool means_ok = z1 <= 3.0 && z2 <= 3.0;

  Rng grid(7);
  int mismatches = 0, checked = 0;
  for (int i = 0; i < 20000; ++i) {
    const double dmu = grid.uniform(0.01, 0.99);
    const double alpha = grid.uniform(1e-8, 0.49);
    const double sigma = dmu / (std::numbers::sqrt2 * std::abs(std_normal_inv_cdf(alpha)));
    if (std::abs(dmu + 4.0 * sigma - 1.0) < 1e-9) continue;
    bool threw = false;
    try {
      solve_sigma(dmu, alpha);
    } catch (const InfeasibleParams&) {
      threw = true;
    }
    mismatches += threw != (dmu + 4.0 * sigma > 1.0) ? 1 : 0;
    ++checked;
  }
  report(5, rate_ok && means_ok && mismatches == 0,
         printf_string("P(W1<W2) = %.5f (99%% CI 0.001 +- %.5f); truncated-mean |z| = %.2f, %.2f (<= 3); "
             "infeasibility mismatches %d / %d",
             rate, half, z1, z2, mismatches, checked));
}

void numerical_core() {
  Rng rng(99);
  double worst_gcn = 0.0, worst_mask = 0.0, worst_concrete = 0.0;
  for (int t = 0; t < 10; ++t) {
    const GcnModel model = GcnModel::init(3, 5, 2, rng);
    const Graph g = oracle::random_graph(rng, 7, 4);
    const Matrix features = g.features();
    Matrix pick(1, 2);
    pick(0, static_cast<std::size_t>(t % 2)) = 1.0;
    worst_gcn = std::max(worst_gcn, oracle::gradient_error(
                                        [&](Tape& tape, Var a) {
                                          const GcnVars out = gcn_forward_weighted(tape, model, a, tape.constant(features));
                                          return nd::sum_all(nd::mul_elementwise(out.log_probs, tape.constant(pick)));
                                        },
                                        g.adjacency()));
    const Matrix m0 = oracle::random_matrix(rng, g.num_edges(), 1, 0.05, 0.95);
    worst_mask = std::max(worst_mask, oracle::gradient_error(
                                          [&](Tape& tape, Var m) {
                                            return explanation_loss(tape, model, g, m, t % 2, 0.005, 0.0);
                                          },
                                          m0));
    std::vector<double> noise(g.num_edges());
    for (double& z : noise) z = logistic_noise(rng);
    const double temperature = 1.0 + 4.0 * rng.uniform();
    const Matrix l0 = oracle::random_matrix(rng, g.num_edges(), 1, -2.0, 2.0);
    worst_concrete = std::max(worst_concrete, oracle::gradient_error(
                                                  [&](Tape& tape, Var l) {
                                                    return explanation_loss(tape, model, g,
                                                                            concrete_relaxation(l, noise, temperature),
                                                                            t % 2, 0.005, 0.0);
                                                  },
                                                  l0));
  }
  double worst_norm = 0.0;
  for (int t = 0; t < 10; ++t) {
    Tape tape;
    const Matrix lp = nd::log_softmax_rows(tape.constant(oracle::random_matrix(rng, 5, 4, -50.0, 50.0))).value();
    for (std::size_t r = 0; r < lp.rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < lp.cols(); ++c) total += std::exp(lp(r, c));
      worst_norm = std::max(worst_norm, std::abs(total - 1.0));
    }
  }
  report(6, worst_gcn < 1e-4 && worst_mask < 1e-4 && worst_concrete < 1e-4 && worst_norm <= 1e-12,
         printf_string("max rel err GCN %.2e, mask loss %.2e, concrete loss %.2e (< 1e-4); log-softmax |sum-1| %.1e "
             "(<= 1e-12)",
             worst_gcn, worst_mask, worst_concrete, worst_norm));
}

bool auc_oracle() {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.uniform_index(300);
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = t % 2 == 0 ? static_cast<double>(rng.uniform_index(6)) / 5.0 : rng.uniform();
      l[i] = static_cast<int>(rng.uniform_index(2));
    }
    l[0] = 1;
    l[1] = 0;
    if (auc_roc(s, l) != oracle::pairwise_auc(s, l)) return false;
  }
  return true;
}

bool dataset_round_trip(const Dataset& ds, const fs::path& dir) {
  const fs::path path = dir / "dataset_roundtrip.json";
  save_dataset(ds, path);
  return load_dataset(path) == ds;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = fs::current_path() / "acceptance_out";
  fs::create_directories(out);

  const ExperimentConfig cfg;
  validate(cfg);
  const Dataset ds = load_or_generate(cfg);
  std::printf("acceptance: %zu graphs, %zu seeds, config %s, outputs in %s\n", ds.size(), cfg.seeds.size(),
              config_hash(cfg).c_str(), out.string().c_str());
  std::fflush(stdout);

  sampler_statistics();
  numerical_core();

  const ExperimentOutcome main_run = run_experiment(cfg, ds, out / "run");
  const std::vector<SeedRun>& runs = main_run.runs;
  std::printf("refinement runs finished: %zu ok, %zu failed, %.0f s\n", runs.size() - main_run.failures,
              main_run.failures, seconds_since(t0));
  std::fflush(stdout);

  ExperimentConfig rerun_cfg = cfg;
  rerun_cfg.seeds = {cfg.seeds.front()};
  const std::vector<SeedRun> first{runs.front()};
  const bool rerun_identical = build_report(rerun_cfg, ds, first, "-") ==
                               build_report(rerun_cfg, ds, run_seeds(ds, rerun_cfg), "-");
  const bool auc_ok = auc_oracle();
  const bool io_ok = dataset_round_trip(ds, out);
  report(7, auc_ok && io_ok && rerun_identical,
         printf_string("auc_roc == pairwise oracle on 100 instances: %s; dataset round-trip bit-exact: %s; "
             "seed rerun report identical: %s",
             auc_ok ? "yes" : "no", io_ok ? "yes" : "no", rerun_identical ? "yes" : "no"));

  std::vector<SeedRun> random_runs, uniform_runs;
  {
    ExperimentConfig c = cfg;
    c.store.strategy.kind = StrategyKind::kRandom;
    random_runs = run_seeds(ds, c);
    c.store.strategy.kind = StrategyKind::kUniformProduct;
    uniform_runs = run_seeds(ds, c);
  }
  const double elapsed = seconds_since(t0);

  auto final_auc = [](const SeedRun& r) { return r.history.back().auc; };
  const double auc_v = mean(collect(runs, [](const SeedRun& r) { return r.history.front().auc; }));
  const double auc_s = mean(collect(runs, final_auc));
  report(1, auc_s > auc_v && auc_s - auc_v >= 0.03 && elapsed <= kRuntimeBudgetSeconds,
         printf_string("mean AUC vanilla %.4f -> refined %.4f (gap %+.4f, need > 0 and >= 0.03); runtime %.0f s (<= %.0f s)",
             auc_v, auc_s, auc_s - auc_v, elapsed, kRuntimeBudgetSeconds));

  const double v11 = mean(collect(runs, [](const SeedRun& r) { return r.heat_vanilla.at(1.0, 1.0); }));
  const double v101 = mean(collect(runs, [](const SeedRun& r) { return r.heat_vanilla.at(1.0, 0.1); }));
  const double s101 = mean(collect(runs, [](const SeedRun& r) { return r.heat_store.at(1.0, 0.1); }));
  report(2, v11 - v101 >= 0.10 && s101 - v101 >= 0.05,
         printf_string("vanilla acc (1,1) %.4f vs (1,0.1) %.4f (drop %.4f, need >= 0.10); refined (1,0.1) %.4f "
             "(gain %+.4f, need >= 0.05)",
             v11, v101, v11 - v101, s101, s101 - v101));

  const double auc_r = mean(collect(random_runs, final_auc));
  const double auc_u = mean(collect(uniform_runs, final_auc));
  report(3, auc_s - auc_r >= 0.03,
         printf_string("mean AUC gaussian %.4f vs random %.4f (gap %+.4f, need >= 0.03)", auc_s, auc_r, auc_s - auc_r));
  std::printf("[%s] criterion 3 (soft): gaussian %.4f vs uniform %.4f\n", auc_s >= auc_u ? "PASS" : "WARN", auc_s,
              auc_u);

  const double fp_v = mean(collect(runs, [](const SeedRun& r) { return r.history.front().fid_plus; }));
  const double fp_s = mean(collect(runs, [](const SeedRun& r) { return r.history.back().fid_plus; }));
  const double fm_v = mean(collect(runs, [](const SeedRun& r) { return r.history.front().fid_minus; }));
  const double fm_s = mean(collect(runs, [](const SeedRun& r) { return r.history.back().fid_minus; }));
  report(4, fp_s >= fp_v && fm_s <= fm_v,
         printf_string("Fid+ vanilla %.4f -> refined %.4f (need >=); Fid- vanilla %.4f -> refined %.4f (need <=); M = %zu",
             fp_v, fp_s, fm_v, fm_s, cfg.store.fidelity.mc_samples));

  const double acc0 = mean(collect(runs, [](const SeedRun& r) { return r.history.front().test_accuracy; }));
  double worst_iter_drop = 0.0, worst_seed_drop = 0.0;
  for (std::size_t l = 1; l <= cfg.store.iterations; ++l) {
    const double acc_l = mean(collect(runs, [l](const SeedRun& r) { return r.history.at(l).test_accuracy; }));
    worst_iter_drop = std::max(worst_iter_drop, std::abs(acc_l - acc0));
  }
  for (const SeedRun& r : runs) {
    if (!r.ok) continue;
    for (const IterationRecord& it : r.history) {
      worst_seed_drop = std::max(worst_seed_drop, std::abs(it.test_accuracy - r.history.front().test_accuracy));
    }
  }
  report(8, acc0 >= 0.95 && worst_iter_drop <= 0.05,
         printf_string("mean test accuracy %.4f (need >= 0.95); largest |mean acc(l) - mean acc(0)| %.4f (need <= 0.05); "
             "largest single-seed change %.4f",
             acc0, worst_iter_drop, worst_seed_drop));

  const double auc1 = mean(collect(runs, [](const SeedRun& r) { return r.history.at(1).auc; }));
  const double auc3 = mean(collect(runs, [](const SeedRun& r) { return r.history.at(3).auc; }));
  report(9, auc3 >= auc1, printf_string("mean AUC iteration 1 %.4f, iteration 3 %.4f (need iteration 3 >= iteration 1)", auc1, auc3));

  const std::size_t failed_seeds = main_run.failures;
  std::printf("summary: %d criteria failed, %zu seed runs failed, total %.0f s\n", failures, failed_seeds,
              seconds_since(t0));
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "storex/explain.hpp"
#include "storex/gcn.hpp"
#include "storex/graph.hpp"
#include "storex/rng.hpp"

namespace storex {

/// P(random positive scores above random negative), ties counted one half.
/// Computed from mid-ranks in integer arithmetic, so it equals pairwise counting exactly.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

enum class AucMode { kPooled, kPerGraphMean };

std::string to_string(AucMode m);
AucMode auc_mode_from_string(const std::string& s);

/// Edge-level AUC of mask scores against ground-truth edges. kPooled ranks
/// all (score, label) pairs together; kPerGraphMean averages per-graph AUCs
/// over graphs that contain both edge classes.
double explanation_auc(std::span<const EdgeMask> masks, std::span<const Graph> graphs,
                       AucMode mode = AucMode::kPooled);

struct FidelityConfig {
  /// Deletion probability of explanation edges in fid_plus.
  double alpha1 = 0.1;
  /// Deletion probability of non-explanation edges in fid_minus.
  double alpha2 = 0.9;
  std::size_t mc_samples = 50;
  uint64_t seed = 0;
};

/// 1[f(g) = y] - mean over samples of 1[f(g+) = y], y = f's prediction on g
/// and g+ drops each explanation edge independently with probability alpha1.
double fid_plus(const GcnModel& model, const Graph& g, std::span<const Edge> expl_edges,
                const FidelityConfig& cfg, Rng& rng);
/// As fid_plus, but g- keeps the explanation and drops each other edge with probability alpha2.
double fid_minus(const GcnModel& model, const Graph& g, std::span<const Edge> expl_edges,
                 const FidelityConfig& cfg, Rng& rng);

/// Accuracy with ground-truth edges set to w_exp and all other edges set to w_non.
struct HeatmapGrid {
  std::vector<double> exp_axis;
  std::vector<double> non_axis;
  /// rows follow non_axis, columns follow exp_axis.
  nd::Matrix accuracy;

  double at(double w_exp, double w_non) const;
};

/// Grid step..1 in both axes over the test split.
HeatmapGrid weight_sweep_heatmap(const GcnModel& model, const Dataset& ds, double grid_step = 0.1);

struct WeightHistogram {
  std::vector<double> centers;
  std::vector<std::size_t> count_expl;
  std::vector<std::size_t> count_non;
  /// Untruncated Normal(mu1, sigma^2) and Normal(mu2, sigma^2) densities at the centers.
  std::vector<double> density1;
  std::vector<double> density2;
};

/// Equal-width bins over [0, 1]; 1.0 falls in the last bin.
WeightHistogram weight_histogram(std::span<const double> samples_expl,
                                 std::span<const double> samples_non, std::size_t bins,
                                 double mu1, double mu2, double sigma);

/// Simple comma-separated table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Decimal text that reads back to the same double.
std::string format_double(double v);

void write_heatmap_csv(const std::filesystem::path& path, const HeatmapGrid& grid);
HeatmapGrid read_heatmap_csv(const std::filesystem::path& path);
void write_heatmap_svg(const std::filesystem::path& path, const HeatmapGrid& grid,
                       const std::string& title);
void write_histogram_csv(const std::filesystem::path& path, const WeightHistogram& h);

}  // namespace storex

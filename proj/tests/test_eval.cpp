#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "storex/augment.hpp"
#include "storex/ba2motifs.hpp"
#include "storex/errors.hpp"
#include "storex/eval.hpp"
#include "storex/normal.hpp"

using namespace storex;
using nd::Matrix;

namespace {

struct Trained {
  Dataset ds;
  GcnModel model;
};

const Trained& trained() {
  static const Trained t = [] {
    Rng rng(400);
    Trained out{generate_ba2motifs(100, rng), {}};
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.hidden = 8;
    out.model = train_gnn(out.ds, cfg);
    return out;
  }();
  return t;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("storex_test_" + name);
}

}  // namespace

TEST(Auc, Examples) {
  const std::vector<double> s1{0.9, 0.8, 0.1};
  const std::vector<int> l1{1, 1, 0};
  EXPECT_EQ(auc_roc(s1, l1), 1.0);
  const std::vector<double> s2{0.1, 0.9};
  const std::vector<int> l2{1, 0};
  EXPECT_EQ(auc_roc(s2, l2), 0.0);
  const std::vector<double> s3{0.5, 0.5};
  EXPECT_EQ(auc_roc(s3, l2), 0.5);
}

TEST(Auc, EqualsPairwiseCountingExactly) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(200);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores force plenty of ties.
      scores[i] = trial % 2 == 0 ? static_cast<double>(rng.uniform_index(5)) / 4.0 : rng.uniform();
      labels[i] = static_cast<int>(rng.uniform_index(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    ASSERT_EQ(auc_roc(scores, labels), oracle::pairwise_auc(scores, labels)) << "trial " << trial;
  }
}

TEST(Auc, InvariantUnderMonotoneTransform) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(60), t(60);
    std::vector<int> l(60);
    for (std::size_t i = 0; i < 60; ++i) {
      s[i] = rng.uniform(-2.0, 2.0);
      t[i] = std::exp(3.0 * s[i]) + 7.0;
      l[i] = i % 3 == 0 ? 1 : 0;
    }
    EXPECT_EQ(auc_roc(s, l), auc_roc(t, l));
  }
}

TEST(Auc, SingleClassIsContractError) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<int> l{1, 1};
  EXPECT_THROW(auc_roc(s, l), ContractError);
}

TEST(ExplanationAuc, GroundTruthAndConstantMasks) {
  Rng rng(3);
  const Dataset ds = generate_ba2motifs(10, rng);
  std::vector<EdgeMask> perfect, flat;
  for (const Graph& g : ds.graphs) {
    EdgeMask m{g.edges(), {}};
    for (int x : g.gt_indicator()) m.scores.push_back(x);
    perfect.push_back(m);
    flat.push_back({g.edges(), std::vector<double>(g.num_edges(), 0.3)});
  }
  EXPECT_EQ(explanation_auc(perfect, ds.graphs), 1.0);
  EXPECT_EQ(explanation_auc(perfect, ds.graphs, AucMode::kPerGraphMean), 1.0);
  EXPECT_EQ(explanation_auc(flat, ds.graphs), 0.5);
  EXPECT_EQ(explanation_auc(flat, ds.graphs, AucMode::kPerGraphMean), 0.5);
}

TEST(ExplanationAuc, MissingGroundTruthNamesTheGraph) {
  Rng rng(4);
  const Dataset ds = generate_ba2motifs(2, rng);
  std::vector<Graph> graphs = ds.graphs;
  graphs[1] = Graph(graphs[1].features(), graphs[1].adjacency(), graphs[1].label());
  std::vector<EdgeMask> masks;
  for (const Graph& g : graphs) masks.push_back({g.edges(), std::vector<double>(g.num_edges(), 0.5)});
  try {
    explanation_auc(masks, graphs);
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
  }
}

TEST(Fidelity, TrivialCasesAreExactlyZero) {
  const auto& t = trained();
  const Graph& g = t.ds.graphs[0];
  Rng rng(5);
  FidelityConfig cfg;
  const std::vector<Edge> none;
  const std::vector<Edge> all = g.edges();
  const std::vector<Edge> gt = *g.gt_edges();
  EXPECT_EQ(fid_plus(t.model, g, none, cfg, rng), 0.0);
  EXPECT_EQ(fid_minus(t.model, g, all, cfg, rng), 0.0);
  FidelityConfig zero = cfg;
  zero.alpha1 = 0.0;
  zero.alpha2 = 0.0;
  EXPECT_EQ(fid_plus(t.model, g, gt, zero, rng), 0.0);
  EXPECT_EQ(fid_minus(t.model, g, gt, zero, rng), 0.0);
}

TEST(Fidelity, DeterministicAndBounded) {
  const auto& t = trained();
  const FidelityConfig cfg;
  for (std::size_t i = 0; i < 10; ++i) {
    const Graph& g = t.ds.graphs[i];
    const std::vector<Edge> gt = *g.gt_edges();
    Rng a(6), b(6);
    const double p1 = fid_plus(t.model, g, gt, cfg, a);
    const double p2 = fid_plus(t.model, g, gt, cfg, b);
    EXPECT_EQ(p1, p2);
    const double m1 = fid_minus(t.model, g, gt, cfg, a);
    EXPECT_EQ(m1, fid_minus(t.model, g, gt, cfg, b));
    for (double v : {p1, m1}) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Fidelity, Errors) {
  const auto& t = trained();
  const Graph& g = t.ds.graphs[0];
  Rng rng(7);
  FidelityConfig cfg;
  cfg.mc_samples = 0;
  EXPECT_THROW(fid_plus(t.model, g, *g.gt_edges(), cfg, rng), ParameterError);
  cfg.mc_samples = 5;
  cfg.alpha1 = 1.5;
  EXPECT_THROW(fid_plus(t.model, g, *g.gt_edges(), cfg, rng), ParameterError);
}

TEST(Heatmap, CornerEqualsUnweightedAccuracy) {
  const auto& t = trained();
  const HeatmapGrid grid = weight_sweep_heatmap(t.model, t.ds, 0.25);
  EXPECT_EQ(grid.exp_axis, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(grid.accuracy.rows(), 4u);
  EXPECT_EQ(grid.accuracy.cols(), 4u);
  EXPECT_EQ(grid.at(1.0, 1.0), evaluate_accuracy(t.model, t.ds.subset(Split::kTest)));
  for (double a : grid.accuracy.data()) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
  EXPECT_THROW(grid.at(0.3, 1.0), ContractError);
}

TEST(Heatmap, CellMatchesDirectReweighting) {
  const auto& t = trained();
  const HeatmapGrid grid = weight_sweep_heatmap(t.model, t.ds, 0.5);
  double correct = 0.0;
  const auto test = t.ds.subset(Split::kTest);
  for (const Graph& g : test) {
    std::map<Edge, double> w;
    for (Edge e : g.edges()) w[e] = 0.5;
    for (Edge e : *g.gt_edges()) w[e] = 1.0;
    correct += predict(t.model, apply_edge_weights(g, w)) == g.label() ? 1.0 : 0.0;
  }
  EXPECT_EQ(grid.at(1.0, 0.5), correct / static_cast<double>(test.size()));
}

TEST(Heatmap, CsvRoundTripAndSvg) {
  const auto& t = trained();
  const HeatmapGrid grid = weight_sweep_heatmap(t.model, t.ds, 0.5);
  const auto csv = temp_path("heat.csv");
  write_heatmap_csv(csv, grid);
  const HeatmapGrid back = read_heatmap_csv(csv);
  EXPECT_EQ(back.exp_axis, grid.exp_axis);
  EXPECT_EQ(back.non_axis, grid.non_axis);
  EXPECT_EQ(back.accuracy, grid.accuracy);
  const auto svg = temp_path("heat.svg");
  write_heatmap_svg(svg, grid, "a < b & c");
  std::ifstream in(svg);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_NE(text.find("<svg"), std::string::npos);
  EXPECT_NE(text.find("a &lt; b &amp; c"), std::string::npos);
  std::filesystem::remove(csv);
  std::filesystem::remove(svg);
}

TEST(Heatmap, RejectsBadStep) {
  const auto& t = trained();
  EXPECT_THROW(weight_sweep_heatmap(t.model, t.ds, 0.0), ParameterError);
  EXPECT_THROW(weight_sweep_heatmap(t.model, t.ds, 0.8), ParameterError);
}

TEST(Histogram, IdenticalSamplesOccupyOneBin) {
  const std::vector<double> same(50, 0.33);
  const WeightHistogram h = weight_histogram(same, same, 10, 0.8, 0.3, 0.1);
  int occupied = 0;
  for (std::size_t c : h.count_expl) occupied += c > 0 ? 1 : 0;
  EXPECT_EQ(occupied, 1);
  EXPECT_EQ(h.count_expl[3], 50u);
  const std::vector<double> top{1.0};
  EXPECT_EQ(weight_histogram(top, top, 4, 0.8, 0.3, 0.1).count_non.back(), 1u);
}

TEST(Histogram, ModeNearMean) {
  Rng rng(8);
  std::vector<double> x;
  for (int i = 0; i < 100000; ++i) x.push_back(sample_truncated_normal(0.7, 0.11, 0.0, 1.0, rng));
  const WeightHistogram h = weight_histogram(x, x, 20, 0.7, 0.7, 0.11);
  const auto mode = std::max_element(h.count_expl.begin(), h.count_expl.end()) - h.count_expl.begin();
  EXPECT_LE(std::abs(h.centers[static_cast<std::size_t>(mode)] - 0.7), 0.05 + 1e-12);
  EXPECT_NEAR(h.density1[static_cast<std::size_t>(mode)], std_normal_pdf((h.centers[mode] - 0.7) / 0.11) / 0.11, 1e-12);
}

TEST(Histogram, SeparatedDistributionsBarelyOverlap) {
  Rng rng(9);
  const GaussianWeightParams p = sample_weight_params(0.5, 0.001, rng);
  std::vector<double> a, b;
  for (int i = 0; i < 50000; ++i) {
    a.push_back(sample_truncated_normal(p.mu1, p.sigma, 0.0, 1.0, rng));
    b.push_back(sample_truncated_normal(p.mu2, p.sigma, 0.0, 1.0, rng));
  }
  const WeightHistogram h = weight_histogram(a, b, 20, p.mu1, p.mu2, p.sigma);
  double overlap = 0.0;
  for (std::size_t i = 0; i < h.centers.size(); ++i) {
    overlap += std::min(h.count_expl[i] / 50000.0, h.count_non[i] / 50000.0);
  }
  EXPECT_LE(overlap, 0.05);
}

TEST(Histogram, Errors) {
  const std::vector<double> x{0.5};
  const std::vector<double> none;
  EXPECT_THROW(weight_histogram(x, x, 1, 0.5, 0.5, 0.1), ParameterError);
  EXPECT_THROW(weight_histogram(none, none, 10, 0.5, 0.5, 0.1), ContractError);
}

TEST(Csv, RoundTripAndShortestDoubles) {
  CsvTable t{{"a", "b"}, {{"1", format_double(0.1)}, {"x", format_double(1.0 / 3.0)}}};
  const auto path = temp_path("table.csv");
  write_csv(path, t);
  const CsvTable back = read_csv(path);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(std::stod(back.rows[1][back.column("b")]), 1.0 / 3.0);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_THROW(back.column("c"), ParseError);
  std::filesystem::remove(path);
}

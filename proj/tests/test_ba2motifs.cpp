#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "storex/ba2motifs.hpp"
#include "storex/dataset_io.hpp"
#include "storex/errors.hpp"

using namespace storex;
using nd::Matrix;

namespace {

std::size_t degree_sum(const Graph& g) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    for (std::size_t j = 0; j < g.num_nodes(); ++j) total += g.adjacency()(i, j) > 0.0 ? 1 : 0;
  }
  return total;
}

bool connected(const Graph& g) {
  std::set<int> seen{0};
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < g.num_nodes(); ++j) {
      if (g.adjacency()(v, j) > 0.0 && seen.insert(static_cast<int>(j)).second) stack.push_back(static_cast<int>(j));
    }
  }
  return seen.size() == g.num_nodes();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("storex_test_" + name);
}

}  // namespace

TEST(BaBase, TwoNodesOneEdge) {
  Rng rng(1);
  const Graph g = ba_base(2, 1, rng);
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.edges().front(), (Edge{0, 1}));
}

TEST(BaBase, TreeWhenOneEdgePerNode) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Graph g = ba_base(20, 1, rng);
    EXPECT_EQ(g.num_nodes(), 20u);
    EXPECT_EQ(g.num_edges(), 19u);
    EXPECT_TRUE(connected(g));
  }
}

TEST(BaBase, DegreeSumWithTwoEdgesPerNode) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Graph g = ba_base(5, 2, rng);
    EXPECT_EQ(degree_sum(g), 14u);
  }
}

TEST(BaBase, FeaturesAreOnes) {
  Rng rng(3);
  const Graph g = ba_base(6, 1, rng);
  EXPECT_EQ(g.features(), Matrix(6, kBa2MotifsFeatureDim, 1.0));
}

TEST(AttachMotif, HouseAndCycleEdgeArithmetic) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Graph base = ba_base(20, 1, rng);
    const Graph house = attach_motif(base, MotifKind::kHouse, rng);
    EXPECT_EQ(house.num_nodes(), 25u);
    EXPECT_EQ(house.num_edges(), 26u);
    EXPECT_EQ(house.gt_edges()->size(), 6u);
    EXPECT_EQ(house.label(), 0);
    EXPECT_TRUE(connected(house));
    const Graph cycle = attach_motif(base, MotifKind::kFiveCycle, rng);
    EXPECT_EQ(cycle.num_nodes(), 25u);
    EXPECT_EQ(cycle.num_edges(), 25u);
    EXPECT_EQ(cycle.gt_edges()->size(), 5u);
    EXPECT_EQ(cycle.label(), 1);
    for (Edge e : *cycle.gt_edges()) {
      EXPECT_GE(e.u, 20);
      EXPECT_GE(e.v, 20);
    }
  }
}

TEST(AttachMotif, SingleNodeBase) {
  Rng rng(4);
  const Graph base(Matrix(1, kBa2MotifsFeatureDim, 1.0), Matrix(1, 1));
  const Graph g = attach_motif(base, MotifKind::kHouse, rng);
  EXPECT_EQ(g.num_nodes(), 6u);
  EXPECT_EQ(g.num_edges(), 7u);
}

TEST(Ba2Motifs, BalancedStratifiedSplit) {
  Rng rng(5);
  const Dataset ds = generate_ba2motifs(200, rng);
  ASSERT_EQ(ds.size(), 200u);
  int ones = 0;
  for (const Graph& g : ds.graphs) ones += g.label();
  EXPECT_EQ(ones, 100);
  EXPECT_EQ(ds.indices(Split::kTrain).size(), 160u);
  EXPECT_EQ(ds.indices(Split::kVal).size(), 20u);
  EXPECT_EQ(ds.indices(Split::kTest).size(), 20u);
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    int pos = 0;
    const auto idx = ds.indices(s);
    for (std::size_t i : idx) pos += ds.graphs[i].label();
    EXPECT_EQ(2 * pos, static_cast<int>(idx.size()));
  }
}

TEST(Ba2Motifs, AverageSizesMatchPublishedStatistics) {
  Rng rng(0);
  const Dataset ds = generate_ba2motifs(1000, rng);
  double nodes = 0.0, directed = 0.0;
  for (const Graph& g : ds.graphs) {
    nodes += static_cast<double>(g.num_nodes());
    directed += 2.0 * static_cast<double>(g.num_edges());
  }
  EXPECT_DOUBLE_EQ(nodes / 1000.0, 25.0);
  EXPECT_NEAR(directed / 1000.0, 51.0, 1.0);
}

TEST(Ba2Motifs, OddCountIsRejected) {
  Rng rng(0);
  EXPECT_THROW(generate_ba2motifs(7, rng), ParameterError);
}

TEST(Ba2Motifs, SameSeedSameDataset) {
  Rng a(9), b(9);
  EXPECT_EQ(generate_ba2motifs(40, a), generate_ba2motifs(40, b));
  Rng c(10);
  Rng d(9);
  EXPECT_NE(generate_ba2motifs(40, c), generate_ba2motifs(40, d));
}

TEST(DatasetIo, RoundTripIsBitExact) {
  Rng rng(11);
  Dataset ds = generate_ba2motifs(20, rng);
  std::vector<double> w = ds.graphs[0].edge_weights();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / (3.0 + static_cast<double>(i));
  ds.graphs[0] = ds.graphs[0].reweighted(w);
  const auto path = temp_path("roundtrip.json");
  save_dataset(ds, path);
  EXPECT_EQ(load_dataset(path), ds);
  std::filesystem::remove(path);
}

TEST(DatasetIo, WeightOutOfRangeIsValidationError) {
  const std::string text =
      R"({"seed": 0, "graphs": [{"label": 0, "features": [[1], [1]], "edges": [[0, 1, 1.2]], "split": "train"}]})";
  try {
    dataset_from_json(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("weight out of [0,1]"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, MalformedInputIsParseError) {
  EXPECT_THROW(dataset_from_json("{not json"), ParseError);
  EXPECT_THROW(dataset_from_json(R"({"seed": 0})"), ParseError);
  EXPECT_THROW(dataset_from_json(R"({"seed": 0, "graphs": [{"label": 0, "features": [[1]], "edges": [[0, 1]], "split": "train"}]})"),
               ParseError);
  EXPECT_THROW(
      dataset_from_json(R"({"seed": 0, "graphs": [{"label": 0, "features": [[1], [1]], "edges": [], "split": "dev"}]})"),
      ParseError);
}

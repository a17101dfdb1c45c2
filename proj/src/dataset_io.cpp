#include "storex/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "storex/errors.hpp"

namespace storex {

using nlohmann::json;

namespace {

json graph_to_json(const Graph& g, Split split) {
  json out;
  out["label"] = g.label();
  json feats = json::array();
  for (std::size_t r = 0; r < g.num_nodes(); ++r) {
    const double* row = g.features().row(r);
    feats.push_back(std::vector<double>(row, row + g.feature_dim()));
  }
  out["features"] = std::move(feats);
  json edges = json::array();
  for (Edge e : g.edges()) edges.push_back(json::array({e.u, e.v, g.weight(e)}));
  out["edges"] = std::move(edges);
  if (g.gt_edges()) {
    json gt = json::array();
    for (Edge e : *g.gt_edges()) gt.push_back(json::array({e.u, e.v}));
    out["gt_edges"] = std::move(gt);
  }
  out["split"] = to_string(split);
  return out;
}

Graph graph_from_json(const json& j, Split& split) {
  const auto& feats = j.at("features");
  if (!feats.is_array() || feats.empty()) throw ParseError("features must be a non-empty array");
  const std::size_t n = feats.size();
  const std::size_t d = feats.at(0).size();
  nd::Matrix x(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = feats.at(r);
    if (row.size() != d) throw ParseError("ragged feature rows");
    for (std::size_t c = 0; c < d; ++c) x(r, c) = row.at(c).get<double>();
  }
  std::vector<Edge> edges;
  std::vector<double> weights;
  for (const auto& e : j.at("edges")) {
    if (e.size() != 3) throw ParseError("edge entries must be [i, j, w]");
    edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    weights.push_back(e.at(2).get<double>());
  }
  std::optional<std::vector<Edge>> gt;
  if (j.contains("gt_edges") && !j.at("gt_edges").is_null()) {
    gt.emplace();
    for (const auto& e : j.at("gt_edges")) {
      if (e.size() != 2) throw ParseError("gt_edges entries must be [i, j]");
      gt->push_back(Edge::make(e.at(0).get<int>(), e.at(1).get<int>()));
    }
  }
  split = j.contains("split") ? split_from_string(j.at("split").get<std::string>()) : Split::kTrain;
  return Graph::from_edges(std::move(x), edges, weights, j.at("label").get<int>(), std::move(gt));
}

}  // namespace

std::string dataset_to_json(const Dataset& ds) {
  json out;
  out["seed"] = ds.seed;
  out["provenance"] = ds.provenance;
  json graphs = json::array();
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    graphs.push_back(graph_to_json(ds.graphs[i], ds.splits.at(i)));
  }
  out["graphs"] = std::move(graphs);
  return out.dump();
}

Dataset dataset_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset: invalid JSON: ") + e.what());
  }
  Dataset ds;
  try {
    ds.seed = doc.value("seed", uint64_t{0});
    ds.provenance = doc.value("provenance", std::string{});
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset header: ") + e.what());
  }
  if (!doc.contains("graphs") || !doc.at("graphs").is_array()) {
    throw ParseError("dataset: missing \"graphs\" array");
  }
  const auto& graphs = doc.at("graphs");
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    Split split = Split::kTrain;
    try {
      ds.graphs.push_back(graph_from_json(graphs.at(i), split));
    } catch (const json::exception& e) {
      throw ParseError("graph " + std::to_string(i) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("graph " + std::to_string(i) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("graph " + std::to_string(i) + ": " + e.what());
    }
    ds.splits.push_back(split);
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dataset_to_json(ds) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return dataset_from_json(ss.str());
}

}  // namespace storex

#include "storex/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "storex/errors.hpp"

namespace storex {

namespace {

double sample_fidelity(const GcnModel& model, const Graph& g, std::span<const Edge> expl_edges,
                       double drop_prob, bool drop_explanation, const FidelityConfig& cfg,
                       Rng& rng) {
  if (cfg.mc_samples < 1) throw ParameterError("fidelity: mc_samples must be >= 1");
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) {
    throw ParameterError("fidelity: deletion probability must lie in [0, 1]");
  }
  std::vector<char> in_expl(g.num_edges(), 0);
  for (Edge e : expl_edges) {
    const int idx = g.edge_index(e);
    if (idx < 0) throw ContractError("fidelity: explanation edge not in graph");
    in_expl[static_cast<std::size_t>(idx)] = 1;
  }
  const int y = predict(model, g);
  const std::vector<double> base = g.edge_weights();
  std::size_t agree = 0;
  std::vector<double> w(base.size());
  for (std::size_t s = 0; s < cfg.mc_samples; ++s) {
    for (std::size_t k = 0; k < base.size(); ++k) {
      const bool target = static_cast<bool>(in_expl[k]) == drop_explanation;
      w[k] = target && rng.uniform() < drop_prob ? 0.0 : base[k];
    }
    if (predict(model, g.reweighted(w)) == y) ++agree;
  }
  return 1.0 - static_cast<double>(agree) / static_cast<double>(cfg.mc_samples);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("not a number: '" + s + "'");
  }
  return v;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// Linear ramp dark blue -> teal -> yellow.
std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double stops[3][3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
  const double x = t * 2.0;
  const int i = std::min(1, static_cast<int>(x));
  const double f = x - i;
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  }
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ContractError("auc_roc: " + std::to_string(scores.size()) + " scores but " +
                        std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  uint64_t n_pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ContractError("auc_roc: labels must be 0 or 1");
    n_pos += static_cast<uint64_t>(l);
  }
  const uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ContractError("auc_roc: both classes must be present");

  // Twice the positive rank sum; a tie group over 1-based positions [lo, hi]
  // has mid-rank (lo + hi) / 2.
  uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    uint64_t pos_in_group = 0;
    for (std::size_t k = i; k <= j; ++k) pos_in_group += static_cast<uint64_t>(labels[order[k]]);
    twice_rank_sum += pos_in_group * static_cast<uint64_t>((i + 1) + (j + 1));
    i = j + 1;
  }
  const uint64_t numerator = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(numerator) / static_cast<double>(2 * n_pos * n_neg);
}

std::string to_string(AucMode m) { return m == AucMode::kPooled ? "pooled" : "per_graph"; }

AucMode auc_mode_from_string(const std::string& s) {
  if (s == "pooled") return AucMode::kPooled;
  if (s == "per_graph") return AucMode::kPerGraphMean;
  throw ParameterError("unknown AUC mode '" + s + "' (valid: pooled, per_graph)");
}

double explanation_auc(std::span<const EdgeMask> masks, std::span<const Graph> graphs,
                       AucMode mode) {
  if (masks.size() != graphs.size()) {
    throw ContractError("explanation_auc: " + std::to_string(masks.size()) + " masks for " +
                        std::to_string(graphs.size()) + " graphs");
  }
  std::string missing;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (!graphs[i].has_gt()) missing += (missing.empty() ? "" : ",") + std::to_string(i);
  }
  if (!missing.empty()) throw ContractError("explanation_auc: no ground truth for graphs " + missing);

  std::vector<double> scores;
  std::vector<int> labels;
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    validate_mask(masks[i], graphs[i]);
    const std::vector<int> gt = graphs[i].gt_indicator();
    if (mode == AucMode::kPooled) {
      scores.insert(scores.end(), masks[i].scores.begin(), masks[i].scores.end());
      labels.insert(labels.end(), gt.begin(), gt.end());
    } else {
      const auto pos = std::count(gt.begin(), gt.end(), 1);
      if (pos == 0 || pos == static_cast<long>(gt.size())) continue;
      sum += auc_roc(masks[i].scores, gt);
      ++counted;
    }
  }
  if (mode == AucMode::kPooled) return auc_roc(scores, labels);
  if (counted == 0) throw ContractError("explanation_auc: no graph has both edge classes");
  return sum / static_cast<double>(counted);
}

double fid_plus(const GcnModel& model, const Graph& g, std::span<const Edge> expl_edges,
                const FidelityConfig& cfg, Rng& rng) {
  return sample_fidelity(model, g, expl_edges, cfg.alpha1, true, cfg, rng);
}

double fid_minus(const GcnModel& model, const Graph& g, std::span<const Edge> expl_edges,
                 const FidelityConfig& cfg, Rng& rng) {
  return sample_fidelity(model, g, expl_edges, cfg.alpha2, false, cfg, rng);
}

double HeatmapGrid::at(double w_exp, double w_non) const {
  auto find = [](const std::vector<double>& axis, double v) {
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (std::abs(axis[i] - v) < 1e-9) return i;
    }
    throw ContractError("heatmap has no axis value " + std::to_string(v));
  };
  return accuracy(find(non_axis, w_non), find(exp_axis, w_exp));
}

HeatmapGrid weight_sweep_heatmap(const GcnModel& model, const Dataset& ds, double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 0.5)) {
    throw ParameterError("weight_sweep_heatmap: grid_step must lie in (0, 0.5]");
  }
  const std::vector<Graph> test = ds.subset(Split::kTest);
  if (test.empty()) throw ContractError("weight_sweep_heatmap: empty test split");
  std::vector<std::vector<int>> gt;
  for (const Graph& g : test) {
    if (!g.has_gt()) throw ContractError("weight_sweep_heatmap: graph without ground truth");
    gt.push_back(g.gt_indicator());
  }
  const auto n = static_cast<std::size_t>(std::llround(1.0 / grid_step));
  HeatmapGrid grid;
  for (std::size_t i = 1; i <= n; ++i) {
    const double v = static_cast<double>(i) / static_cast<double>(n);
    grid.exp_axis.push_back(v);
    grid.non_axis.push_back(v);
  }
  grid.accuracy = nd::Matrix(n, n);
  std::vector<Graph> weighted(test.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t k = 0; k < test.size(); ++k) {
        std::vector<double> w(gt[k].size());
        for (std::size_t e = 0; e < w.size(); ++e) {
          w[e] = gt[k][e] ? grid.exp_axis[c] : grid.non_axis[r];
        }
        weighted[k] = test[k].reweighted(w);
      }
      grid.accuracy(r, c) = evaluate_accuracy(model, weighted);
    }
  }
  return grid;
}

WeightHistogram weight_histogram(std::span<const double> samples_expl,
                                 std::span<const double> samples_non, std::size_t bins,
                                 double mu1, double mu2, double sigma) {
  if (bins < 2) throw ParameterError("weight_histogram: need at least 2 bins");
  if (samples_expl.empty() && samples_non.empty()) {
    throw ContractError("weight_histogram: no samples");
  }
  WeightHistogram h;
  h.count_expl.assign(bins, 0);
  h.count_non.assign(bins, 0);
  const double width = 1.0 / static_cast<double>(bins);
  auto bin_of = [&](double x) {
    const auto b = static_cast<std::size_t>(std::clamp(x, 0.0, 1.0) / width);
    return std::min(b, bins - 1);
  };
  for (double x : samples_expl) ++h.count_expl[bin_of(x)];
  for (double x : samples_non) ++h.count_non[bin_of(x)];
  auto density = [&](double x, double mu) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  };
  for (std::size_t b = 0; b < bins; ++b) {
    const double c = (static_cast<double>(b) + 0.5) * width;
    h.centers.push_back(c);
    h.density1.push_back(sigma > 0.0 ? density(c, mu1) : 0.0);
    h.density2.push_back(sigma > 0.0 ? density(c, mu2) : 0.0);
  }
  return h;
}

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("csv has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty csv");
  t.header = split_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = split_line(line);
    if (row.size() != t.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " fields, got " +
                       std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_heatmap_csv(const std::filesystem::path& path, const HeatmapGrid& grid) {
  CsvTable t;
  t.header.push_back("w_non\\w_exp");
  for (double v : grid.exp_axis) t.header.push_back(format_double(v));
  for (std::size_t r = 0; r < grid.non_axis.size(); ++r) {
    std::vector<std::string> row{format_double(grid.non_axis[r])};
    for (std::size_t c = 0; c < grid.exp_axis.size(); ++c) {
      row.push_back(format_double(grid.accuracy(r, c)));
    }
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

HeatmapGrid read_heatmap_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  HeatmapGrid grid;
  for (std::size_t c = 1; c < t.header.size(); ++c) grid.exp_axis.push_back(parse_double(t.header[c]));
  grid.accuracy = nd::Matrix(t.rows.size(), grid.exp_axis.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    grid.non_axis.push_back(parse_double(t.rows[r][0]));
    for (std::size_t c = 0; c < grid.exp_axis.size(); ++c) {
      grid.accuracy(r, c) = parse_double(t.rows[r][c + 1]);
    }
  }
  return grid;
}

void write_heatmap_svg(const std::filesystem::path& path, const HeatmapGrid& grid,
                       const std::string& title) {
  const int cell = 44;
  const int left = 70;
  const int top = 40;
  const int nc = static_cast<int>(grid.exp_axis.size());
  const int nr = static_cast<int>(grid.non_axis.size());
  const int width = left + nc * cell + 20;
  const int height = top + nr * cell + 60;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << escape_xml(title) << "</text>\n";
  // Highest non-explanation weight on top.
  for (int r = 0; r < nr; ++r) {
    const int y = top + (nr - 1 - r) * cell;
    for (int c = 0; c < nc; ++c) {
      const int x = left + c * cell;
      const double a = grid.accuracy(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      char label[16];
      std::snprintf(label, sizeof label, "%.2f", a);
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << ramp_color(a) << "\"/>\n";
      out << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"middle\" fill=\"" << (a > 0.6 ? "black" : "white") << "\">" << label
          << "</text>\n";
    }
    char tick[16];
    std::snprintf(tick, sizeof tick, "%.1f", grid.non_axis[static_cast<std::size_t>(r)]);
    out << "<text x=\"" << left - 8 << "\" y=\"" << y + cell / 2 + 4
        << "\" text-anchor=\"end\">" << tick << "</text>\n";
  }
  for (int c = 0; c < nc; ++c) {
    char tick[16];
    std::snprintf(tick, sizeof tick, "%.1f", grid.exp_axis[static_cast<std::size_t>(c)]);
    out << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top + nr * cell + 16
        << "\" text-anchor=\"middle\">" << tick << "</text>\n";
  }
  out << "<text x=\"" << left + nc * cell / 2 << "\" y=\"" << top + nr * cell + 40
      << "\" text-anchor=\"middle\">explanation edge weight</text>\n";
  out << "<text x=\"14\" y=\"" << top + nr * cell / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << top + nr * cell / 2
      << ")\">non-explanation edge weight</text>\n";
  out << "</svg>\n";
}

void write_histogram_csv(const std::filesystem::path& path, const WeightHistogram& h) {
  CsvTable t;
  t.header = {"bin_center", "count_expl", "count_non", "density1", "density2"};
  for (std::size_t b = 0; b < h.centers.size(); ++b) {
    t.rows.push_back({format_double(h.centers[b]), std::to_string(h.count_expl[b]),
                      std::to_string(h.count_non[b]), format_double(h.density1[b]),
                      format_double(h.density2[b])});
  }
  write_csv(path, t);
}

}  // namespace storex

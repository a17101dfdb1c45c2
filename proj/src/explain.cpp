#include "storex/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "storex/adam.hpp"
#include "storex/checkpoint.hpp"
#include "storex/errors.hpp"

namespace storex {

namespace {

constexpr double kLogEps = 1e-12;

std::vector<std::pair<int, int>> edge_pairs(std::span<const Edge> edges) {
  std::vector<std::pair<int, int>> out;
  out.reserve(edges.size());
  for (Edge e : edges) out.emplace_back(e.u, e.v);
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

nd::Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  nd::Matrix m(fan_in, fan_out);
  for (double& v : m.data()) v = rng.uniform(-a, a);
  return m;
}

template <class Param>
nd::Var pg_logits_impl(nd::Tape& tape, const EdgeInputs& in, Param&& param) {
  using namespace nd;
  auto orient = [&](const Matrix& x) {
    Var h = relu(add(matmul(tape.borrow(x), param(0)), param(1)));
    return add(matmul(h, param(2)), param(3));
  };
  return scalar_mul(add(orient(in.forward), orient(in.backward)), 0.5);
}

}  // namespace

void validate_mask(const EdgeMask& mask, const Graph& g) {
  if (mask.edges != g.edges()) throw ContractError("mask edges do not match the graph's edges");
  if (mask.scores.size() != mask.edges.size()) {
    throw ContractError("mask has " + std::to_string(mask.scores.size()) + " scores for " +
                        std::to_string(mask.edges.size()) + " edges");
  }
  for (double s : mask.scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ContractError("mask score out of [0,1]: " + std::to_string(s));
  }
}

std::vector<Edge> topk_edges(const EdgeMask& mask, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ParameterError("topk_edges: fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  if (mask.edges.empty()) throw ContractError("topk_edges: empty mask");
  const std::size_t n = mask.edges.size();
  const auto k = std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (mask.scores[a] != mask.scores[b]) return mask.scores[a] > mask.scores[b];
    return mask.edges[a] < mask.edges[b];
  });
  std::vector<Edge> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(mask.edges[order[i]]);
  return out;
}

std::string to_string(ExplainerKind k) {
  return k == ExplainerKind::kPgExplainer ? "pgexplainer" : "gnnexplainer";
}

ExplainerKind explainer_from_string(const std::string& s) {
  if (s == "pgexplainer") return ExplainerKind::kPgExplainer;
  if (s == "gnnexplainer") return ExplainerKind::kGnnExplainer;
  throw ParameterError("unknown explainer '" + s + "' (valid: pgexplainer, gnnexplainer)");
}

nd::Var explanation_loss(nd::Tape& tape, const GcnModel& model, const Graph& g, nd::Var mask,
                         int target, double size_coef, double entropy_coef) {
  using namespace nd;
  const std::size_t e = g.num_edges();
  if (mask.rows() != e || mask.cols() != 1) {
    throw ContractError("explanation_loss: mask shape " + mask.value().shape_string() + " for " +
                        std::to_string(e) + " edges");
  }
  if (target < 0 || static_cast<std::size_t>(target) >= model.classes) {
    throw ContractError("explanation_loss: target class out of range");
  }
  const auto pairs = edge_pairs(g.edges());
  Var weights = scatter_symmetric(mask, pairs, g.num_nodes());
  Var adj = mul_elementwise(tape.borrow(g.adjacency()), weights);
  GcnVars out = gcn_forward_weighted(tape, model, adj, tape.borrow(g.features()));
  Matrix pick(1, model.classes);
  pick(0, static_cast<std::size_t>(target)) = -1.0;
  Var loss = sum_all(mul_elementwise(out.log_probs, tape.constant(std::move(pick))));
  if (size_coef != 0.0) loss = add(loss, scalar_mul(sum_all(mask), size_coef));
  if (entropy_coef != 0.0) {
    Var one_minus = add_scalar(scalar_mul(mask, -1.0), 1.0);
    Var ent = add(mul_elementwise(mask, log(add_scalar(mask, kLogEps))),
                  mul_elementwise(one_minus, log(add_scalar(one_minus, kLogEps))));
    loss = add(loss, scalar_mul(sum_all(ent), -entropy_coef / static_cast<double>(e)));
  }
  return loss;
}

EdgeMask gnnexplainer(const GcnModel& model, const Graph& g, const MaskOptConfig& cfg, Rng& rng,
                      std::vector<double>* loss_trace) {
  if (g.num_edges() == 0) throw ContractError("gnnexplainer: graph has no edges");
  if (!(cfg.size_coef >= 0.0)) throw ParameterError("gnnexplainer: size_coef must be >= 0");
  if (cfg.epochs < 1) throw ParameterError("gnnexplainer: epochs must be >= 1");
  const int target = predict(model, g);

  nd::Matrix theta0(g.num_edges(), 1);
  for (double& v : theta0.data()) v = rng.normal(0.0, cfg.init_scale);
  nd::Tensor theta(std::move(theta0), true);
  nd::Tensor* params[] = {&theta};
  nd::AdamState adam(nd::AdamConfig{.learning_rate = cfg.learning_rate});
  nd::Tape tape;
  if (loss_trace) loss_trace->clear();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    nd::Var mask = nd::sigmoid(tape.leaf(theta));
    nd::Var loss = explanation_loss(tape, model, g, mask, target, cfg.size_coef, cfg.entropy_coef);
    if (loss_trace) loss_trace->push_back(loss.item());
    nd::backward(loss);
    nd::adam_step(params, adam);
    theta.zero_grad();
  }

  EdgeMask out{g.edges(), {}};
  out.scores.reserve(g.num_edges());
  for (double v : theta.value.data()) out.scores.push_back(sigmoid(v));
  return out;
}

double logistic_noise(Rng& rng) {
  const double u = rng.uniform_open();
  return std::log(u) - std::log1p(-u);
}

double gumbel_edge_sample(double logit, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) {
    throw ParameterError("gumbel_edge_sample: temperature must be positive, got " +
                         std::to_string(temperature));
  }
  return sigmoid((logit + logistic_noise(rng)) / temperature);
}

nd::Var concrete_relaxation(nd::Var logits, std::span<const double> noise, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("concrete_relaxation: temperature must be positive");
  if (noise.size() != logits.value().size()) {
    throw ContractError("concrete_relaxation: noise length does not match logits");
  }
  nd::Matrix n(logits.rows(), logits.cols(), std::vector<double>(noise.begin(), noise.end()));
  nd::Var shifted = nd::add(logits, logits.tape()->constant(std::move(n)));
  return nd::sigmoid(nd::scalar_mul(shifted, 1.0 / temperature));
}

double pg_temperature(const PgConfig& cfg, std::size_t epoch) {
  if (cfg.epochs <= 1) return cfg.temperature_start;
  const double t = static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
  return cfg.temperature_start * std::pow(cfg.temperature_end / cfg.temperature_start, t);
}

PgNet PgNet::init(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  PgNet net;
  net.input_dim = input_dim;
  net.hidden = hidden;
  net.w1 = nd::Tensor(glorot(input_dim, hidden, rng), true);
  net.b1 = nd::Tensor(nd::Matrix(1, hidden), true);
  net.w2 = nd::Tensor(glorot(hidden, 1, rng), true);
  net.b2 = nd::Tensor(nd::Matrix(1, 1), true);
  return net;
}

std::vector<nd::Tensor*> PgNet::parameters() { return {&w1, &b1, &w2, &b2}; }
std::vector<const nd::Tensor*> PgNet::parameters() const { return {&w1, &b1, &w2, &b2}; }
std::vector<std::string> PgNet::parameter_names() const { return {"w1", "b1", "w2", "b2"}; }

void PgNet::zero_grad() {
  for (nd::Tensor* p : parameters()) p->zero_grad();
}

bool PgNet::operator==(const PgNet& o) const {
  return input_dim == o.input_dim && hidden == o.hidden && w1.value == o.w1.value &&
         b1.value == o.b1.value && w2.value == o.w2.value && b2.value == o.b2.value;
}

EdgeInputs edge_inputs(const nd::Matrix& h, std::span<const Edge> edges) {
  const std::size_t d = h.cols();
  EdgeInputs in{nd::Matrix(edges.size(), 2 * d), nd::Matrix(edges.size(), 2 * d)};
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const double* hu = h.row(static_cast<std::size_t>(edges[k].u));
    const double* hv = h.row(static_cast<std::size_t>(edges[k].v));
    std::copy_n(hu, d, in.forward.row(k));
    std::copy_n(hv, d, in.forward.row(k) + d);
    std::copy_n(hv, d, in.backward.row(k));
    std::copy_n(hu, d, in.backward.row(k) + d);
  }
  return in;
}

nd::Var pg_edge_logits(nd::Tape& tape, const PgNet& net, const EdgeInputs& in) {
  auto params = net.parameters();
  return pg_logits_impl(tape, in, [&](int i) { return tape.borrow(params[i]->value); });
}

nd::Var pg_edge_logits_trainable(nd::Tape& tape, PgNet& net, const EdgeInputs& in) {
  auto params = net.parameters();
  return pg_logits_impl(tape, in, [&](int i) { return tape.leaf(*params[i]); });
}

PgNet train_pgexplainer(const GcnModel& model, std::span<const Graph> graphs, const PgConfig& cfg,
                        Rng& rng) {
  if (graphs.empty()) throw ContractError("train_pgexplainer: no graphs");
  if (cfg.epochs < 1) throw ParameterError("train_pgexplainer: epochs must be >= 1");
  if (!(cfg.temperature_start > 0.0 && cfg.temperature_end > 0.0)) {
    throw ParameterError("train_pgexplainer: temperatures must be positive");
  }

  struct Item {
    const Graph* graph;
    EdgeInputs inputs;
    int target;
  };
  std::vector<Item> items;
  items.reserve(graphs.size());
  for (const Graph& g : graphs) {
    if (g.num_edges() == 0) continue;
    GcnOutput out = gcn_forward(model, g);
    items.push_back({&g, edge_inputs(out.embeddings, g.edges()), argmax_class(out.log_probs)});
  }
  if (items.empty()) throw ContractError("train_pgexplainer: every graph is edgeless");

  PgNet net = PgNet::init(2 * model.hidden, cfg.hidden, rng);
  auto params = net.parameters();
  nd::AdamState adam(nd::AdamConfig{.learning_rate = cfg.learning_rate,
                                    .weight_decay = cfg.weight_decay});
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> noise;
  nd::Tape tape;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double temperature = pg_temperature(cfg, epoch);
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.uniform_index(k)]);
    for (std::size_t idx : order) {
      const Item& it = items[idx];
      noise.resize(it.graph->num_edges());
      for (double& z : noise) z = logistic_noise(rng);
      nd::Var logits = pg_edge_logits_trainable(tape, net, it.inputs);
      nd::Var mask = concrete_relaxation(logits, noise, temperature);
      nd::backward(explanation_loss(tape, model, *it.graph, mask, it.target, cfg.size_coef,
                                    cfg.entropy_coef));
      nd::adam_step(params, adam);
      net.zero_grad();
    }
  }
  return net;
}

PgNet train_pgexplainer(const GcnModel& model, const Dataset& ds, const PgConfig& cfg, Rng& rng) {
  const std::vector<Graph> train = ds.subset(Split::kTrain);
  return train_pgexplainer(model, train, cfg, rng);
}

EdgeMask pgexplainer_mask(const PgNet& net, const GcnModel& model, const Graph& g) {
  if (net.input_dim != 2 * model.hidden) {
    throw ContractError("pgexplainer_mask: scorer expects " + std::to_string(net.input_dim) +
                        " inputs, model embeddings give " + std::to_string(2 * model.hidden));
  }
  EdgeMask out{g.edges(), {}};
  if (g.num_edges() == 0) return out;
  const GcnOutput fwd = gcn_forward(model, g);
  nd::Tape tape;
  const nd::Var logits = pg_edge_logits(tape, net, edge_inputs(fwd.embeddings, g.edges()));
  out.scores.reserve(g.num_edges());
  for (double v : logits.value().data()) out.scores.push_back(sigmoid(v));
  return out;
}

void write_masks_csv(const std::filesystem::path& path, std::span<const EdgeMask> masks,
                     std::span<const std::size_t> graph_indices) {
  if (masks.size() != graph_indices.size()) {
    throw ContractError("write_masks_csv: masks and graph indices differ in length");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "graph_index,i,j,score\n";
  for (std::size_t m = 0; m < masks.size(); ++m) {
    for (std::size_t k = 0; k < masks[m].size(); ++k) {
      out << graph_indices[m] << ',' << masks[m].edges[k].u << ',' << masks[m].edges[k].v << ','
          << masks[m].scores[k] << '\n';
    }
  }
}

std::string pgnet_to_json(const PgNet& net) {
  Checkpoint cp;
  cp.kind = "pgnet";
  cp.meta = {{"input_dim", static_cast<double>(net.input_dim)},
             {"hidden", static_cast<double>(net.hidden)}};
  auto names = net.parameter_names();
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) cp.tensors.push_back({names[i], params[i]->value});
  return checkpoint_to_json(cp);
}

PgNet pgnet_from_json(const std::string& text) {
  const Checkpoint cp = checkpoint_from_json(text);
  if (cp.kind != "pgnet") throw ParseError("checkpoint kind '" + cp.kind + "' is not pgnet");
  PgNet net;
  net.input_dim = static_cast<std::size_t>(cp.meta_value("input_dim"));
  net.hidden = static_cast<std::size_t>(cp.meta_value("hidden"));
  const std::pair<std::size_t, std::size_t> shapes[] = {
      {net.input_dim, net.hidden}, {1, net.hidden}, {net.hidden, 1}, {1, 1}};
  auto names = net.parameter_names();
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const nd::Matrix& v = cp.tensor(names[i]);
    if (v.rows() != shapes[i].first || v.cols() != shapes[i].second) {
      throw ParseError("checkpoint tensor '" + names[i] + "' has shape " + v.shape_string());
    }
    *params[i] = nd::Tensor(v, true);
  }
  return net;
}

void save_pgnet(const PgNet& net, const std::filesystem::path& path) {
  write_text_file(path, pgnet_to_json(net));
}

PgNet load_pgnet(const std::filesystem::path& path) { return pgnet_from_json(read_text_file(path)); }

}  // namespace storex

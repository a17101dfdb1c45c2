#include "storex/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "storex/adam.hpp"
#include "storex/checkpoint.hpp"
#include "storex/errors.hpp"

namespace storex {

namespace {

nd::Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  nd::Matrix m(fan_in, fan_out);
  for (double& v : m.data()) v = rng.uniform(-a, a);
  return m;
}

template <class Param>
GcnVars forward_impl(const GcnModel& model, nd::Var adj, nd::Var x, Param&& param) {
  using namespace nd;
  if (x.cols() != model.input_dim) {
    throw ContractError("gcn_forward: feature dim " + std::to_string(x.cols()) +
                        " but model expects " + std::to_string(model.input_dim));
  }
  // (A X) W is cheaper than A (X W) while d <= h.
  Var h1 = relu(add(matmul(matmul(adj, x), param(0)), param(1)));
  Var h2 = relu(add(matmul(adj, matmul(h1, param(2))), param(3)));
  Var h3 = relu(add(matmul(adj, matmul(h2, param(4))), param(5)));
  Var pooled = model.readout == Readout::kMean  ? mean_rows(h3)
               : model.readout == Readout::kMax ? max_rows(h3)
                                                : concat_cols(mean_rows(h3), max_rows(h3));
  Var logits = add(matmul(pooled, param(6)), param(7));
  return {log_softmax_rows(logits), h3};
}

struct Prepared {
  nd::Matrix adj_hat;
  const nd::Matrix* features;
  int label;
};

std::vector<Prepared> prepare(std::span<const Graph> graphs) {
  std::vector<Prepared> out;
  out.reserve(graphs.size());
  for (const Graph& g : graphs) {
    out.push_back({normalize_adjacency(g.adjacency()), &g.features(), g.label()});
  }
  return out;
}

struct EvalStats {
  double accuracy;
  double loss;
};

EvalStats evaluate_prepared(const GcnModel& model, const std::vector<Prepared>& set) {
  nd::Tape tape;
  std::size_t correct = 0;
  double loss = 0.0;
  for (const Prepared& p : set) {
    GcnVars out = gcn_forward(tape, model, tape.borrow(p.adj_hat), tape.borrow(*p.features));
    const nd::Matrix& lp = out.log_probs.value();
    if (argmax_class(lp) == p.label) ++correct;
    loss -= lp(0, static_cast<std::size_t>(p.label));
    tape.clear();
  }
  const double n = static_cast<double>(set.size());
  return {static_cast<double>(correct) / n, loss / n};
}

void check_labels(std::span<const Graph> graphs, std::size_t classes) {
  for (const Graph& g : graphs) {
    if (g.label() < 0 || static_cast<std::size_t>(g.label()) >= classes) {
      throw ContractError("train_gnn: label " + std::to_string(g.label()) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
  }
}

}  // namespace

GcnModel GcnModel::init(std::size_t d, std::size_t h, std::size_t c, Rng& rng, Readout readout) {
  GcnModel m;
  m.input_dim = d;
  m.hidden = h;
  m.classes = c;
  m.readout = readout;
  m.w1 = nd::Tensor(glorot(d, h, rng), true);
  m.b1 = nd::Tensor(nd::Matrix(1, h), true);
  m.w2 = nd::Tensor(glorot(h, h, rng), true);
  m.b2 = nd::Tensor(nd::Matrix(1, h), true);
  m.w3 = nd::Tensor(glorot(h, h, rng), true);
  m.b3 = nd::Tensor(nd::Matrix(1, h), true);
  m.w_out = nd::Tensor(glorot(m.readout_width(), c, rng), true);
  m.b_out = nd::Tensor(nd::Matrix(1, c), true);
  return m;
}

GcnModel GcnModel::zeros(std::size_t d, std::size_t h, std::size_t c, Readout readout) {
  GcnModel m;
  m.input_dim = d;
  m.hidden = h;
  m.classes = c;
  m.readout = readout;
  m.w1 = nd::Tensor(nd::Matrix(d, h), true);
  m.b1 = nd::Tensor(nd::Matrix(1, h), true);
  m.w2 = nd::Tensor(nd::Matrix(h, h), true);
  m.b2 = nd::Tensor(nd::Matrix(1, h), true);
  m.w3 = nd::Tensor(nd::Matrix(h, h), true);
  m.b3 = nd::Tensor(nd::Matrix(1, h), true);
  m.w_out = nd::Tensor(nd::Matrix(m.readout_width(), c), true);
  m.b_out = nd::Tensor(nd::Matrix(1, c), true);
  return m;
}

std::vector<nd::Tensor*> GcnModel::parameters() {
  return {&w1, &b1, &w2, &b2, &w3, &b3, &w_out, &b_out};
}

std::vector<const nd::Tensor*> GcnModel::parameters() const {
  return {&w1, &b1, &w2, &b2, &w3, &b3, &w_out, &b_out};
}

std::vector<std::string> GcnModel::parameter_names() const {
  return {"w1", "b1", "w2", "b2", "w3", "b3", "w_out", "b_out"};
}

void GcnModel::zero_grad() {
  for (nd::Tensor* p : parameters()) p->zero_grad();
}

bool GcnModel::operator==(const GcnModel& o) const {
  if (input_dim != o.input_dim || hidden != o.hidden || classes != o.classes ||
      readout != o.readout) {
    return false;
  }
  auto a = parameters();
  auto b = o.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i]->value == b[i]->value)) return false;
  }
  return true;
}

std::string to_string(Readout r) {
  switch (r) {
    case Readout::kMean:
      return "mean";
    case Readout::kMax:
      return "max";
    case Readout::kMeanMax:
      return "mean_max";
  }
  return "?";
}

Readout readout_from_string(const std::string& s) {
  if (s == "mean") return Readout::kMean;
  if (s == "max") return Readout::kMax;
  if (s == "mean_max") return Readout::kMeanMax;
  throw ParameterError("unknown readout '" + s + "' (valid: mean, max, mean_max)");
}

void center_biases(GcnModel& model, std::span<const Graph> graphs) {
  if (graphs.empty()) throw ContractError("center_biases: no graphs");
  std::vector<nd::Matrix> adj;
  std::vector<nd::Matrix> h;
  adj.reserve(graphs.size());
  h.reserve(graphs.size());
  for (const Graph& g : graphs) {
    if (g.feature_dim() != model.input_dim) throw ContractError("center_biases: feature dim mismatch");
    adj.push_back(normalize_adjacency(g.adjacency()));
    h.push_back(g.features());
  }
  const std::pair<nd::Tensor*, nd::Tensor*> layers[] = {
      {&model.w1, &model.b1}, {&model.w2, &model.b2}, {&model.w3, &model.b3}};
  std::vector<double> column;
  for (auto [w, b] : layers) {
    std::vector<nd::Matrix> pre(graphs.size());
    for (std::size_t k = 0; k < graphs.size(); ++k) pre[k] = nd::matmul(adj[k], nd::matmul(h[k], w->value));
    for (std::size_t c = 0; c < model.hidden; ++c) {
      column.clear();
      for (const nd::Matrix& p : pre) {
        for (std::size_t r = 0; r < p.rows(); ++r) column.push_back(p(r, c));
      }
      if (column.empty()) continue;
      auto mid = column.begin() + static_cast<std::ptrdiff_t>(column.size() / 2);
      std::nth_element(column.begin(), mid, column.end());
      b->value(0, c) = -*mid;
    }
    for (std::size_t k = 0; k < graphs.size(); ++k) {
      nd::Matrix& p = pre[k];
      for (std::size_t r = 0; r < p.rows(); ++r) {
        for (std::size_t c = 0; c < p.cols(); ++c) p(r, c) = std::max(0.0, p(r, c) + b->value(0, c));
      }
      h[k] = std::move(p);
    }
  }
}

nd::Matrix normalize_adjacency(const nd::Matrix& a) {
  nd::Tape tape;
  tape.set_check_finite(false);
  return gcn_normalize(tape.borrow(a)).value();
}

GcnVars gcn_forward(nd::Tape& tape, const GcnModel& model, nd::Var adj, nd::Var x) {
  auto params = model.parameters();
  return forward_impl(model, adj, x, [&](int i) { return tape.borrow(params[i]->value); });
}

GcnVars gcn_forward_trainable(nd::Tape& tape, GcnModel& model, nd::Var adj, nd::Var x) {
  auto params = model.parameters();
  return forward_impl(model, adj, x, [&](int i) { return tape.leaf(*params[i]); });
}

GcnVars gcn_forward_weighted(nd::Tape& tape, const GcnModel& model, nd::Var adjacency,
                             nd::Var features) {
  return gcn_forward(tape, model, nd::gcn_normalize(adjacency), features);
}

GcnOutput gcn_forward(const GcnModel& model, const nd::Matrix& adjacency,
                      const nd::Matrix& features) {
  nd::Tape tape;
  nd::Var adj = nd::gcn_normalize(tape.borrow(adjacency));
  GcnVars out = gcn_forward(tape, model, adj, tape.borrow(features));
  return {out.log_probs.value(), out.embeddings.value()};
}

GcnOutput gcn_forward(const GcnModel& model, const Graph& g) {
  return gcn_forward(model, g.adjacency(), g.features());
}

int argmax_class(const nd::Matrix& lp) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < lp.cols(); ++c) {
    if (lp(0, c) > lp(0, best)) best = c;
  }
  return static_cast<int>(best);
}

int predict(const GcnModel& model, const Graph& g) {
  return argmax_class(gcn_forward(model, g).log_probs);
}

TrainResult train_gnn(std::span<const Graph> train, std::span<const Graph> val,
                      const TrainConfig& cfg, const std::optional<GcnModel>& warm_start) {
  if (train.empty()) throw ContractError("train_gnn: empty training set");
  if (cfg.epochs < 1) throw ParameterError("train_gnn: epochs must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ParameterError("train_gnn: learning rate must be > 0");
  if (cfg.batch_size < 1) throw ParameterError("train_gnn: batch_size must be >= 1");
  check_labels(train, cfg.classes);
  check_labels(val, cfg.classes);

  Rng rng(mix_seed(cfg.seed) ^ 0x6763'6e5f'7472'6169ULL);
  GcnModel model = warm_start ? *warm_start
                              : GcnModel::init(train.front().feature_dim(), cfg.hidden,
                                               cfg.classes, rng, cfg.readout);
  if (!warm_start && cfg.center_biases) center_biases(model, train);
  for (nd::Tensor* p : model.parameters()) p->requires_grad = true;
  model.zero_grad();

  const std::vector<Prepared> train_set = prepare(train);
  const std::vector<Prepared> val_set = val.empty() ? prepare(train) : prepare(val);

  nd::AdamState adam(nd::AdamConfig{.learning_rate = cfg.learning_rate});
  auto params = model.parameters();

  TrainResult result;
  result.model = model;
  const EvalStats init_stats = evaluate_prepared(model, val_set);
  result.best_val_accuracy = init_stats.accuracy;
  result.best_val_loss = init_stats.loss;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nd::Tape tape;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.uniform_index(k)]);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = -1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const Prepared& p = train_set[order[k]];
        GcnVars out = gcn_forward_trainable(tape, model, tape.borrow(p.adj_hat), tape.borrow(*p.features));
        nd::Matrix onehot(1, cfg.classes);
        onehot(0, static_cast<std::size_t>(p.label)) = scale;
        nd::backward(nd::sum_all(nd::mul_elementwise(out.log_probs, tape.constant(std::move(onehot)))));
      }
      nd::adam_step(params, adam);
      model.zero_grad();
    }

    const EvalStats stats = evaluate_prepared(model, val_set);
    result.epochs_run = epoch;
    const bool improved =
        stats.accuracy > result.best_val_accuracy ||
        (stats.accuracy == result.best_val_accuracy && stats.loss < result.best_val_loss);
    if (improved) {
      result.best_val_accuracy = stats.accuracy;
      result.best_val_loss = stats.loss;
      result.best_epoch = epoch;
      result.model = model;
    }
    result.best_val_loss_trace.push_back(result.best_val_loss);
    since_best = improved ? 0 : since_best + 1;
    if (since_best >= cfg.patience) break;
  }
  result.model.zero_grad();
  return result;
}

GcnModel train_gnn(const Dataset& ds, const TrainConfig& cfg) {
  const std::vector<Graph> train = ds.subset(Split::kTrain);
  const std::vector<Graph> val = ds.subset(Split::kVal);
  return train_gnn(train, val, cfg).model;
}

double mean_nll(const GcnModel& model, std::span<const Graph> graphs) {
  if (graphs.empty()) throw ContractError("mean_nll: empty graph set");
  return evaluate_prepared(model, prepare(graphs)).loss;
}

double evaluate_accuracy(const GcnModel& model, std::span<const Graph> graphs) {
  if (graphs.empty()) throw ContractError("evaluate_accuracy: empty graph set");
  nd::Tape tape;
  std::size_t correct = 0;
  for (const Graph& g : graphs) {
    if (g.label() == kNoLabel) throw ContractError("evaluate_accuracy: unlabeled graph");
    GcnVars out = gcn_forward(tape, model, nd::gcn_normalize(tape.borrow(g.adjacency())),
                              tape.borrow(g.features()));
    if (argmax_class(out.log_probs.value()) == g.label()) ++correct;
    tape.clear();
  }
  return static_cast<double>(correct) / static_cast<double>(graphs.size());
}

std::string model_to_json(const GcnModel& model) {
  Checkpoint cp;
  cp.kind = "gcn";
  cp.meta = {{"input_dim", static_cast<double>(model.input_dim)},
             {"hidden", static_cast<double>(model.hidden)},
             {"classes", static_cast<double>(model.classes)},
             {"readout", static_cast<double>(model.readout)}};
  auto names = model.parameter_names();
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) cp.tensors.push_back({names[i], params[i]->value});
  return checkpoint_to_json(cp);
}

GcnModel model_from_json(const std::string& text) {
  const Checkpoint cp = checkpoint_from_json(text);
  if (cp.kind != "gcn") throw ParseError("checkpoint kind '" + cp.kind + "' is not gcn");
  GcnModel m = GcnModel::zeros(static_cast<std::size_t>(cp.meta_value("input_dim")),
                               static_cast<std::size_t>(cp.meta_value("hidden")),
                               static_cast<std::size_t>(cp.meta_value("classes")),
                               static_cast<Readout>(static_cast<int>(cp.meta_value("readout"))));
  auto names = m.parameter_names();
  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const nd::Matrix& v = cp.tensor(names[i]);
    if (!v.same_shape(params[i]->value)) {
      throw ParseError("checkpoint tensor '" + names[i] + "' has shape " + v.shape_string() +
                       ", expected " + params[i]->value.shape_string());
    }
    params[i]->value = v;
  }
  return m;
}

void save_model(const GcnModel& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model));
}

GcnModel load_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

}  // namespace storex

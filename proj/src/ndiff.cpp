#include "storex/ndiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "storex/errors.hpp"

namespace storex::nd {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw ContractError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                      b.shape_string());
}

void require_same_tape(Var a, Var b, const char* op) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw ContractError(std::string(op) + ": operands recorded on different tapes");
  }
}

// out(i,:) += a(i,k) * b(k,:), skipping structural zeros of a.
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.row(i);
    const double* ar = a.row(i);
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = ar[k];
      if (aik == 0.0) continue;
      const double* br = b.row(k);
      for (std::size_t j = 0; j < m; ++j) o[j] += aik * br[j];
    }
  }
}

// out += g * b^T
void gemm_bt_acc(const Matrix& g, const Matrix& b, Matrix& out) {
  const std::size_t n = g.rows(), m = g.cols(), k = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* gr = g.row(i);
    double* o = out.row(i);
    for (std::size_t r = 0; r < k; ++r) {
      const double* br = b.row(r);
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += gr[j] * br[j];
      o[r] += s;
    }
  }
}

// out += a^T * g
void gemm_at_acc(const Matrix& a, const Matrix& g, Matrix& out) {
  const std::size_t n = a.rows(), inner = a.cols(), m = g.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.row(i);
    const double* gr = g.row(i);
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = ar[k];
      if (aik == 0.0) continue;
      double* o = out.row(k);
      for (std::size_t j = 0; j < m; ++j) o[j] += aik * gr[j];
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ContractError("Matrix: data length " + std::to_string(data_.size()) + " != " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ContractError("Matrix::from_rows: ragged rows");
    std::copy(row.begin(), row.end(), m.row(i++));
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << "(" << rows_ << "x" << cols_ << ")";
  return os.str();
}

void matmul_into(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  out = Matrix(a.rows(), b.cols());
  gemm_acc(a, b, out);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out;
  matmul_into(a, b, out);
  return out;
}

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(Matrix v, bool rg) : value(std::move(v)), requires_grad(rg) {
  if (requires_grad) grad = Matrix(value.rows(), value.cols());
}

void Tensor::zero_grad() {
  if (!grad.same_shape(value)) grad = Matrix(value.rows(), value.cols());
  grad.fill(0.0);
}

// ---------------------------------------------------------------- Var

const Matrix& Var::value() const { return tape_->node(id_).value(); }

double Var::item() const {
  const Matrix& m = value();
  if (m.rows() != 1 || m.cols() != 1) {
    throw ContractError("Var::item: expected 1x1, got " + m.shape_string());
  }
  return m(0, 0);
}

// ---------------------------------------------------------------- Tape

Tape::Tape() {
#ifdef NDEBUG
  check_finite_ = false;
#else
  check_finite_ = true;
#endif
  nodes_.reserve(64);
}

void Tape::clear() { nodes_.clear(); }

Var Tape::push(Node node) {
  if (check_finite_) {
    for (double v : node.value().data()) {
      if (!std::isfinite(v)) throw ContractError("non-finite value recorded on tape");
    }
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape() != this) throw ContractError("Var used with a foreign tape");
  return nodes_[static_cast<std::size_t>(v.id())];
}

Var Tape::leaf(Tensor& t) {
  Node n;
  n.op = Op::kLeaf;
  n.borrowed = &t.value;
  n.target = &t;
  n.needs_grad = t.requires_grad;
  if (t.requires_grad && !t.grad.same_shape(t.value)) t.zero_grad();
  return push(std::move(n));
}

Var Tape::constant(Matrix m) {
  Node n;
  n.op = Op::kConstant;
  n.own = std::move(m);
  return push(std::move(n));
}

Var Tape::borrow(const Matrix& m) {
  Node n;
  n.op = Op::kConstant;
  n.borrowed = &m;
  return push(std::move(n));
}

Matrix& Tape::grad_of(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.grad.same_shape(n.value())) n.grad = Matrix(n.value().rows(), n.value().cols());
  return n.grad;
}

// ---------------------------------------------------------------- forward ops

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  Tape& t = *a.tape();
  Tape::Node n;
  n.op = Tape::Op::kMatMul;
  n.a = a.id();
  n.b = b.id();
  matmul_into(a.value(), b.value(), n.own);
  n.needs_grad = t.needs(a) || t.needs(b);
  return t.push(std::move(n));
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  Tape::Node n;
  n.a = a.id();
  n.b = b.id();
  n.needs_grad = t.needs(a) || t.needs(b);
  if (x.same_shape(y)) {
    n.op = Tape::Op::kAdd;
    n.own = x;
    auto o = n.own.data();
    auto yd = y.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += yd[i];
  } else if (y.rows() == 1 && y.cols() == x.cols()) {
    n.op = Tape::Op::kAddRowBroadcast;
    n.own = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double* o = n.own.row(r);
      for (std::size_t c = 0; c < x.cols(); ++c) o[c] += y(0, c);
    }
  } else {
    shape_error("add", x, y);
  }
  return t.push(std::move(n));
}

Var mul_elementwise(Var a, Var b) {
  require_same_tape(a, b, "mul_elementwise");
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (!x.same_shape(y)) shape_error("mul_elementwise", x, y);
  Tape::Node n;
  n.op = Tape::Op::kMul;
  n.a = a.id();
  n.b = b.id();
  n.needs_grad = t.needs(a) || t.needs(b);
  n.own = x;
  auto o = n.own.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= yd[i];
  return t.push(std::move(n));
}

Var relu(Var a) {
  Tape& t = *a.tape();
  Tape::Node n;
  n.op = Tape::Op::kRelu;
  n.a = a.id();
  n.needs_grad = t.needs(a);
  n.own = a.value();
  for (double& v : n.own.data()) v = v > 0.0 ? v : 0.0;
  return t.push(std::move(n));
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  Tape::Node n;
  n.op = Tape::Op::kSigmoid;
  n.a = a.id();
  n.needs_grad = t.needs(a);
  n.own = a.value();
  for (double& v : n.own.data()) v = stable_sigmoid(v);
  return t.push(std::move(n));
}

Var log_softmax_rows(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Tape::Node n;
  n.op = Tape::Op::kLogSoftmaxRows;
  n.a = a.id();
  n.needs_grad = t.needs(a);
  n.own = Matrix(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r);
    double mx = xr[0];
    for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, xr[c]);
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += std::exp(xr[c] - mx);
    const double lse = mx + std::log(s);
    double* o = n.own.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) o[c] = xr[c] - lse;
  }
  return t.push(std::move(n));
}

Var mean_rows(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  if (x.rows() == 0) throw ContractError("mean_rows: empty matrix");
  Tape::Node n;
  n.op = Tape::Op::kMeanRows;
  n.a = a.id();
  n.needs_grad = t.needs(a);
  n.own = Matrix(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) n.own(0, c) += xr[c];
  }
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (double& v : n.own.data()) v *= inv;
  return t.push(std::move(n));
}

Var max_rows(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  if (x.rows() == 0) throw ContractError("max_rows: empty matrix");
  Tape::Node n;
  n.op = Tape::Op::kMaxRows;
  n.a = a.id();
  n.needs_grad = t.needs(a);
  n.own = Matrix(1, x.cols());
  n.index.assign(x.cols(), 0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < x.rows(); ++r) {
      if (x(r, c) > x(best, c)) best = r;
    }
    n.own(0, c) = x(best, c);
    n.index[c] = static_cast<int>(best);
  }
  return t.push(std::move(n));
}

Var sum_all(Var a) {
  Tape& t = *a.tape();
  Tape::Node n;
  n.op = Tape::Op::kSumAll;
  n.a = a.id();
  n.needs_grad = t.needs(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  n.own = Matrix(1, 1, s);
  return t.push(std::move(n));
}

Var scalar_mul(Var a, double c) {
  Tape& t = *a.tape();
  Tape::Node n;
  n.op = Tape::Op::kScalarMul;
  n.a = a.id();
  n.scalar = c;
  n.needs_grad = t.needs(a);
  n.own = a.value();
  for (double& v : n.own.data()) v *= c;
  return t.push(std::move(n));
}

Var add_scalar(Var a, double c) {
  Tape& t = *a.tape();
  Tape::Node n;
  n.op = Tape::Op::kAddScalar;
  n.a = a.id();
  n.needs_grad = t.needs(a);
  n.own = a.value();
  for (double& v : n.own.data()) v += c;
  return t.push(std::move(n));
}

Var log(Var a) {
  Tape& t = *a.tape();
  Tape::Node n;
  n.op = Tape::Op::kLog;
  n.a = a.id();
  n.needs_grad = t.needs(a);
  n.own = a.value();
  for (double& v : n.own.data()) v = std::log(v);
  return t.push(std::move(n));
}

Var gcn_normalize(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  if (x.rows() != x.cols()) shape_error("gcn_normalize", x, x);
  const std::size_t n = x.rows();
  Tape::Node node;
  node.op = Tape::Op::kGcnNormalize;
  node.a = a.id();
  node.needs_grad = t.needs(a);
  // s_i = (1 + sum_j A_ij)^{-1/2}
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    const double* r = x.row(i);
    for (std::size_t j = 0; j < n; ++j) d += r[j];
    s[i] = 1.0 / std::sqrt(d);
  }
  node.own = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = x.row(i);
    double* o = node.own.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double b = r[j] + (i == j ? 1.0 : 0.0);
      if (b != 0.0) o[j] = s[i] * b * s[j];
    }
  }
  return t.push(std::move(node));
}

Var scatter_symmetric(Var values, std::span<const std::pair<int, int>> edges, std::size_t n) {
  Tape& t = *values.tape();
  const Matrix& v = values.value();
  if (v.rows() != edges.size() || v.cols() != 1) {
    throw ContractError("scatter_symmetric: values " + v.shape_string() + " for " +
                        std::to_string(edges.size()) + " edges");
  }
  Tape::Node node;
  node.op = Tape::Op::kScatterSymmetric;
  node.a = values.id();
  node.needs_grad = t.needs(values);
  node.pairs.assign(edges.begin(), edges.end());
  node.own = Matrix(n, n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n) {
      throw ContractError("scatter_symmetric: edge index out of range");
    }
    node.own(i, j) = v(e, 0);
    node.own(j, i) = v(e, 0);
  }
  return t.push(std::move(node));
}

Var gather_rows(Var a, std::span<const int> rows) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Tape::Node node;
  node.op = Tape::Op::kGatherRows;
  node.a = a.id();
  node.needs_grad = t.needs(a);
  node.index.assign(rows.begin(), rows.end());
  node.own = Matrix(rows.size(), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || static_cast<std::size_t>(rows[k]) >= x.rows()) {
      throw ContractError("gather_rows: row index out of range");
    }
    std::copy_n(x.row(static_cast<std::size_t>(rows[k])), x.cols(), node.own.row(k));
  }
  return t.push(std::move(node));
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b, "concat_cols");
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.rows() != y.rows()) shape_error("concat_cols", x, y);
  Tape::Node node;
  node.op = Tape::Op::kConcatCols;
  node.a = a.id();
  node.b = b.id();
  node.needs_grad = t.needs(a) || t.needs(b);
  node.own = Matrix(x.rows(), x.cols() + y.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy_n(x.row(r), x.cols(), node.own.row(r));
    std::copy_n(y.row(r), y.cols(), node.own.row(r) + x.cols());
  }
  return t.push(std::move(node));
}

// ---------------------------------------------------------------- backward

void Tape::propagate(int id) {
  // grad_of() only touches other nodes' grads, never nodes_ itself.
  Node& nd = nodes_[static_cast<std::size_t>(id)];
  const Matrix& g = nd.grad;
  const Matrix& out = nd.value();
  const bool ga = nd.a >= 0 && node(nd.a).needs_grad;
  const bool gb = nd.b >= 0 && node(nd.b).needs_grad;

  switch (nd.op) {
    case Op::kLeaf:
      if (nd.target && nd.target->requires_grad) {
        auto dst = nd.target->grad.data();
        auto src = g.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
      break;
    case Op::kConstant:
      break;
    case Op::kMatMul: {
      const Matrix& a = node(nd.a).value();
      const Matrix& b = node(nd.b).value();
      if (ga) gemm_bt_acc(g, b, grad_of(nd.a));
      if (gb) gemm_at_acc(a, g, grad_of(nd.b));
      break;
    }
    case Op::kAdd: {
      auto src = g.data();
      if (ga) {
        auto d = grad_of(nd.a).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
      }
      if (gb) {
        auto d = grad_of(nd.b).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
      }
      break;
    }
    case Op::kAddRowBroadcast: {
      if (ga) {
        auto d = grad_of(nd.a).data();
        auto src = g.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
      }
      if (gb) {
        Matrix& d = grad_of(nd.b);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const double* gr = g.row(r);
          for (std::size_t c = 0; c < g.cols(); ++c) d(0, c) += gr[c];
        }
      }
      break;
    }
    case Op::kMul: {
      auto src = g.data();
      if (ga) {
        auto other = node(nd.b).value().data();
        auto d = grad_of(nd.a).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i] * other[i];
      }
      if (gb) {
        auto other = node(nd.a).value().data();
        auto d = grad_of(nd.b).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i] * other[i];
      }
      break;
    }
    case Op::kRelu: {
      if (!ga) break;
      auto o = out.data();
      auto src = g.data();
      auto d = grad_of(nd.a).data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (o[i] > 0.0) d[i] += src[i];
      }
      break;
    }
    case Op::kSigmoid: {
      if (!ga) break;
      auto o = out.data();
      auto src = g.data();
      auto d = grad_of(nd.a).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i] * o[i] * (1.0 - o[i]);
      break;
    }
    case Op::kLogSoftmaxRows: {
      if (!ga) break;
      Matrix& d = grad_of(nd.a);
      for (std::size_t r = 0; r < out.rows(); ++r) {
        const double* gr = g.row(r);
        const double* orow = out.row(r);
        double gs = 0.0;
        for (std::size_t c = 0; c < out.cols(); ++c) gs += gr[c];
        double* dr = d.row(r);
        for (std::size_t c = 0; c < out.cols(); ++c) dr[c] += gr[c] - std::exp(orow[c]) * gs;
      }
      break;
    }
    case Op::kMeanRows: {
      if (!ga) break;
      Matrix& d = grad_of(nd.a);
      const double inv = 1.0 / static_cast<double>(d.rows());
      for (std::size_t r = 0; r < d.rows(); ++r) {
        double* dr = d.row(r);
        for (std::size_t c = 0; c < d.cols(); ++c) dr[c] += g(0, c) * inv;
      }
      break;
    }
    case Op::kMaxRows: {
      if (!ga) break;
      Matrix& d = grad_of(nd.a);
      for (std::size_t c = 0; c < d.cols(); ++c) d(static_cast<std::size_t>(nd.index[c]), c) += g(0, c);
      break;
    }
    case Op::kSumAll: {
      if (!ga) break;
      const double s = g(0, 0);
      for (double& v : grad_of(nd.a).data()) v += s;
      break;
    }
    case Op::kScalarMul: {
      if (!ga) break;
      auto src = g.data();
      auto d = grad_of(nd.a).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += nd.scalar * src[i];
      break;
    }
    case Op::kAddScalar: {
      if (!ga) break;
      auto src = g.data();
      auto d = grad_of(nd.a).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
      break;
    }
    case Op::kLog: {
      if (!ga) break;
      auto x = node(nd.a).value().data();
      auto src = g.data();
      auto d = grad_of(nd.a).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i] / x[i];
      break;
    }
    case Op::kGcnNormalize: {
      if (!ga) break;
      const Matrix& a = node(nd.a).value();
      const std::size_t n = a.rows();
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i) {
        double deg = 1.0;
        const double* r = a.row(i);
        for (std::size_t j = 0; j < n; ++j) deg += r[j];
        s[i] = 1.0 / std::sqrt(deg);
      }
      // out_ij = s_i B_ij s_j. dL/ds_i collects row-i and column-i terms;
      // ds_i/dA_ik = -s_i^3 / 2 for every k.
      std::vector<double> ds(n, 0.0);
      Matrix& d = grad_of(nd.a);
      for (std::size_t i = 0; i < n; ++i) {
        const double* gr = g.row(i);
        const double* ar = a.row(i);
        double* dr = d.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          const double b = ar[j] + (i == j ? 1.0 : 0.0);
          dr[j] += gr[j] * s[i] * s[j];
          if (b != 0.0 && gr[j] != 0.0) {
            ds[i] += gr[j] * b * s[j];
            ds[j] += gr[j] * b * s[i];
          }
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double coef = -0.5 * s[i] * s[i] * s[i] * ds[i];
        double* dr = d.row(i);
        for (std::size_t k = 0; k < n; ++k) dr[k] += coef;
      }
      break;
    }
    case Op::kScatterSymmetric: {
      if (!ga) break;
      Matrix& d = grad_of(nd.a);
      for (std::size_t e = 0; e < nd.pairs.size(); ++e) {
        const auto [i, j] = nd.pairs[e];
        d(e, 0) += g(i, j) + g(j, i);
      }
      break;
    }
    case Op::kGatherRows: {
      if (!ga) break;
      Matrix& d = grad_of(nd.a);
      for (std::size_t k = 0; k < nd.index.size(); ++k) {
        double* dr = d.row(static_cast<std::size_t>(nd.index[k]));
        const double* gr = g.row(k);
        for (std::size_t c = 0; c < d.cols(); ++c) dr[c] += gr[c];
      }
      break;
    }
    case Op::kConcatCols: {
      const std::size_t ca = node(nd.a).value().cols();
      if (ga) {
        Matrix& d = grad_of(nd.a);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < ca; ++c) d(r, c) += g(r, c);
        }
      }
      if (gb) {
        Matrix& d = grad_of(nd.b);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) += g(r, ca + c);
        }
      }
      break;
    }
  }
}

void backward(Var loss) {
  Tape& t = *loss.tape();
  const Matrix& v = loss.value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " + v.shape_string());
  }
  if (t.needs(loss)) {
    t.grad_of(loss.id())(0, 0) = 1.0;
    for (int id = loss.id(); id >= 0; --id) {
      const Tape::Node& n = t.node(id);
      if (!n.needs_grad || !n.grad.same_shape(n.value())) continue;
      t.propagate(id);
    }
  }
  t.clear();
}

// ---------------------------------------------------------------- finite differences

double finite_diff_check(const ScalarFn& f, const Matrix& point, double step) {
  Tensor x(point, true);
  {
    Tape tape;
    Var loss = f(tape, tape.leaf(x));
    backward(loss);
  }
  const Matrix analytic = x.grad;

  auto eval = [&](const Matrix& at) {
    Tensor p(at, false);
    Tape tape;
    return f(tape, tape.leaf(p)).item();
  };

  double worst = 0.0;
  Matrix probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + step;
    const double up = eval(probe);
    probe.data()[i] = orig - step;
    const double down = eval(probe);
    probe.data()[i] = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(analytic.data()[i] - numeric) / std::max(1.0, std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace storex::nd

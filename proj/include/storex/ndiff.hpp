#pragma once

// Dense row-major matrices with tape-based reverse-mode differentiation.
//
// A Tape records operations on Var handles. Model parameters live outside
// the tape as Tensor objects; registering one with Tape::leaf makes its
// gradient accumulate into Tensor::grad when backward() runs. All arithmetic
// is double precision.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace storex::nd {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  void fill(double v);
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_string() const;

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out = a * b (out is resized).
void matmul_into(const Matrix& a, const Matrix& b, Matrix& out);
Matrix matmul(const Matrix& a, const Matrix& b);

/// A trainable or constant leaf value held outside any tape.
struct Tensor {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(Matrix v, bool requires_grad = false);

  std::size_t rows() const { return value.rows(); }
  std::size_t cols() const { return value.cols(); }
  void zero_grad();
};

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Scalar value of a 1x1 result.
  double item() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records a parameter. If t.requires_grad, backward() accumulates into t.grad.
  /// The tensor must outlive the recorded graph.
  Var leaf(Tensor& t);
  /// Records a non-differentiable constant (copied).
  Var constant(Matrix m);
  /// Records a non-differentiable constant by reference; `m` must outlive the tape contents.
  Var borrow(const Matrix& m);

  std::size_t size() const { return nodes_.size(); }
  void clear();

  /// When enabled, every recorded op output is scanned for NaN/Inf.
  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

 private:
  enum class Op {
    kLeaf,
    kConstant,
    kMatMul,
    kAdd,
    kAddRowBroadcast,
    kMul,
    kRelu,
    kSigmoid,
    kLogSoftmaxRows,
    kMeanRows,
    kMaxRows,
    kSumAll,
    kScalarMul,
    kAddScalar,
    kLog,
    kGcnNormalize,
    kScatterSymmetric,
    kGatherRows,
    kConcatCols,
  };

  struct Node {
    Op op = Op::kConstant;
    int a = -1;
    int b = -1;
    double scalar = 0.0;
    Matrix own;
    const Matrix* borrowed = nullptr;
    Matrix grad;
    Tensor* target = nullptr;
    bool needs_grad = false;
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> index;

    const Matrix& value() const { return borrowed ? *borrowed : own; }
  };

  Var push(Node node);
  const Node& node(Var v) const;
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  bool needs(Var v) const { return node(v).needs_grad; }
  Matrix& grad_of(int id);
  void propagate(int id);

  std::vector<Node> nodes_;
  bool check_finite_;

  friend class Var;
  friend Var matmul(Var, Var);
  friend Var add(Var, Var);
  friend Var mul_elementwise(Var, Var);
  friend Var relu(Var);
  friend Var sigmoid(Var);
  friend Var log_softmax_rows(Var);
  friend Var mean_rows(Var);
  friend Var max_rows(Var);
  friend Var sum_all(Var);
  friend Var scalar_mul(Var, double);
  friend Var add_scalar(Var, double);
  friend Var log(Var);
  friend Var gcn_normalize(Var);
  friend Var scatter_symmetric(Var, std::span<const std::pair<int, int>>, std::size_t);
  friend Var gather_rows(Var, std::span<const int>);
  friend Var concat_cols(Var, Var);
  friend void backward(Var);
};

Var matmul(Var a, Var b);
/// Elementwise sum. `b` may also be a 1 x cols row broadcast over every row of `a`.
Var add(Var a, Var b);
Var mul_elementwise(Var a, Var b);
/// max(0, x); subgradient 0 at x == 0.
Var relu(Var a);
Var sigmoid(Var a);
/// Row-wise log-softmax with max subtraction.
Var log_softmax_rows(Var a);
/// Column means: n x c -> 1 x c.
Var mean_rows(Var a);
/// Column maxima: n x c -> 1 x c. The gradient goes to the first maximal row.
Var max_rows(Var a);
Var sum_all(Var a);
Var scalar_mul(Var a, double c);
Var add_scalar(Var a, double c);
/// Elementwise natural log; inputs must be positive.
Var log(Var a);

/// D^{-1/2} (A + I) D^{-1/2}, D the row sums of A + I. `a` must be square.
Var gcn_normalize(Var a);
/// Builds an n x n matrix with out(i,j) = out(j,i) = values(e) for edge e = (i,j).
Var scatter_symmetric(Var values, std::span<const std::pair<int, int>> edges, std::size_t n);
Var gather_rows(Var a, std::span<const int> rows);
Var concat_cols(Var a, Var b);

/// Reverse pass from a 1x1 loss. Gradients accumulate into every
/// requires_grad Tensor reachable from the loss (repeated calls without
/// Tensor::zero_grad add up). The tape is cleared afterwards.
void backward(Var loss);

/// Builds a scalar function of x on the given tape.
using ScalarFn = std::function<Var(Tape&, Var x)>;

/// Max over coordinates of |autodiff - central difference| / max(1, |central difference|).
/// Points where f is not differentiable (e.g. a relu input exactly 0) are
/// outside the contract.
double finite_diff_check(const ScalarFn& f, const Matrix& point, double step = 1e-5);

}  // namespace storex::nd

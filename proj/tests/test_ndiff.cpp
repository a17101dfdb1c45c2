#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "storex/errors.hpp"
#include "storex/ndiff.hpp"

namespace nd = storex::nd;
using nd::Matrix;
using nd::Tape;
using nd::Var;

namespace {

constexpr double kTol = 1e-6;

double check(const oracle::ScalarFn& f, const Matrix& x) { return oracle::gradient_error(f, x); }

}  // namespace

TEST(Ndiff, MatmulValue) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5}, {6}});
  EXPECT_EQ(nd::matmul(a, b), Matrix::from_rows({{17}, {39}}));
}

TEST(Ndiff, ElementwiseOpGradients) {
  storex::Rng rng(11);
  const Matrix c = oracle::random_matrix(rng, 3, 4);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 3, 4);
    EXPECT_LT(check([&](Tape& t, Var v) { return nd::sum_all(nd::mul_elementwise(nd::sigmoid(v), t.constant(c))); }, x), kTol);
    EXPECT_LT(check([&](Tape& t, Var v) { return nd::sum_all(nd::mul_elementwise(v, nd::add(v, t.constant(c)))); }, x), kTol);
    EXPECT_LT(check([](Tape&, Var v) { return nd::sum_all(nd::log(nd::add_scalar(nd::scalar_mul(nd::sigmoid(v), 2.0), 0.5))); }, x), kTol);
  }
}

TEST(Ndiff, ReluGradientAwayFromKink) {
  storex::Rng rng(12);
  Matrix x = oracle::random_matrix(rng, 4, 4);
  for (double& v : x.data()) {
    if (std::abs(v) < 0.05) v = 0.3;
  }
  EXPECT_LT(check([](Tape&, Var v) { return nd::sum_all(nd::mul_elementwise(nd::relu(v), v)); }, x), kTol);
}

TEST(Ndiff, MatmulAndBroadcastGradients) {
  storex::Rng rng(13);
  const Matrix w = oracle::random_matrix(rng, 4, 2);
  const Matrix bias = oracle::random_matrix(rng, 1, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 3, 4);
    auto f = [&](Tape& t, Var v) {
      return nd::sum_all(nd::sigmoid(nd::add(nd::matmul(v, t.constant(w)), t.constant(bias))));
    };
    EXPECT_LT(check(f, x), kTol);
    auto g = [&](Tape& t, Var v) {
      return nd::sum_all(nd::sigmoid(nd::add(nd::matmul(t.constant(x), t.constant(w)), v)));
    };
    EXPECT_LT(check(g, bias), kTol);
  }
}

TEST(Ndiff, PoolingGradients) {
  storex::Rng rng(14);
  const Matrix c = oracle::random_matrix(rng, 1, 3);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 5, 3);
    EXPECT_LT(check([&](Tape& t, Var v) { return nd::sum_all(nd::mul_elementwise(nd::mean_rows(v), t.constant(c))); }, x), kTol);
    EXPECT_LT(check([&](Tape& t, Var v) { return nd::sum_all(nd::mul_elementwise(nd::max_rows(v), t.constant(c))); }, x), kTol);
  }
}

TEST(Ndiff, LogSoftmaxGradientAndNormalization) {
  storex::Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 4, 5, -30.0, 30.0);
    Tape tape;
    const Matrix lp = nd::log_softmax_rows(tape.constant(x)).value();
    for (std::size_t r = 0; r < lp.rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < lp.cols(); ++c) total += std::exp(lp(r, c));
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
    const Matrix pick = oracle::random_matrix(rng, 4, 5, 0.0, 1.0);
    const Matrix small = oracle::random_matrix(rng, 4, 5);
    EXPECT_LT(check([&](Tape& t, Var v) { return nd::sum_all(nd::mul_elementwise(nd::log_softmax_rows(v), t.constant(pick))); }, small), kTol);
  }
}

TEST(Ndiff, GcnNormalizeMatchesDefinitionAndGradient) {
  storex::Rng rng(16);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix a(5, 5);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = i + 1; j < 5; ++j) a(i, j) = a(j, i) = rng.uniform(0.0, 1.0);
    }
    Tape tape;
    const Matrix got = nd::gcn_normalize(tape.constant(a)).value();
    const Matrix want = oracle::normalized(a);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-14);
    const Matrix c = oracle::random_matrix(rng, 5, 5);
    EXPECT_LT(check([&](Tape& t, Var v) { return nd::sum_all(nd::mul_elementwise(nd::gcn_normalize(v), t.constant(c))); }, a), kTol);
  }
}

TEST(Ndiff, ScatterGatherConcatGradients) {
  storex::Rng rng(17);
  const std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {0, 3}};
  const std::vector<int> rows{2, 0, 2};
  const Matrix c4 = oracle::random_matrix(rng, 4, 4);
  const Matrix c3 = oracle::random_matrix(rng, 3, 4);
  const Matrix other = oracle::random_matrix(rng, 3, 2);
  const Matrix v = oracle::random_matrix(rng, 3, 1);
  EXPECT_LT(check([&](Tape& t, Var x) {
              return nd::sum_all(nd::mul_elementwise(nd::scatter_symmetric(x, edges, 4), t.constant(c4)));
            }, v), kTol);
  const Matrix h = oracle::random_matrix(rng, 3, 2);
  EXPECT_LT(check([&](Tape& t, Var x) {
              Var g = nd::concat_cols(nd::gather_rows(x, rows), t.constant(other));
              return nd::sum_all(nd::mul_elementwise(nd::sigmoid(g), t.constant(c3)));
            }, h), kTol);
}

TEST(Ndiff, ScatterIsSymmetric) {
  Tape tape;
  const std::vector<std::pair<int, int>> edges{{0, 2}, {1, 2}};
  const Matrix out = nd::scatter_symmetric(tape.constant(Matrix::from_rows({{0.3}, {0.7}})), edges, 3).value();
  EXPECT_EQ(out, Matrix::from_rows({{0, 0, 0.3}, {0, 0, 0.7}, {0.3, 0.7, 0}}));
}

TEST(Ndiff, ShapeMismatchIsContractError) {
  Tape tape;
  Var a = tape.constant(Matrix(2, 3));
  Var b = tape.constant(Matrix(2, 3));
  EXPECT_THROW(nd::matmul(a, b), storex::ContractError);
  EXPECT_THROW(nd::gather_rows(a, std::vector<int>{5}), storex::ContractError);
}

TEST(Ndiff, GradientsAccumulateAcrossBackwardCalls) {
  nd::Tensor x(Matrix::from_rows({{1.0, 2.0}}), true);
  for (int k = 0; k < 2; ++k) {
    Tape tape;
    nd::backward(nd::sum_all(nd::scalar_mul(tape.leaf(x), 3.0)));
  }
  EXPECT_EQ(x.grad, Matrix::from_rows({{6.0, 6.0}}));
  x.zero_grad();
  EXPECT_EQ(x.grad, Matrix::from_rows({{0.0, 0.0}}));
}

TEST(Ndiff, LibraryCheckerAgreesWithOracle) {
  storex::Rng rng(18);
  const Matrix x = oracle::random_matrix(rng, 3, 3);
  auto f = [](Tape&, Var v) { return nd::sum_all(nd::sigmoid(nd::matmul(v, v))); };
  EXPECT_LT(nd::finite_diff_check(f, x), 1e-6);
  EXPECT_LT(check(f, x), kTol);
}

#include "pidgan/ad/tape.hpp"
#include "support/fd.hpp"

#include <gtest/gtest.h>

using namespace pidgan;
using pidgan::testing::fd_gradient;
using pidgan::testing::relative_error;
using pidgan::testing::uniform;

namespace {

// Checks d f / d input against central differences for one op chain.
void check_gradient(const std::function<ad::Var(ad::Tape&, const ad::Var&)>& build, const Matrix& at,
                    double tol = 1e-6) {
  ad::Tape tape;
  const ad::Var x = tape.variable(at);
  const ad::Var y = build(tape, x);
  tape.backward(y);
  const Matrix analytic = tape.gradient(x);
  const Matrix numeric = fd_gradient(
      [&](const Matrix& m) {
        ad::Tape t;
        return build(t, t.constant(m)).scalar();
      },
      at);
  EXPECT_LT(relative_error(analytic, numeric), tol);
}

}  // namespace

TEST(Tape, ElementwiseOpsMatchFiniteDifferences) {
  Rng rng(7);
  const Matrix a = uniform(3, 4, 0.2, 1.5, rng);
  const Matrix c = uniform(3, 4, -1, 1, rng);
  check_gradient([](ad::Tape&, const ad::Var& x) { return ad::sum(ad::tanh(x)); }, a);
  check_gradient([](ad::Tape&, const ad::Var& x) { return ad::sum(ad::sigmoid(x)); }, a);
  check_gradient([](ad::Tape&, const ad::Var& x) { return ad::mean(ad::exp(x)); }, a);
  check_gradient([](ad::Tape&, const ad::Var& x) { return ad::sum(ad::log(x)); }, a);
  check_gradient([](ad::Tape&, const ad::Var& x) { return ad::sum(ad::softplus(3.0 * x)); }, a);
  check_gradient([](ad::Tape&, const ad::Var& x) { return ad::sum(ad::square(x) * x); }, a);
  check_gradient([&](ad::Tape& t, const ad::Var& x) { return ad::sum((x - t.constant(c)) * (x + t.constant(c))); },
                 a);
  check_gradient([](ad::Tape&, const ad::Var& x) { return ad::sum(ad::add_scalar(-x, 2.0) * x); }, a);
}

TEST(Tape, StructuralOpsMatchFiniteDifferences) {
  Rng rng(11);
  const Matrix a = uniform(5, 3, -1, 1, rng);
  const Matrix w = uniform(3, 2, -1, 1, rng);
  const Matrix row = uniform(1, 2, -1, 1, rng);
  check_gradient([&](ad::Tape& t, const ad::Var& x) { return ad::sum(ad::tanh(ad::matmul(x, t.constant(w)))); }, a);
  check_gradient([&](ad::Tape& t, const ad::Var& x) { return ad::sum(ad::tanh(ad::matmul(t.constant(a), x))); }, w);
  check_gradient(
      [&](ad::Tape& t, const ad::Var& r) {
        return ad::sum(ad::square(ad::add_row(ad::matmul(t.constant(a), t.constant(w)), r)));
      },
      row);
  check_gradient([](ad::Tape&, const ad::Var& x) { return ad::sum(ad::square(ad::cols(x, 1, 2))); }, a);
  check_gradient(
      [](ad::Tape&, const ad::Var& x) {
        return ad::sum(ad::square(ad::concat_cols({ad::col(x, 2), x, ad::col(x, 0)})));
      },
      a);
}

TEST(Tape, ClampZeroesGradientOutsideRange) {
  ad::Tape tape;
  Matrix m(1, 3);
  m << -2.0, 0.5, 3.0;
  const ad::Var x = tape.variable(m);
  tape.backward(ad::sum(ad::clamp(x, 0.0, 1.0)));
  const Matrix g = tape.gradient(x);
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_EQ(g(0, 1), 1.0);
  EXPECT_EQ(g(0, 2), 0.0);
}

TEST(Tape, BackwardIsRepeatableAndLinear) {
  Rng rng(3);
  ad::Parameter p{"p", uniform(2, 2, -1, 1, rng)};
  ad::Tape tape;
  const ad::Var w = tape.bind(p);
  EXPECT_EQ(tape.bind(p).id(), w.id());
  const ad::Var a = ad::sum(ad::square(w));
  const ad::Var b = ad::sum(ad::tanh(w));
  const ad::Var total = a + 3.0 * b;
  tape.backward(a);
  const Matrix ga = tape.gradient(p);
  tape.backward(b);
  const Matrix gb = tape.gradient(p);
  tape.backward(total);
  const Matrix gt = tape.gradient(p);
  EXPECT_LT((gt - (ga + 3.0 * gb)).norm(), 1e-12);
  tape.backward(a);
  EXPECT_EQ((tape.gradient(p) - ga).norm(), 0.0);
}

TEST(Tape, ConstantsCarryNoGradient) {
  ad::Tape tape;
  const ad::Var c = tape.constant(Matrix::Ones(2, 2));
  const ad::Var y = ad::sum(ad::tanh(c));
  EXPECT_FALSE(y.requires_grad());
  tape.backward(y);
  EXPECT_EQ(tape.gradient(c).norm(), 0.0);
}

TEST(Tape, ShapeMismatchThrows) {
  ad::Tape tape;
  const ad::Var a = tape.constant(Matrix::Ones(2, 2));
  const ad::Var b = tape.constant(Matrix::Ones(3, 2));
  EXPECT_THROW(a + b, ValidationError);
  EXPECT_THROW(ad::matmul(a, b), ValidationError);
  EXPECT_THROW(tape.backward(a), ValidationError);
}

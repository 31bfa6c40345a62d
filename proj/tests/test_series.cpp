#include <gtest/gtest.h>

#include <random>

#include "kjet/series.hpp"

using namespace kjet;

namespace {

std::mt19937_64 g_rng(2024);

Series random_anchored(int dim, int trunc, double scale = 0.5) {
  std::normal_distribution<double> dist(0.0, scale);
  Series s = Series::identity(dim, trunc);
  for (int k = 2; k <= trunc; ++k) {
    SymTensor t = SymTensor::zero(dim, k, ValueKind::Vector);
    for (int c = 0; c < t.raw().cols(); ++c)
      for (int r = 0; r < t.raw().rows(); ++r) t.raw()(r, c) = dist(g_rng);
    s.set_term(t);
  }
  return s;
}

Series random_series(int dim, int trunc, ValueKind kind) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Series s(dim, kind, trunc);
  for (int k = 0; k <= trunc; ++k) {
    SymTensor t = SymTensor::zero(dim, k, kind);
    for (int c = 0; c < t.raw().cols(); ++c)
      for (int r = 0; r < t.raw().rows(); ++r) t.raw()(r, c) = dist(g_rng);
    s.set_term(t);
  }
  return s;
}

/// Anchored series acting as the odd function f on the first coordinate and
/// as the identity on the others: X -> (f(x_1), x_2, ...).
Series odd_coeff_series(int dim, int trunc, const std::vector<double>& odd_coeffs) {
  Series s = Series::identity(dim, trunc);
  for (size_t j = 1; j < odd_coeffs.size(); ++j) {
    int deg = static_cast<int>(2 * j + 1);
    if (deg > trunc) break;
    SymTensor t = SymTensor::zero(dim, deg, ValueKind::Vector);
    std::vector<int> expo(dim, 0);
    expo[0] = deg;
    t.raw()(0, t.basis().rank(expo)) = odd_coeffs[j];
    s.set_term(t);
  }
  return s;
}

TEST(SeriesBasics, AddScaleTruncate) {
  Series s = random_series(2, 4, ValueKind::Scalar);
  Series zero(2, ValueKind::Scalar, 4);
  EXPECT_NEAR((s + zero).norm(), s.norm(), 1e-14);
  Eigen::VectorXd x(2);
  x << 0.3, 0.7;
  EXPECT_NEAR((s * 2.0).eval(x)(0, 0), 2.0 * s.eval(x)(0, 0), 1e-12);
  Series t = s.truncated(2);
  for (int k = 3; k <= 4; ++k) EXPECT_FALSE(t.has_term(k));
}

TEST(SeriesMul, IdentityEndoActsTrivially) {
  Series v = random_series(3, 4, ValueKind::Vector);
  Series idend = Series::id_endo(3, 4);
  EXPECT_LT((mul(idend, v) - v).norm(), 1e-13 * (1.0 + v.norm()));
}

TEST(SeriesMul, KindMismatchThrows) {
  Series v = random_series(2, 3, ValueKind::Vector);
  EXPECT_THROW(mul(v, v), std::invalid_argument);
}

TEST(SeriesMul, MatchesPointwiseProduct) {
  Series a = random_series(2, 6, ValueKind::Scalar);
  Series b = random_series(2, 6, ValueKind::Scalar);
  Series c = mul(a, b);
  Eigen::VectorXd x(2);
  x << 0.21, -0.13;
  // compare through the truncation order by scaling
  double direct = 0.0;
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; i + j <= 6; ++j)
      direct += a.term(i).eval_diagonal(x)(0, 0) * b.term(j).eval_diagonal(x)(0, 0);
  EXPECT_NEAR(c.eval(x)(0, 0), direct, 1e-12);
}

TEST(Compose, IdentityIsNeutral) {
  Series s = random_series(2, 5, ValueKind::Vector);
  Series id = Series::identity(2, 5);
  EXPECT_LT((compose(s, id) - s).norm(), 1e-12 * (1.0 + s.norm()));
}

TEST(Compose, TanArctanCancel) {
  // tan and arctan Maclaurin through order 7
  Series tan_s = odd_coeff_series(2, 7, {1.0, 1.0 / 3.0, 2.0 / 15.0, 17.0 / 315.0});
  Series atan_s = odd_coeff_series(2, 7, {1.0, -1.0 / 3.0, 1.0 / 5.0, -1.0 / 7.0});
  Series both = compose(tan_s, atan_s);
  EXPECT_LT((both - Series::identity(2, 7)).norm(), 1e-12);
}

TEST(Compose, DegreeBookkeeping) {
  // outer has only degree 2; inner has degrees 1 and 3 -> output 2, 4, 6 only
  Series outer(2, ValueKind::Scalar, 7);
  SymTensor o2 = SymTensor::zero(2, 2, ValueKind::Scalar);
  o2.raw().setOnes();
  outer.set_term(o2);
  Series inner = Series::identity(2, 7);
  SymTensor i3 = SymTensor::zero(2, 3, ValueKind::Vector);
  i3.raw().setConstant(0.3);
  inner.set_term(i3);
  Series out = compose(outer, inner);
  for (int k = 0; k <= 7; ++k) {
    double n = out.term(k).norm();
    if (k == 2 || k == 4 || k == 6)
      EXPECT_GT(n, 1e-12) << k;
    else
      EXPECT_LT(n, 1e-14) << k;
  }
}

TEST(Compose, NonAnchoredInnerThrows) {
  Series s = random_series(2, 3, ValueKind::Scalar);
  Series inner = random_series(2, 3, ValueKind::Vector);  // generic: not anchored
  EXPECT_THROW(compose(s, inner), std::invalid_argument);
}

TEST(Compose, AssociativityProperty) {
  Series a = random_series(2, 6, ValueKind::Scalar);
  Series b = random_anchored(2, 6, 0.4);
  Series c = random_anchored(2, 6, 0.4);
  Series left = compose(compose(a, b), c);
  Series right = compose(a, compose(b, c));
  EXPECT_LT((left - right).norm(), 1e-10 * (1.0 + left.norm()));
}

TEST(Invert, IdentityAndInvolution) {
  Series id = Series::identity(3, 5);
  EXPECT_LT((invert_anchored(id) - id).norm(), 1e-14);
  Series s = random_anchored(3, 5, 0.3);
  Series r = invert_anchored(s);
  EXPECT_LT((compose(s, r) - id).norm(), 1e-11 * (1.0 + s.norm()));
  EXPECT_LT((compose(r, s) - id).norm(), 1e-11 * (1.0 + s.norm()));
  EXPECT_LT((invert_anchored(r) - s).norm(), 1e-10 * (1.0 + s.norm()));
}

TEST(Invert, ArctanFromTan) {
  Series tan_s = odd_coeff_series(2, 7, {1.0, 1.0 / 3.0, 2.0 / 15.0, 17.0 / 315.0});
  Series atan_s = odd_coeff_series(2, 7, {1.0, -1.0 / 3.0, 1.0 / 5.0, -1.0 / 7.0});
  EXPECT_LT((invert_anchored(tan_s) - atan_s).norm(), 1e-13);
}

TEST(MulInverse, IdentityAndInvolution) {
  Series id = Series::id_endo(2, 5);
  EXPECT_LT((mul_inverse(id) - id).norm(), 1e-14);
  Series s = random_series(2, 5, ValueKind::Endo);
  // make head invertible and well-conditioned
  SymTensor head = SymTensor::constant(2, 2.0 * Eigen::MatrixXd::Identity(2, 2), ValueKind::Endo);
  s.set_term(head);
  Series r = mul_inverse(s);
  EXPECT_LT((mul(s, r) - id).norm(), 1e-11 * (1.0 + s.norm()));
  EXPECT_LT((mul_inverse(r) - s).norm(), 1e-10 * (1.0 + s.norm()));
}

TEST(MulInverse, SinhRatioTermwise) {
  // (sinh u/u)^{-1} = u/sinh u termwise on a one-variable model:
  // u^2 acts as multiplication by x_1^2.
  int trunc = 8;
  Series s(2, ValueKind::Endo, trunc);
  for (int k = 0; 2 * k <= trunc; ++k) {
    SymTensor t = SymTensor::zero(2, 2 * k, ValueKind::Endo);
    std::vector<int> expo(2, 0);
    expo[0] = 2 * k;
    Eigen::MatrixXd id2 = Eigen::MatrixXd::Identity(2, 2);
    t.raw().col(t.basis().rank(expo)) =
        SymTensor::flatten(id2 / MonomialBasis::factorial(2 * k + 1), ValueKind::Endo, 2);
    s.set_term(t);
  }
  Series r = mul_inverse(s);
  // x/sinh x = 1 - x^2/6 + 7x^4/360 - 31 x^6/15120
  std::vector<double> expect = {1.0, -1.0 / 6.0, 7.0 / 360.0, -31.0 / 15120.0};
  for (int k = 0; 2 * k <= trunc - 2; ++k) {
    std::vector<int> expo(2, 0);
    expo[0] = 2 * k;
    SymTensor t = r.term(2 * k);
    Eigen::MatrixXd v = SymTensor::unflatten(t.raw().col(t.basis().rank(expo)), ValueKind::Endo, 2);
    EXPECT_NEAR(v(0, 0), expect[k], 1e-13) << k;
  }
}

TEST(MulInverse, SingularHeadThrows) {
  Series s(2, ValueKind::Endo, 3);
  s.set_term(SymTensor::constant(2, Eigen::MatrixXd::Zero(2, 2), ValueKind::Endo));
  EXPECT_THROW(mul_inverse(s), std::invalid_argument);
}

TEST(DirectionalCompose, IdentityEndoGivesNumberOp) {
  Series s = random_series(3, 5, ValueKind::Vector);
  Series g = Series::id_endo(3, 5);
  EXPECT_LT((directional_compose(s, g) - s.number_op()).norm(), 1e-12 * (1.0 + s.norm()));
}

TEST(DirectionalCompose, IdentityFieldReturnsGX) {
  Series s = Series::identity(2, 5);
  Series g = random_series(2, 5, ValueKind::Endo);
  Series gx = apply_to_identity(g);
  EXPECT_LT((directional_compose(s, g) - gx.truncated(5)).norm(), 1e-12 * (1.0 + gx.norm()));
}

TEST(DirectionalCompose, AdditiveInG) {
  Series s = random_series(2, 5, ValueKind::Vector);
  Series g1 = random_series(2, 5, ValueKind::Endo);
  Series g2 = random_series(2, 5, ValueKind::Endo);
  Series lhs = directional_compose(s, g1 + g2);
  Series rhs = directional_compose(s, g1) + directional_compose(s, g2);
  EXPECT_LT((lhs - rhs).norm(), 1e-11 * (1.0 + lhs.norm()));
}

TEST(Jacobian, MatchesDirectionalDerivative) {
  Series s = random_anchored(2, 5, 0.4);
  Series ds = jacobian(s);
  // D s(X) e_j compared against the x_j-derivative of each term
  Eigen::VectorXd x(2);
  x << 0.12, -0.4;
  double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    Eigen::VectorXd fd = (s.eval(xp) - s.eval(xm)) / (2.0 * h);
    Eigen::MatrixXd J = ds.eval(x);
    EXPECT_LT((J.col(j) - fd).norm(), 1e-8);
  }
}

}  // namespace

#include <gtest/gtest.h>

#include <random>

#include "kjet/models.hpp"
#include "kjet/sym_tensor.hpp"

using namespace kjet;

namespace {

Eigen::MatrixXd scalar(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

TEST(KahlerPoint, StandardInvariants) {
  KahlerPoint pt = KahlerPoint::standard(2);
  EXPECT_EQ(pt.dim(), 4);
  const Eigen::MatrixXd& I = pt.cplx();
  EXPECT_LT((I * I + Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-14);
  // g(IX, IY) = g(X, Y)
  EXPECT_LT((I.transpose() * pt.metric() * I - pt.metric()).norm(), 1e-14);
}

TEST(KahlerPoint, RejectsBadData) {
  Eigen::MatrixXd g = -Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(KahlerPoint(g, std::nullopt), std::invalid_argument);
  Eigen::MatrixXd notI = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(KahlerPoint(Eigen::MatrixXd::Identity(2, 2), notI), std::invalid_argument);
}

TEST(Symmetrize, TwoTermAverage) {
  // B(X,Y) = x_1 y_2 in dim 2 -> B_sym(X,Y) = (x_1 y_2 + x_2 y_1)/2
  SymTensor t = SymTensor::from_full(2, 2, ValueKind::Scalar, [](const std::vector<int>& idx) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = (idx[0] == 0 && idx[1] == 1) ? 1.0 : 0.0;
    return m;
  });
  EXPECT_NEAR(t.component({0, 1})(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(t.component({1, 0})(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(t.component({0, 0})(0, 0), 0.0, 1e-15);
}

TEST(Symmetrize, IdempotentOnSymmetricInput) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) coef(i, j) = coef(j, i) = dist(rng);
  auto fn = [&](const std::vector<int>& idx) { return scalar(coef(idx[0], idx[1])); };
  SymTensor t = SymTensor::from_full(3, 2, ValueKind::Scalar, fn);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(t.component({i, j})(0, 0), coef(i, j), 1e-14);
}

TEST(Symmetrize, KillsAlternation) {
  SymTensor t = SymTensor::from_full(2, 2, ValueKind::Scalar, [](const std::vector<int>& idx) {
    double v = 0.0;
    if (idx[0] == 0 && idx[1] == 1) v = 1.0;
    if (idx[0] == 1 && idx[1] == 0) v = -1.0;
    return Eigen::MatrixXd::Constant(1, 1, v);
  });
  EXPECT_LT(t.norm(), 1e-15);
}

TEST(Eval, DegreeZeroReturnsConstant) {
  SymTensor t = SymTensor::constant(2, scalar(3.5), ValueKind::Scalar);
  EXPECT_NEAR(t.eval({})(0, 0), 3.5, 1e-15);
}

TEST(Eval, MetricOnBasis) {
  KahlerPoint pt = KahlerPoint::standard(1);
  SymTensor g2 = SymTensor::from_full(2, 2, ValueKind::Scalar, [&](const std::vector<int>& idx) {
    return scalar(pt.metric()(idx[0], idx[1]));
  });
  Eigen::VectorXd e1 = Eigen::VectorXd::Unit(2, 0);
  EXPECT_NEAR(g2.eval({e1, e1})(0, 0), 1.0, 1e-15);
}

TEST(Eval, Cp1CurvatureSlot) {
  // g(R_{X,IX}IX, X) = 4 t^4 on the projective line at X = t e_1
  Model cp1 = grassmann_c(1, 2);
  const Eigen::MatrixXd& I = cp1.point.cplx();
  SymTensor t = SymTensor::from_full(2, 3, ValueKind::Vector, [&](const std::vector<int>& idx) {
    // slots (X, IX-slot, IX-slot): R_{e_a, I e_b} I e_c
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2);
    for (int bp = 0; bp < 2; ++bp)
      for (int cp = 0; cp < 2; ++cp) {
        if (I(bp, idx[1]) == 0.0 || I(cp, idx[2]) == 0.0) continue;
        out += I(bp, idx[1]) * I(cp, idx[2]) * cp1.jet.nabla_r({}, idx[0], bp, cp);
      }
    return Eigen::MatrixXd(out);
  });
  double tt = 0.7;
  Eigen::VectorXd X = tt * Eigen::VectorXd::Unit(2, 0);
  Eigen::VectorXd v = t.eval({X, X, X});
  EXPECT_NEAR(cp1.point.g(v, X), 4.0 * std::pow(tt, 4), 1e-12);
}

TEST(Eval, WrongArgumentCountThrows) {
  SymTensor t = SymTensor::identity_map(2);
  EXPECT_THROW(t.eval({}), std::invalid_argument);
}

TEST(InsertSlot, MetricGivesOneForm) {
  KahlerPoint pt = KahlerPoint::standard(1);
  SymTensor g2 = SymTensor::from_full(2, 2, ValueKind::Scalar, [&](const std::vector<int>& idx) {
    return scalar(pt.metric()(idx[0], idx[1]));
  });
  Eigen::VectorXd z(2);
  z << 2.0, -1.0;
  SymTensor one_form = g2.insert_slot(z);
  for (int i = 0; i < 2; ++i)
    EXPECT_NEAR(one_form.component({i})(0, 0), pt.metric().row(i).dot(z), 1e-14);
}

TEST(InsertSlot, QuarticDerivative) {
  // polynomial |X|^4 in dim 2: insert e_1 gives 4 x_1 |X|^2
  SymTensor t = SymTensor::from_diagonal(2, 4, ValueKind::Scalar, [](const std::vector<int>& idx) {
    // diagonal of (X.X)^2 = sum over pairings: realize directly as
    // multilinear <W1,W2><W3,W4>
    double v = (idx[0] == idx[1] ? 1.0 : 0.0) * (idx[2] == idx[3] ? 1.0 : 0.0);
    return Eigen::MatrixXd::Constant(1, 1, v);
  });
  SymTensor d = t.insert_slot(Eigen::VectorXd::Unit(2, 0));
  // expect polynomial 4 x1 (x1^2 + x2^2)
  Eigen::VectorXd x(2);
  x << 0.3, -1.2;
  double expect = 4.0 * x[0] * x.squaredNorm();
  EXPECT_NEAR(d.eval_diagonal(x)(0, 0), expect, 1e-12);
}

TEST(InsertSlot, TwiceGivesComponent) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd coef(2, 2);
  coef << dist(rng), dist(rng), dist(rng), dist(rng);
  coef = (coef + coef.transpose()).eval();
  SymTensor t = SymTensor::from_full(2, 2, ValueKind::Scalar, [&](const std::vector<int>& idx) {
    return scalar(coef(idx[0], idx[1]));
  });
  Eigen::VectorXd z(2), w(2);
  z << 1.0, 2.0;
  w << -0.5, 3.0;
  double direct = z.dot(coef * w);
  EXPECT_NEAR(t.insert_slot(z).insert_slot(w).eval({})(0, 0), direct, 1e-13);
}

TEST(InsertSlot, DegreeZeroThrows) {
  SymTensor t = SymTensor::constant(2, scalar(1.0), ValueKind::Scalar);
  EXPECT_THROW(t.insert_slot(Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST(Properties, EvalInvariantUnderPermutation) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> dist;
  SymTensor t = SymTensor::from_full(3, 3, ValueKind::Vector, [&](const std::vector<int>&) {
    Eigen::VectorXd v(3);
    v << dist(rng), dist(rng), dist(rng);
    return Eigen::MatrixXd(v);
  });
  std::vector<Eigen::VectorXd> args;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd a(3);
    a << dist(rng), dist(rng), dist(rng);
    args.push_back(a);
  }
  Eigen::VectorXd base = t.eval(args);
  std::vector<int> perm = {2, 0, 1};
  std::vector<Eigen::VectorXd> shuffled = {args[perm[0]], args[perm[1]], args[perm[2]]};
  EXPECT_LT((t.eval(shuffled) - base).norm(), 1e-12 * (1.0 + base.norm()));
}

TEST(Properties, PolarizationRoundTrip) {
  // reconstruct a degree-3 tensor in dim 3 from diagonal samples
  std::mt19937_64 rng(23);
  std::normal_distribution<double> dist;
  SymTensor t = SymTensor::from_full(3, 3, ValueKind::Scalar, [&](const std::vector<int>&) {
    return Eigen::MatrixXd::Constant(1, 1, dist(rng));
  });
  const auto& basis = t.basis();
  int n = basis.size();
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd b(n);
  std::vector<Eigen::VectorXd> samples;
  for (int s = 0; s < n; ++s) {
    Eigen::VectorXd x(3);
    x << dist(rng), dist(rng), dist(rng);
    samples.push_back(x);
    b[s] = t.eval_diagonal(x)(0, 0);
    for (int m = 0; m < n; ++m) {
      double mono = 1.0;
      for (int i : basis.tuple(m)) mono *= x[i];
      A(s, m) = mono;
    }
  }
  Eigen::VectorXd coef = A.fullPivLu().solve(b);
  Eigen::VectorXd truth = t.raw().row(0).transpose();
  EXPECT_LT((coef - truth).norm(), 1e-8 * (1.0 + truth.norm()));
}

TEST(Restrict, SubspaceExtraction) {
  // restrict a dim-4 tensor to coordinates {0,1}
  SymTensor t = SymTensor::from_diagonal(4, 2, ValueKind::Vector, [](const std::vector<int>& idx) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
    v[idx[0]] = 1.0 + idx[1];
    return Eigen::MatrixXd(v);
  });
  SymTensor r = t.restrict({0, 1});
  EXPECT_EQ(r.dim(), 2);
  Eigen::VectorXd x2(2);
  x2 << 0.4, -0.3;
  Eigen::VectorXd x4(4);
  x4 << 0.4, -0.3, 0.0, 0.0;
  Eigen::VectorXd full = t.eval_diagonal(x4);
  Eigen::VectorXd sub = r.eval_diagonal(x2);
  EXPECT_NEAR(sub[0], full[0], 1e-14);
  EXPECT_NEAR(sub[1], full[1], 1e-14);
}

}  // namespace

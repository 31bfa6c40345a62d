#include <gtest/gtest.h>

#include <random>

#include "kjet/graded_ops.hpp"
#include "kjet/models.hpp"

using namespace kjet;

namespace {

std::mt19937_64 g_rng(99);

SymTensor random_tensor(int dim, int degree, ValueKind kind) {
  std::normal_distribution<double> dist;
  SymTensor t = SymTensor::zero(dim, degree, kind);
  for (int c = 0; c < t.raw().cols(); ++c)
    for (int r = 0; r < t.raw().rows(); ++r) t.raw()(r, c) = dist(g_rng);
  return t;
}

SymTensor metric_poly(const KahlerPoint& pt) {
  int dim = pt.dim();
  return SymTensor::from_full(dim, 2, ValueKind::Scalar, [&](const std::vector<int>& idx) {
    // store the bilinear form 2g so the polynomial is g(X,X)
    return Eigen::MatrixXd::Constant(1, 1, 2.0 * pt.metric()(idx[0], idx[1]));
  });
}

TEST(DerI, KillsTheMetric) {
  KahlerPoint pt = KahlerPoint::standard(2);
  SymTensor g2 = metric_poly(pt);
  EXPECT_LT(der_I(g2, pt.cplx()).norm(), 1e-13);
}

TEST(DerI, DegreeZeroIsZero) {
  KahlerPoint pt = KahlerPoint::standard(1);
  SymTensor c = SymTensor::constant(2, Eigen::MatrixXd::Constant(1, 1, 2.0), ValueKind::Scalar);
  EXPECT_LT(der_I(c, pt.cplx()).norm(), 1e-15);
}

TEST(DerI, KillsSectionalCurvatureOfCp2) {
  Model cp2 = grassmann_c(1, 3);
  SymTensor s4 = sectional_s4_symmetrized(cp2.jet);
  EXPECT_GT(s4.norm(), 1e-6);
  EXPECT_LT(der_I(s4, cp2.point.cplx()).norm(), 1e-11 * s4.norm());
}

TEST(Weight, IdentityVectorFieldHasWeightZero) {
  KahlerPoint pt = KahlerPoint::standard(2);
  SymTensor idf = SymTensor::identity_map(4);
  EXPECT_LT(weight(idf, pt.cplx()).norm(), 1e-14);
}

TEST(Weight, CurvatureSlotHasWeightZero) {
  Model cp2 = grassmann_c(1, 3);
  SymTensor t = adsq_x_term(cp2.jet);  // degree-2 endo X -> R_{X,.}X
  EXPECT_GT(t.norm(), 1e-6);
  EXPECT_LT(weight(t, cp2.point.cplx()).norm(), 1e-11 * t.norm());
}

TEST(Weight, AntiholomorphicFormTimesVectorIsNonzero) {
  // t = X -> b(X) v with b = dx_1, v = e_1: delta t != 0
  KahlerPoint pt = KahlerPoint::standard(1);
  SymTensor t = SymTensor::zero(2, 1, ValueKind::Vector);
  t.raw()(0, t.basis().rank_of_tuple({0})) = 1.0;
  SymTensor d = weight(t, pt.cplx());
  EXPECT_GT(d.norm(), 0.5);
  // hand value: (delta t)(X) = x_1 I e_1 - b(IX) e_1 = x_1 e_2 + x_2 e_1
  Eigen::VectorXd x(2);
  x << 0.3, 0.7;
  Eigen::VectorXd expect(2);
  expect << x[1], x[0];
  EXPECT_LT((d.eval_diagonal(x) - expect).norm(), 1e-13);
}

TEST(Weight, ScalarInputThrows) {
  KahlerPoint pt = KahlerPoint::standard(1);
  EXPECT_THROW(weight(random_tensor(2, 2, ValueKind::Scalar), pt.cplx()), std::invalid_argument);
}

TEST(Weight, DerivationUnderSlotComposition) {
  // delta(A o B) = (delta A) o B + A o (delta B) for dense multilinear maps;
  // A binary, B unary, composition in the first slot. Test-side dense algebra.
  KahlerPoint pt = KahlerPoint::standard(1);
  const Eigen::MatrixXd& I = pt.cplx();
  int dim = 2;
  std::normal_distribution<double> dist;
  std::vector<std::vector<Eigen::VectorXd>> A(dim, std::vector<Eigen::VectorXd>(dim));
  std::vector<Eigen::VectorXd> B(dim);
  for (int a = 0; a < dim; ++a) {
    B[a] = Eigen::VectorXd::NullaryExpr(dim, [&](int) { return dist(g_rng); });
    for (int b = 0; b < dim; ++b)
      A[a][b] = Eigen::VectorXd::NullaryExpr(dim, [&](int) { return dist(g_rng); });
  }
  auto deltaA = [&](const std::vector<std::vector<Eigen::VectorXd>>& M) {
    auto out = M;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        Eigen::VectorXd acc = I * M[a][b];
        for (int ap = 0; ap < dim; ++ap) acc -= I(ap, a) * M[ap][b] + I(ap, b) * M[a][ap];
        out[a][b] = acc;
      }
    return out;
  };
  auto deltaB = [&](const std::vector<Eigen::VectorXd>& M) {
    auto out = M;
    for (int a = 0; a < dim; ++a) {
      Eigen::VectorXd acc = I * M[a];
      for (int ap = 0; ap < dim; ++ap) acc -= I(ap, a) * M[ap];
      out[a] = acc;
    }
    return out;
  };
  auto comp = [&](const std::vector<std::vector<Eigen::VectorXd>>& Ma,
                  const std::vector<Eigen::VectorXd>& Mb) {
    // (A o_1 B)(X1, X2) = A(B(X1), X2)
    std::vector<std::vector<Eigen::VectorXd>> out(dim, std::vector<Eigen::VectorXd>(dim));
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
        for (int m = 0; m < dim; ++m) acc += Mb[a][m] * Ma[m][b];
        out[a][b] = acc;
      }
    return out;
  };
  auto lhs = deltaA(comp(A, B));
  auto r1 = comp(deltaA(A), B);
  auto r2 = comp(A, deltaB(B));
  double err = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) err = std::max(err, (lhs[a][b] - r1[a][b] - r2[a][b]).norm());
  EXPECT_LT(err, 1e-10);
}

TEST(Bigrade, MetricIsPure11) {
  KahlerPoint pt = KahlerPoint::standard(2);
  SymTensor g2 = metric_poly(pt);
  EXPECT_LT((bigrade_project(g2, 1, 1, pt.cplx()) - g2).norm(), 1e-12);
  EXPECT_LT(bigrade_project(g2, 2, 0, pt.cplx()).norm(), 1e-12);
}

TEST(Bigrade, NormSquareSquaredIs22) {
  KahlerPoint pt = KahlerPoint::standard(1);
  SymTensor g2 = metric_poly(pt);
  SymTensor q = mul_terms(g2, g2);
  EXPECT_LT((bigrade_project(q, 2, 2, pt.cplx()) - q).norm(), 1e-12);
}

TEST(Bigrade, HolomorphicQuarticIs40) {
  // Re((x_1 + i x_2)^4) on the standard dim-2 model lies in (4,0)+(0,4)
  KahlerPoint pt = KahlerPoint::standard(1);
  SymTensor t = SymTensor::zero(2, 4, ValueKind::Scalar);
  const auto& b = t.basis();
  using C = std::complex<double>;
  for (int k = 0; k <= 4; ++k) {
    double binom = MonomialBasis::factorial(4) /
                   (MonomialBasis::factorial(k) * MonomialBasis::factorial(4 - k));
    C coef = binom * std::pow(C(0, 1), k);
    std::vector<int> e = {4 - k, k};
    t.raw()(0, b.rank(e)) += coef.real();
  }
  const Eigen::MatrixXd& I = pt.cplx();
  EXPECT_LT((bigrade_project(t, 4, 0, I) - t).norm(), 1e-11 * t.norm());
  EXPECT_LT(bigrade_project(t, 3, 1, I).norm(), 1e-11 * t.norm());
  EXPECT_LT(bigrade_project(t, 2, 2, I).norm(), 1e-11 * t.norm());
  SymTensor dd = der_I(der_I(t, I), I);
  EXPECT_LT((dd + t * 16.0).norm(), 1e-11 * t.norm());
}

TEST(Bigrade, SumRecoversTensor) {
  KahlerPoint pt = KahlerPoint::standard(2);
  SymTensor t = random_tensor(4, 4, ValueKind::Scalar);
  SymTensor sum = SymTensor::zero(4, 4, ValueKind::Scalar);
  for (int j = 0; 2 * j <= 4; ++j) sum += bigrade_project(t, 4 - j, j, pt.cplx());
  EXPECT_LT((sum - t).norm(), 1e-11 * t.norm());
}

TEST(Bigrade, WrongDegreeSplitThrows) {
  KahlerPoint pt = KahlerPoint::standard(1);
  EXPECT_THROW(bigrade_project(random_tensor(2, 3, ValueKind::Scalar), 1, 1, pt.cplx()),
               std::invalid_argument);
}

TEST(Projections, MetricSplits) {
  KahlerPoint pt = KahlerPoint::standard(2);
  SymTensor g2 = metric_poly(pt);
  EXPECT_LT(project_ge22(g2, pt.cplx()).norm(), 1e-13);
  EXPECT_LT((project_bracket1(g2, pt.cplx()) - g2).norm(), 1e-12);
}

TEST(Projections, Cp1QuarticIsGe22) {
  Model cp1 = grassmann_c(1, 2);
  SymTensor s4 = sectional_s4_symmetrized(cp1.jet);
  EXPECT_LT((project_ge22(s4, cp1.point.cplx()) - s4).norm(), 1e-11 * s4.norm());
}

TEST(Projections, MixedPolynomialInBracket1) {
  // Re((x+iy)^3 (x-iy)) is a (3,1)+(1,3) real polynomial on dim 2
  KahlerPoint pt = KahlerPoint::standard(1);
  SymTensor t = SymTensor::zero(2, 4, ValueKind::Scalar);
  const auto& b = t.basis();
  using C = std::complex<double>;
  for (int k = 0; k <= 3; ++k)
    for (int l = 0; l <= 1; ++l) {
      double c3 = MonomialBasis::factorial(3) /
                  (MonomialBasis::factorial(k) * MonomialBasis::factorial(3 - k));
      C coef = c3 * std::pow(C(0, 1), k) * std::pow(C(0, -1), l);
      std::vector<int> e = {4 - k - l, k + l};
      t.raw()(0, b.rank(e)) += coef.real();
    }
  EXPECT_GT(t.norm(), 0.5);
  EXPECT_LT((project_bracket1(t, pt.cplx()) - t).norm(), 1e-11 * t.norm());
}

TEST(PartialInverse, AnnihilatesHolomorphicFields) {
  KahlerPoint pt = KahlerPoint::standard(2);
  auto fields = holomorphic_field_basis(pt, 3);
  ASSERT_FALSE(fields.empty());
  for (const auto& f : fields) {
    PartialInverseResult r = partial_inverse_NI(f, pt.cplx());
    EXPECT_NEAR(r.kernel_residual, f.norm(), 1e-9 * f.norm());
    EXPECT_LT(r.value.norm(), 1e-9 * f.norm());
  }
}

TEST(PartialInverse, Degree1Eigenvalues) {
  // On degree-1 fields X -> AX the operator N + Der_I (x) I has eigenvalue 0
  // on I-commuting A (these are the linear holomorphic fields, the kernel)
  // and eigenvalue 2 on anticommuting A; the partial inverse acts by 1/2 on
  // the latter.
  KahlerPoint pt = KahlerPoint::standard(1);
  const Eigen::MatrixXd& I = pt.cplx();
  Eigen::MatrixXd A(2, 2);
  A << 1.0, -2.0, 2.0, 1.0;  // commutes with standard I
  SymTensor t = SymTensor::zero(2, 1, ValueKind::Vector);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) t.raw()(i, t.basis().rank_of_tuple({j})) = A(i, j);
  SymTensor img = der_I_tensor_I(t, I) + t;  // (N + Der_I (x) I) t, N = 1
  EXPECT_LT(img.norm(), 1e-13);
  PartialInverseResult r = partial_inverse_NI(t, I);
  EXPECT_NEAR(r.kernel_residual, t.norm(), 1e-12);
  EXPECT_LT(r.value.norm(), 1e-12);
  Eigen::MatrixXd B(2, 2);
  B << 1.0, 2.0, 2.0, -1.0;  // anticommutes with I
  SymTensor tb = SymTensor::zero(2, 1, ValueKind::Vector);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) tb.raw()(i, tb.basis().rank_of_tuple({j})) = B(i, j);
  EXPECT_LT((der_I_tensor_I(tb, I) + tb - tb * 2.0).norm(), 1e-13);
  PartialInverseResult rb = partial_inverse_NI(tb, I);
  EXPECT_LT((rb.value - tb * 0.5).norm(), 1e-12);
  EXPECT_LT(rb.kernel_residual, 1e-13);
}

TEST(PartialInverse, PenroseIdentity) {
  KahlerPoint pt = KahlerPoint::standard(2);
  const Eigen::MatrixXd& I = pt.cplx();
  SymTensor t = random_tensor(4, 3, ValueKind::Vector);
  auto op = [&](const SymTensor& x) {
    return der_I_tensor_I(x, I) + x * static_cast<double>(x.degree());
  };
  PartialInverseResult pinv_t = partial_inverse_NI(op(t), I);
  EXPECT_LT((op(pinv_t.value) - op(t)).norm(), 1e-10 * (1.0 + t.norm()));
}

TEST(PartialInverse, MatchesDensePseudoInverse) {
  KahlerPoint pt = KahlerPoint::standard(1);
  const Eigen::MatrixXd& I = pt.cplx();
  int degree = 3;
  GradedOperator op = assemble_operator(2, degree, ValueKind::Vector, [&](const SymTensor& x) {
    return der_I_tensor_I(x, I) + x * static_cast<double>(degree);
  });
  Eigen::MatrixXd pinv = pseudo_inverse(op.matrix);
  SymTensor t = random_tensor(2, degree, ValueKind::Vector);
  Eigen::VectorXd dense = pinv * tensor_to_vec(t);
  PartialInverseResult spectral = partial_inverse_NI(t, I);
  EXPECT_LT((tensor_to_vec(spectral.value) - dense).norm(), 1e-9 * (1.0 + dense.norm()));
}

TEST(GradedOperator, AssembledMatrixAgreesWithSlotwise) {
  KahlerPoint pt = KahlerPoint::standard(1);
  const Eigen::MatrixXd& I = pt.cplx();
  GradedOperator op =
      assemble_operator(2, 3, ValueKind::Scalar, [&](const SymTensor& x) { return der_I(x, I); });
  for (int trial = 0; trial < 20; ++trial) {
    SymTensor t = random_tensor(2, 3, ValueKind::Scalar);
    Eigen::VectorXd via_matrix = op.matrix * tensor_to_vec(t);
    EXPECT_LT((via_matrix - tensor_to_vec(der_I(t, I))).norm(), 1e-10);
  }
}

TEST(Spectra, DerISquaredOnScalars) {
  // spectrum of Der_I^2 on degree-k scalars is {-(k-2j)^2}
  KahlerPoint pt = KahlerPoint::standard(2);
  const Eigen::MatrixXd& I = pt.cplx();
  for (int k = 1; k <= 4; ++k) {
    GradedOperator op = assemble_operator(
        4, k, ValueKind::Scalar, [&](const SymTensor& x) { return der_I(der_I(x, I), I); });
    Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(op.matrix).eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
      double best = 1e9;
      for (int j = 0; 2 * j <= k; ++j)
        best = std::min(best, std::abs(ev[i] + (k - 2 * j) * (k - 2 * j)));
      EXPECT_LT(best, 1e-9) << "k=" << k << " ev=" << ev[i];
    }
  }
}

TEST(Spectra, NSquaredPlusDerISquared) {
  // eigenvalue 4*kappa*kbar on the (kappa, kbar) component
  KahlerPoint pt = KahlerPoint::standard(2);
  const Eigen::MatrixXd& I = pt.cplx();
  int k = 4;
  GradedOperator op = assemble_operator(4, k, ValueKind::Scalar, [&](const SymTensor& x) {
    return der_I(der_I(x, I), I) + x * static_cast<double>(k * k);
  });
  Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(op.matrix).eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    double best = 1e9;
    for (int j = 0; 2 * j <= k; ++j) best = std::min(best, std::abs(ev[i] - 4.0 * j * (k - j)));
    EXPECT_LT(best, 1e-9);
  }
}

TEST(SigmaSpace, BasisCharacterization) {
  // every basis element satisfies I F(X_1,...) = -F(I X_1, ...)
  KahlerPoint pt = KahlerPoint::standard(2);
  const Eigen::MatrixXd& I = pt.cplx();
  for (int d = 1; d <= 2; ++d) {
    auto sigma = sigma_basis(4, d, I);
    ASSERT_FALSE(sigma.empty());
    for (const auto& f : sigma) {
      double err = 0.0;
      for (int c = 0; c < f.n_combs(); ++c) {
        const auto& comb = f.comb(c);
        Eigen::VectorXd lhs = I * f.block(c).col(0);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(4);
        for (int rep = 0; rep < 4; ++rep) {
          if (I(rep, comb[0]) == 0.0) continue;
          std::vector<int> nc = comb;
          nc[0] = rep;
          double sign = 1.0;
          bool dup = false;
          for (size_t a2 = 0; a2 < nc.size() && !dup; ++a2)
            for (size_t b2 = a2 + 1; b2 < nc.size(); ++b2) {
              if (nc[a2] == nc[b2])
                dup = true;
              else if (nc[a2] > nc[b2]) {
                std::swap(nc[a2], nc[b2]);
                sign = -sign;
              }
            }
          if (dup) continue;
          rhs -= I(rep, comb[0]) * sign * f.block(f.comb_rank(nc)).col(0);
        }
        err = std::max(err, (lhs - rhs).norm());
      }
      EXPECT_LT(err, 1e-10);
    }
  }
}

TEST(SigmaSpace, Pr1IsProjectorOntoAnticommuting) {
  KahlerPoint pt = KahlerPoint::standard(2);
  const Eigen::MatrixXd& I = pt.cplx();
  std::normal_distribution<double> dist;
  Eigen::MatrixXd F = Eigen::MatrixXd::NullaryExpr(4, 4, [&](int, int) { return dist(g_rng); });
  Eigen::MatrixXd P = pr_sigma1(F, I);
  EXPECT_LT((pr_sigma1(P, I) - P).norm(), 1e-13);
  EXPECT_LT((I * P + P * I).norm(), 1e-13);
}

TEST(BoundaryOps, LstarSquaresToZero) {
  KahlerPoint pt = KahlerPoint::standard(2);
  const Eigen::MatrixXd& I = pt.cplx();
  auto basis = sym_sigma_basis(4, 2, 2, I);
  ASSERT_FALSE(basis.empty());
  for (size_t i = 0; i < std::min<size_t>(basis.size(), 4); ++i) {
    PolyForm ll = boundary_Lstar(boundary_Lstar(basis[i]));
    EXPECT_LT(ll.norm(), 1e-12);
  }
}

TEST(BoundaryOps, LstarOnDegreeZeroPolynomialInsertsNothing) {
  // L* consumes a form slot; a form with zero polynomial degree gains degree 1
  KahlerPoint pt = KahlerPoint::standard(1);
  auto sigma = sigma_basis(2, 1, pt.cplx());
  ASSERT_FALSE(sigma.empty());
  PolyForm out = boundary_Lstar(sigma[0]);
  EXPECT_EQ(out.poly_deg(), 1);
  EXPECT_EQ(out.form_deg(), 0);
}

TEST(BoundaryOps, LOnLinearFieldGivesSigma1Projection) {
  KahlerPoint pt = KahlerPoint::standard(1);
  const Eigen::MatrixXd& I = pt.cplx();
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 2.0, 2.0, -1.0;  // anticommutes with I
  PolyForm f(2, 1, 0);
  const auto& b1 = MonomialBasis::get(2, 1);
  for (int j = 0; j < 2; ++j) {
    std::vector<int> e(2, 0);
    e[j] = 1;
    f.block(0).col(b1.rank(e)) = A.col(j);
  }
  PolyForm lf = boundary_L(f, I);
  for (int mu = 0; mu < 2; ++mu) EXPECT_LT((lf.block(mu).col(0) - A.col(mu)).norm(), 1e-12);
  // an I-commuting linear field is holomorphic: L image vanishes
  Eigen::MatrixXd C(2, 2);
  C << 1.0, -2.0, 2.0, 1.0;
  PolyForm fc(2, 1, 0);
  for (int j = 0; j < 2; ++j) {
    std::vector<int> e(2, 0);
    e[j] = 1;
    fc.block(0).col(b1.rank(e)) = C.col(j);
  }
  EXPECT_LT(boundary_L(fc, I).norm(), 1e-12);
}

TEST(Laplacian, AnticommutatorMatchesClosedForm) {
  // {L, L*} = id (x) N (x) id + (N (x) id (x) id + Der_I (x) id (x) I)/2
  KahlerPoint pt = KahlerPoint::standard(1);
  const Eigen::MatrixXd& I = pt.cplx();
  for (int k = 1; k <= 3; ++k)
    for (int d = 0; d <= 1; ++d) {
      auto dom = sym_sigma_basis(2, k, d, I);
      if (dom.empty()) continue;
      auto lap = [&](const PolyForm& f) {
        PolyForm a = boundary_Lstar(boundary_L(f, I));
        if (f.form_deg() >= 1) a += boundary_L(boundary_Lstar(f), I);
        return a;
      };
      auto rhs = [&](const PolyForm& f) {
        PolyForm g = f;
        for (int c = 0; c < f.n_combs(); ++c) {
          SymTensor t = SymTensor::zero(2, k, ValueKind::Vector);
          t.raw() = f.block(c);
          g.block(c) = der_I(t, I).value_lmul(I).raw();
        }
        PolyForm out = f * (d + 0.5 * k);
        out += g * 0.5;
        return out;
      };
      auto mat_l = assemble_form_operator(dom, dom, lap);
      auto mat_r = assemble_form_operator(dom, dom, rhs);
      EXPECT_LT(mat_l.off_space_residual, 1e-9);
      EXPECT_LT((mat_l.matrix - mat_r.matrix).norm(), 1e-9) << "k=" << k << " d=" << d;
      Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                               0.5 * (mat_l.matrix + mat_l.matrix.transpose()))
                               .eigenvalues();
      for (int i = 0; i < ev.size(); ++i) {
        double best = 1e9;
        for (int kbar = 0; kbar <= k; ++kbar) best = std::min(best, std::abs(ev[i] - d - kbar));
        EXPECT_LT(best, 1e-8);
      }
    }
}

TEST(Closure, ConstantFieldGivesPairing) {
  KahlerPoint pt = KahlerPoint::standard(2);
  Eigen::VectorXd z(4);
  z << 1.0, -2.0, 0.5, 0.0;
  SymTensor zf = SymTensor::constant(4, z, ValueKind::Vector);
  SymTensor cl = closure(zf, pt.metric());
  Eigen::VectorXd x(4);
  x << 0.2, 0.4, -0.6, 0.8;
  EXPECT_NEAR(cl.eval_diagonal(x)(0, 0), (pt.metric() * x).dot(z), 1e-12);
  EXPECT_LT((project_bracket1(cl, pt.cplx()) - cl).norm(), 1e-12);
}

TEST(Closure, UnitaryFieldsHaveZeroClosure) {
  // g(AX, X) = 0 for skew-hermitean A: kernel of the exact sequence at
  // linear degree
  KahlerPoint pt = KahlerPoint::standard(1);
  Eigen::MatrixXd A(2, 2);
  A << 0.0, -1.0, 1.0, 0.0;  // in u(1)
  SymTensor t = SymTensor::zero(2, 1, ValueKind::Vector);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) t.raw()(i, t.basis().rank_of_tuple({j})) = A(i, j);
  EXPECT_LT(closure(t, pt.metric()).norm(), 1e-14);
}

TEST(Closure, InverseRoundTrip) {
  KahlerPoint pt = KahlerPoint::standard(2);
  auto fields = holomorphic_field_basis(pt, 3);
  std::normal_distribution<double> dist;
  SymTensor z = SymTensor::zero(4, 3, ValueKind::Vector);
  for (const auto& f : fields) z += f * dist(g_rng);
  SymTensor p = closure(z, pt.metric());
  SymTensor zback = closure_inverse(p, pt, 1e-8);
  EXPECT_LT((closure(zback, pt.metric()) - p).norm(), 1e-9 * (1.0 + p.norm()));
  EXPECT_LT((zback - z).norm(), 1e-8 * (1.0 + z.norm()));
}

TEST(Closure, RejectsNonImage) {
  KahlerPoint pt = KahlerPoint::standard(1);
  SymTensor p = random_tensor(2, 4, ValueKind::Scalar);
  EXPECT_THROW(closure_inverse(p, pt, 1e-10), std::invalid_argument);
}

TEST(Resolution, ExactnessSmallCases) {
  KahlerPoint pt1 = KahlerPoint::standard(1);
  for (int k = 0; k <= 4; ++k) {
    ResolutionReport rep = resolution_check(1, k, pt1.cplx());
    EXPECT_TRUE(rep.pass) << "n=1 k=" << k;
  }
  KahlerPoint pt2 = KahlerPoint::standard(2);
  for (int k = 0; k <= 3; ++k) {
    ResolutionReport rep = resolution_check(2, k, pt2.cplx());
    EXPECT_TRUE(rep.pass) << "n=2 k=" << k;
    EXPECT_LT(rep.l2_residual, 1e-9);
  }
}

TEST(Resolution, HDimensionMatches) {
  KahlerPoint pt = KahlerPoint::standard(1);
  ResolutionReport rep = resolution_check(1, 1, pt.cplx());
  EXPECT_EQ(rep.h_dim, 2);
  ASSERT_FALSE(rep.kernels.empty());
  EXPECT_EQ(rep.kernels[0], 2);
}

}  // namespace

#pragma once

#include <complex>

#include "kjet/curvature.hpp"
#include "kjet/graded_ops.hpp"
#include "kjet/series.hpp"
#include "kjet/transport.hpp"

namespace kjet {

/// The degree-2 scalar tensor whose polynomial is X -> g(X, X).
inline SymTensor metric_square_polynomial(const KahlerPoint& pt) {
  int dim = pt.dim();
  SymTensor g2 = SymTensor::zero(dim, 2, ValueKind::Scalar);
  const auto& b2 = MonomialBasis::get(dim, 2);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      std::vector<int> e(dim, 0);
      ++e[i];
      ++e[j];
      g2.raw()(0, b2.rank(e)) += pt.metric()(i, j);
    }
  return g2;
}

/// Inverse difference element between Riemannian and Kaehler normal
/// coordinates. Solves the recursion
///   (N (x) id + Der_I (x) I) KInv = I . D KInv [ (id - Phi(X)) I X ]
/// degree by degree; the right hand side at degree m only involves lower
/// degrees since id - Phi = O(X^2). Each degree is resolved by the partial
/// inverse with exact integer spectrum; the kernel component of the right
/// hand side must vanish (holomorphic normalization) and is asserted below
/// `kernel_tol`, a failure signalling an invalid jet.
inline Series solve_k_inv(const CurvatureJet& jet, int trunc, double kernel_tol = 1e-9) {
  require(jet.mode() == JetMode::Kahler || jet.mode() == JetMode::BalancedAffine,
          "difference element needs a Kaehler or balanced complex affine jet");
  int dim = jet.dim();
  const Eigen::MatrixXd& I = jet.point().cplx();
  Series phi = solve_phi(jet, trunc);
  Series f = Series::id_endo(dim, trunc) - phi;           // O(X^2)
  f = f.map_terms([&](const SymTensor& t) { return t.value_rmul(I); });  // (id-Phi) I
  Series k_inv = Series::identity(dim, trunc);
  double scale = std::max(1.0, f.norm());
  for (int m = 2; m <= trunc; ++m) {
    // rhs_m = I * [D k_inv (f X)]_m, uses k_inv terms of degree <= m-1
    Series rhs = derive_along(k_inv.truncated(m), apply_to_identity(f.truncated(m)));
    SymTensor rm = rhs.term(m).value_lmul(I);
    PartialInverseResult res = partial_inverse_NI(rm, I);
    require(res.kernel_residual <= kernel_tol * scale,
            "difference element: holomorphic kernel residual " +
                std::to_string(res.kernel_residual) + " at degree " + std::to_string(m));
    k_inv.set_term(res.value);
  }
  return k_inv;
}

/// Difference element K (compositional inverse of KInv).
inline Series k_element(const CurvatureJet& jet, int trunc) {
  return invert_anchored(solve_k_inv(jet, trunc));
}

/// Kaehler backward parallel transport PsiInv(X) = PhiInv(KX) DK(X). The
/// result commutes with I through the truncation order; the largest
/// commutator entry is written to `commutator_residual` when given and must
/// stay below `tol`.
inline Series psi_inv(const CurvatureJet& jet, int trunc, double tol = 1e-9,
                      double* commutator_residual = nullptr) {
  int dim = jet.dim();
  const Eigen::MatrixXd& I = jet.point().cplx();
  // DK drops one degree; solve K one degree higher so PsiInv is complete at trunc
  Series k_hi = invert_anchored(solve_k_inv(jet, trunc + 1));
  Series phi_inv = solve_phi_inv(jet, trunc);
  Series psi = mul(compose(phi_inv, k_hi.truncated(trunc)), jacobian(k_hi));
  psi = psi.truncated(trunc);
  double resid = 0.0;
  for (int m = 0; m <= trunc; ++m) {
    if (!psi.has_term(m)) continue;
    SymTensor c = psi.term(m).value_lmul(I) - psi.term(m).value_rmul(I);
    resid = std::max(resid, c.norm());
  }
  double scale = std::max(1.0, psi.norm());
  require(resid <= tol * scale, "PsiInv does not commute with I: residual " + std::to_string(resid));
  if (commutator_residual) *commutator_residual = resid;
  return psi;
}

/// Normal potential: theta_2(X) = g(X,X), and for m >= 3
///   (N^2 + Der_I^2) theta_m = [ 4 g(PsiInv(X) X, PsiInv(X) X) ]_m,
/// resolved by the partial inverse over the exact spectrum 4*kappa*kbar; the
/// pluriharmonic kernel component must vanish (potential normalization).
inline Series potential(const CurvatureJet& jet, int trunc, double kernel_tol = 1e-9) {
  int dim = jet.dim();
  const Eigen::MatrixXd& I = jet.point().cplx();
  const Eigen::MatrixXd& g = jet.point().metric();
  Series psi = psi_inv(jet, trunc);
  Series v = apply_to_identity(psi);  // PsiInv(X) X
  Series rhs = pairing(v, v, g) * 4.0;
  Series theta(dim, ValueKind::Scalar, trunc);
  theta.set_term(metric_square_polynomial(jet.point()));
  double scale = std::max(1.0, rhs.norm());
  for (int m = 3; m <= trunc; ++m) {
    PartialInverseResult res = partial_inverse_potential(rhs.term(m), I);
    require(res.kernel_residual <= kernel_tol * scale,
            "potential: pluriharmonic residual " + std::to_string(res.kernel_residual) +
                " at degree " + std::to_string(m));
    theta.set_term(res.value);
  }
  return theta;
}

/// Riemannian distance squared to the origin in Kaehler normal coordinates:
/// dist^2(X) = g(KX, KX) as a series.
inline Series distance_sq(const CurvatureJet& jet, int trunc) {
  Series k = k_element(jet, trunc);
  return pairing(k, k, jet.point().metric());
}

/// Congruence report: the curvature-linear part of theta (resp. dist^2)
/// against the bigraded sectional curvature with the coefficient families
/// 1/(2 kappa (kappa-1) kbar (kbar-1)) and 1/(2 (kappa+kbar-1) (kappa-1) (kbar-1)).
struct CongruenceReport {
  struct Entry {
    int kappa = 0, kbar = 0;
    double theta_err = 0.0;  // relative error of the theta congruence
    double dist_err = 0.0;   // relative error of the dist^2 congruence
    double s_norm = 0.0;
  };
  std::vector<Entry> entries;
  double max_err() const {
    double m = 0;
    for (const auto& e : entries) m = std::max(m, std::max(e.theta_err, e.dist_err));
    return m;
  }
};

inline CongruenceReport congruence_check(const CurvatureJet& jet, int trunc, double eps = 1e-4) {
  const Eigen::MatrixXd& I = jet.point().cplx();
  SectionalData sec = sectional_from_jet(jet, std::min(trunc, jet.order() + 4));
  // curvature-linear parts via the symmetric difference quotient
  CurvatureJet jp = jet.scaled(eps), jm = jet.scaled(-eps);
  Series theta_lin = (potential(jp, trunc) - potential(jm, trunc)) * (1.0 / (2.0 * eps));
  Series dist_lin = (distance_sq(jp, trunc) - distance_sq(jm, trunc)) * (1.0 / (2.0 * eps));
  CongruenceReport rep;
  for (int k = 4; k <= sec.max_degree() && k <= trunc; ++k) {
    for (int kbar = 2; 2 * kbar <= k; ++kbar) {
      int kappa = k - kbar;
      CongruenceReport::Entry e;
      e.kappa = kappa;
      e.kbar = kbar;
      SymTensor s = bigrade_project(sec.S(k), kappa, kbar, I);
      e.s_norm = s.norm();
      SymTensor th = bigrade_project(theta_lin.term(k), kappa, kbar, I);
      SymTensor di = bigrade_project(dist_lin.term(k), kappa, kbar, I);
      double ct = -1.0 / (2.0 * kappa * (kappa - 1.0) * kbar * (kbar - 1.0));
      double cd = -1.0 / (2.0 * (kappa + kbar - 1.0) * (kappa - 1.0) * (kbar - 1.0));
      double den = std::max(1e-12, s.norm());
      e.theta_err = (th - s * ct).norm() / std::max(den * std::abs(ct), 1e-12);
      e.dist_err = (di - s * cd).norm() / std::max(den * std::abs(cd), 1e-12);
      rep.entries.push_back(e);
    }
  }
  return rep;
}

/// Holomorphically extended vector field, curvature-linear closed form:
/// Z^knc(X) = Z + sum_{k>=4} 1/(2^{k-3} (k-2)!) Re (nabla^{k-4}_{X-iIX,...} R)_{Z+iIZ, IX}(IX + iX).
inline Series z_knc_linear(const CurvatureJet& jet, const Eigen::VectorXd& Z, int trunc) {
  int dim = jet.dim();
  const Eigen::MatrixXd& I = jet.point().cplx();
  Series out(dim, ValueKind::Vector, trunc);
  out.set_term(SymTensor::constant(dim, Z, ValueKind::Vector));
  Eigen::VectorXd IZ = I * Z;
  using Cplx = std::complex<double>;
  for (int k = 4; k - 4 <= jet.order() && k - 2 <= trunc; ++k) {
    int nd = k - 4;   // derivative slots
    int deg = k - 2;  // polynomial degree in X
    double c = 1.0 / (std::pow(2.0, k - 3) * MonomialBasis::factorial(k - 2));
    const auto& dbasis = MonomialBasis::get(dim, nd);
    SymTensor t = SymTensor::from_diagonal(
        dim, deg, ValueKind::Vector, [&](const std::vector<int>& idx) {
          // idx = (w_1..w_nd, u, v); the complex multilinear expression is
          // contracted with A = Z + iIZ, derivative args e_w - i(Ie_w),
          // B = I e_u and C = I e_v + i e_v, and the real part is kept.
          int u = idx[nd], v = idx[nd + 1];
          Eigen::VectorXd acc_re = Eigen::VectorXd::Zero(dim);
          // expand derivative slots: subsets picking the -i(Ie_w) branch
          std::function<void(int, std::vector<int>&, Cplx)> rec = [&](int s, std::vector<int>& cur,
                                                                      Cplx coef) {
            if (s == nd) {
              int mrank = dbasis.rank_of_tuple(cur);
              for (int a = 0; a < dim; ++a) {
                Cplx ca(Z[a], IZ[a]);
                if (ca == 0.0) continue;
                for (int bp = 0; bp < dim; ++bp) {
                  if (I(bp, u) == 0.0) continue;
                  Cplx cab = coef * ca * I(bp, u);
                  for (int cp = 0; cp < dim; ++cp) {
                    Cplx cc(I(cp, v), cp == v ? 1.0 : 0.0);
                    if (cc == 0.0) continue;
                    double w = (cab * cc).real();  // only the real part is kept
                    if (w != 0.0) acc_re += w * jet.r_entry(nd, mrank, a, bp, cp);
                  }
                }
              }
              return;
            }
            int w = idx[s];
            cur.push_back(w);
            rec(s + 1, cur, coef);
            cur.pop_back();
            for (int wp = 0; wp < dim; ++wp) {
              if (I(wp, w) == 0.0) continue;
              cur.push_back(wp);
              rec(s + 1, cur, coef * Cplx(0.0, -I(wp, w)));
              cur.pop_back();
            }
          };
          std::vector<int> cur;
          rec(0, cur, Cplx(1.0, 0.0));
          return Eigen::MatrixXd(c * acc_re);
        });
    out.add_term(t);
  }
  return out;
}

/// Spencer decomposition of the normal potential: splits theta into
/// 2g + theta^crit + theta^rest, reconstructs the holomorphically extended
/// field Z^knc = Z - (1/2) cl^{-1}(pr_[1](Z . theta^crit)) and the covariant
/// derivative of the potential
///   nabla_Z theta = pr_{>=)(2,2)}(Z . theta^free) + (Z^rest theta^free),
/// the last term being the directional action of the nonconstant part of
/// Z^knc on theta^free.
struct SpencerResult {
  Series z_knc;        // vector series, constant term Z
  Series nabla_theta;  // scalar series
  Series theta_crit;
  Series theta_free;
};

inline SpencerResult spencer(const Series& theta, const Eigen::VectorXd& Z, const KahlerPoint& pt,
                             double tol = 1e-8) {
  int dim = theta.dim();
  const Eigen::MatrixXd& I = pt.cplx();
  int trunc = theta.trunc();
  SpencerResult out;
  out.theta_free = Series(dim, ValueKind::Scalar, trunc);
  out.theta_crit = Series(dim, ValueKind::Scalar, trunc);
  for (int m = 3; m <= trunc; ++m) {
    if (!theta.has_term(m)) continue;
    SymTensor t = theta.term(m);
    SymTensor free = project_ge22(t, I);
    require((t - free).norm() <= tol * std::max(1.0, t.norm()),
            "spencer: potential is not normalized (non-(2,2) part at degree " +
                std::to_string(m) + ")");
    out.theta_free.set_term(free);
    // critical part: kappa = 2 or kbar = 2 (and both >= 2)
    SymTensor crit = SymTensor::zero(dim, m, ValueKind::Scalar);
    if (m >= 4) {
      crit += bigrade_project(free, m - 2, 2, I);
      // for m = 4 the (2,2) projection already contains both sides
    }
    out.theta_crit.set_term(crit);
  }
  out.z_knc = Series(dim, ValueKind::Vector, trunc);
  out.z_knc.set_term(SymTensor::constant(dim, Z, ValueKind::Vector));
  Series z_rest(dim, ValueKind::Vector, trunc);
  for (int m = 4; m <= trunc; ++m) {
    if (!out.theta_crit.has_term(m)) continue;
    SymTensor zc = out.theta_crit.term(m).insert_slot(Z);  // degree m-1
    SymTensor p1 = project_bracket1(zc, I);
    if (p1.norm() <= 1e-13 * std::max(1.0, zc.norm())) continue;
    SymTensor field = closure_inverse(p1, pt, tol) * (-0.5);
    z_rest.add_term(field);
    out.z_knc.add_term(field);
  }
  // nabla_Z theta = pr_{>=(2,2)}(Z . theta^free) + Z^rest(theta^free)
  out.nabla_theta = Series(dim, ValueKind::Scalar, trunc);
  for (int m = 3; m <= trunc; ++m) {
    if (!out.theta_free.has_term(m)) continue;
    out.nabla_theta.add_term(project_ge22(out.theta_free.term(m).insert_slot(Z), I));
  }
  out.nabla_theta += derive_along(out.theta_free, z_rest);
  return out;
}

}  // namespace kjet

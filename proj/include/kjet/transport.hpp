#pragma once

#include "kjet/curvature.hpp"
#include "kjet/series.hpp"

namespace kjet {

/// Backward parallel transport: the unique series solution of
///   N(N+1) PhiInv = R PhiInv + N(T PhiInv),   PhiInv(0) = id,
/// where R and T are the curvature and torsion generating series. The right
/// hand side at degree m only involves lower degrees (R starts at degree 2,
/// T at degree 1).
inline Series solve_phi_inv(const CurvatureJet& jet, int trunc) {
  int dim = jet.dim();
  Series rr = curvature_series(jet, trunc);
  Series tt = torsion_series(jet, trunc);
  Series phi_inv = Series::id_endo(dim, trunc);
  for (int m = 1; m <= trunc; ++m) {
    SymTensor rhs = SymTensor::zero(dim, m, ValueKind::Endo);
    for (int i = 1; i <= m; ++i) {
      if (rr.has_term(i)) rhs += mul_terms(rr.term(i), phi_inv.term(m - i));
      if (jet.has_torsion() && tt.has_term(i))
        rhs += mul_terms(tt.term(i), phi_inv.term(m - i)) * static_cast<double>(m);
    }
    phi_inv.set_term(rhs * (1.0 / (m * (m + 1.0))));
  }
  return phi_inv;
}

/// Forward parallel transport Phi = (PhiInv)^{-1} (multiplicative inverse).
inline Series solve_phi(const CurvatureJet& jet, int trunc) {
  return mul_inverse(solve_phi_inv(jet, trunc));
}

/// Wrong sided backward transport: N(N+1) PhiMinusStar = PhiMinusStar R with
/// PhiMinusStar(0) = id. Torsion-free jets only.
inline Series solve_phi_minus_star(const CurvatureJet& jet, int trunc) {
  require(!jet.has_torsion(), "starred transport requires a torsion-free jet");
  int dim = jet.dim();
  Series rr = curvature_series(jet, trunc);
  Series pms = Series::id_endo(dim, trunc);
  for (int m = 2; m <= trunc; ++m) {
    SymTensor rhs = SymTensor::zero(dim, m, ValueKind::Endo);
    for (int i = 2; i <= m; ++i)
      if (rr.has_term(i)) rhs += mul_terms(pms.term(m - i), rr.term(i));
    pms.set_term(rhs * (1.0 / (m * (m + 1.0))));
  }
  return pms;
}

inline Series solve_phi_star(const CurvatureJet& jet, int trunc) {
  return mul_inverse(solve_phi_minus_star(jet, trunc));
}

/// Exponentially extended vector fields: Z^exp(X) = Theta(X) Z with
///   N(N-1) Theta = N((id - Phi) Phi*) + (N PhiInv) Phi Phi*,
/// Theta(0) = id and vanishing linear term (the right hand side starts at
/// degree 2). Torsion-free jets only.
inline Series solve_theta_exp(const CurvatureJet& jet, int trunc) {
  require(!jet.has_torsion(), "exponential extension requires a torsion-free jet");
  int dim = jet.dim();
  Series phi_inv = solve_phi_inv(jet, trunc);
  Series phi = mul_inverse(phi_inv);
  Series phi_star = solve_phi_star(jet, trunc);
  Series id_minus_phi = Series::id_endo(dim, trunc) - phi;
  Series rhs = mul(id_minus_phi, phi_star).number_op() +
               mul(phi_inv.number_op(), mul(phi, phi_star));
  Series theta = Series::id_endo(dim, trunc);
  for (int m = 2; m <= trunc; ++m)
    theta.set_term(rhs.term(m) * (1.0 / (m * (m - 1.0))));
  return theta;
}

}  // namespace kjet

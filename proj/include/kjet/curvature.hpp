#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "kjet/graded_ops.hpp"
#include "kjet/series.hpp"
#include "kjet/sym_tensor.hpp"

namespace kjet {

enum class JetMode { Kahler, BalancedAffine, AffineTorsion };

/// Point data for the curvature tensor and its covariant derivatives:
/// terms[k] holds (nabla^k R)_{A,B}C with the k derivative slots symmetrized
/// and stored by monomial rank, the (A,B,C) slots dense. The convention for
/// second and higher derivatives is nabla^2_{X,Y} = nabla_X nabla_Y -
/// nabla_{nabla_X Y} evaluated at the point; only the derivative-symmetric
/// part is stored, the skew part being determined by the curvature action.
class CurvatureJet {
 public:
  CurvatureJet(KahlerPoint point, int order, JetMode mode = JetMode::Kahler)
      : point_(std::move(point)), order_(order), mode_(mode) {
    int dim = point_.dim();
    require(order >= 0, "jet order must be >= 0");
    r_.resize(order + 1);
    for (int k = 0; k <= order; ++k) {
      const auto& b = MonomialBasis::get(dim, k);
      r_[k] = Eigen::MatrixXd::Zero(dim, b.size() * dim * dim * dim);
    }
  }

  const KahlerPoint& point() const { return point_; }
  int dim() const { return point_.dim(); }
  int order() const { return order_; }
  JetMode mode() const { return mode_; }
  bool has_torsion() const { return !t_.empty(); }
  int torsion_order() const { return static_cast<int>(t_.size()) - 1; }

  /// Column view of (nabla^k R)_{e_a, e_b} e_c for the derivative monomial m.
  Eigen::MatrixXd::ColXpr r_entry(int k, int m, int a, int b, int c) {
    int dim = point_.dim();
    return r_[k].col(((m * dim + a) * dim + b) * dim + c);
  }
  Eigen::VectorXd r_entry(int k, int m, int a, int b, int c) const {
    int dim = point_.dim();
    return r_[k].col(((m * dim + a) * dim + b) * dim + c);
  }

  /// (nabla^k R) with basis derivative indices (any order) and basis a,b,c.
  Eigen::VectorXd nabla_r(const std::vector<int>& derivs, int a, int b, int c) const {
    int k = static_cast<int>(derivs.size());
    require(k <= order_, "jet order too low");
    const auto& bb = MonomialBasis::get(dim(), k);
    return r_entry(k, bb.rank_of_tuple(derivs), a, b, c);
  }

  /// (nabla^k R)_{A,B}C with basis derivative indices and general vectors.
  Eigen::VectorXd nabla_r_vec(const std::vector<int>& derivs, const Eigen::VectorXd& A,
                              const Eigen::VectorXd& B, const Eigen::VectorXd& C) const {
    int d = dim();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    for (int a = 0; a < d; ++a) {
      if (A[a] == 0.0) continue;
      for (int b = 0; b < d; ++b) {
        if (B[b] == 0.0) continue;
        for (int c = 0; c < d; ++c) {
          if (C[c] == 0.0) continue;
          out += A[a] * B[b] * C[c] * nabla_r(derivs, a, b, c);
        }
      }
    }
    return out;
  }

  /// Jacobi-type endomorphism A -> R_{X,A}X for general X.
  Eigen::MatrixXd jacobi_matrix(const Eigen::VectorXd& X) const {
    int d = dim();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(d, d);
    for (int a = 0; a < d; ++a) {
      if (X[a] == 0.0) continue;
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) {
          if (X[c] == 0.0) continue;
          J.col(b) += X[a] * X[c] * nabla_r({}, a, b, c);
        }
    }
    return J;
  }

  /// R_{A,B} as an endomorphism for general A, B.
  Eigen::MatrixXd r_endo(const Eigen::VectorXd& A, const Eigen::VectorXd& B) const {
    int d = dim();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
    for (int a = 0; a < d; ++a) {
      if (A[a] == 0.0) continue;
      for (int b = 0; b < d; ++b) {
        if (B[b] == 0.0) continue;
        for (int c = 0; c < d; ++c) M.col(c) += A[a] * B[b] * nabla_r({}, a, b, c);
      }
    }
    return M;
  }

  void ensure_torsion(int order) {
    int dim = point_.dim();
    while (static_cast<int>(t_.size()) <= order) {
      int k = static_cast<int>(t_.size());
      const auto& b = MonomialBasis::get(dim, k);
      t_.push_back(Eigen::MatrixXd::Zero(dim, b.size() * dim * dim));
    }
  }

  Eigen::MatrixXd::ColXpr t_entry(int k, int m, int a, int b) {
    int dim = point_.dim();
    return t_[k].col((m * dim + a) * dim + b);
  }
  Eigen::VectorXd t_entry(int k, int m, int a, int b) const {
    int dim = point_.dim();
    return t_[k].col((m * dim + a) * dim + b);
  }

  /// Jet with every curvature/torsion entry scaled by eps.
  CurvatureJet scaled(double eps) const {
    CurvatureJet out = *this;
    for (auto& m : out.r_) m *= eps;
    for (auto& m : out.t_) m *= eps;
    return out;
  }

  /// Restriction to an I-invariant coordinate subspace (totally geodesic
  /// situations). `leak` reports the largest entry mapping outside.
  CurvatureJet restricted(const std::vector<int>& sub, double* leak = nullptr) const;

  struct ValidationReport {
    double antisym = 0.0;       // R_{A,B} + R_{B,A}
    double bianchi1 = 0.0;      // cyclic sum in (A,B,C)
    double pair_sym = 0.0;      // g(R_{A,B}C,D) - g(R_{C,D}A,B)
    double type11 = 0.0;        // R_{IA,IB} - R_{A,B}
    double bianchi2 = 0.0;      // cyclic sum in (V,A,B) of nabla R
    double torsion_antisym = 0.0;
    double scale = 1.0;
    bool pass(double tol = 1e-10) const {
      return antisym < tol * scale && bianchi1 < tol * scale && pair_sym < tol * scale &&
             type11 < tol * scale && bianchi2 < tol * scale && torsion_antisym < tol * scale;
    }
  };

  /// Residuals of the symmetry constraints appropriate for the jet mode.
  ValidationReport validate() const {
    ValidationReport rep;
    int d = dim();
    double scale = 1e-30;
    for (const auto& m : r_) scale = std::max(scale, m.cwiseAbs().maxCoeff());
    for (const auto& m : t_) scale = std::max(scale, m.cwiseAbs().maxCoeff());
    rep.scale = std::max(1.0, scale);
    const Eigen::MatrixXd& g = point_.metric();
    for (int k = 0; k <= order_; ++k) {
      const auto& bb = MonomialBasis::get(d, k);
      for (int m = 0; m < bb.size(); ++m) {
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c) {
              Eigen::VectorXd v = r_entry(k, m, a, b, c);
              rep.antisym = std::max(rep.antisym,
                                     (v + r_entry(k, m, b, a, c)).cwiseAbs().maxCoeff());
              Eigen::VectorXd cyc = v + r_entry(k, m, b, c, a) + r_entry(k, m, c, a, b);
              rep.bianchi1 = std::max(rep.bianchi1, cyc.cwiseAbs().maxCoeff());
              if (mode_ == JetMode::Kahler) {
                for (int e = 0; e < d; ++e) {
                  double lhs = (g.row(e) * v)(0);
                  double rhs = (g.row(b) * r_entry(k, m, c, e, a))(0);
                  rep.pair_sym = std::max(rep.pair_sym, std::abs(lhs - rhs));
                }
              }
            }
        if (mode_ == JetMode::Kahler || mode_ == JetMode::BalancedAffine) {
          const Eigen::MatrixXd& I = point_.cplx();
          for (int b2 = 0; b2 < d; ++b2)
            for (int c = 0; c < d; ++c) {
              // R_{I e_a, I e_b} e_c - R_{e_a, e_b} e_c over all a
              for (int a = 0; a < d; ++a) {
                Eigen::VectorXd lhs = Eigen::VectorXd::Zero(d);
                for (int ap = 0; ap < d; ++ap) {
                  if (I(ap, a) == 0.0) continue;
                  for (int bp = 0; bp < d; ++bp) {
                    if (I(bp, b2) == 0.0) continue;
                    lhs += I(ap, a) * I(bp, b2) * r_entry(k, m, ap, bp, c);
                  }
                }
                rep.type11 = std::max(
                    rep.type11, (lhs - r_entry(k, m, a, b2, c)).cwiseAbs().maxCoeff());
              }
            }
        }
      }
    }
    if (order_ >= 1) {
      for (int v = 0; v < d; ++v)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c) {
              Eigen::VectorXd cyc = nabla_r({v}, a, b, c) + nabla_r({a}, b, v, c) +
                                    nabla_r({b}, v, a, c);
              rep.bianchi2 = std::max(rep.bianchi2, cyc.cwiseAbs().maxCoeff());
            }
    }
    for (int k = 0; k < static_cast<int>(t_.size()); ++k) {
      const auto& bb = MonomialBasis::get(d, k);
      for (int m = 0; m < bb.size(); ++m)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            rep.torsion_antisym = std::max(
                rep.torsion_antisym, (t_entry(k, m, a, b) + t_entry(k, m, b, a)).cwiseAbs().maxCoeff());
    }
    return rep;
  }

 private:
  KahlerPoint point_;
  int order_;
  JetMode mode_;
  // r_[k]: dim x (n_monomials * dim^3); t_[k]: dim x (n_monomials * dim^2)
  std::vector<Eigen::MatrixXd> r_;
  std::vector<Eigen::MatrixXd> t_;
};

inline CurvatureJet CurvatureJet::restricted(const std::vector<int>& sub, double* leak) const {
  int sdim = static_cast<int>(sub.size());
  int d = dim();
  Eigen::MatrixXd gs(sdim, sdim);
  for (int i = 0; i < sdim; ++i)
    for (int j = 0; j < sdim; ++j) gs(i, j) = point_.metric()(sub[i], sub[j]);
  std::optional<Eigen::MatrixXd> Is;
  if (point_.has_cplx()) {
    Eigen::MatrixXd I(sdim, sdim);
    for (int i = 0; i < sdim; ++i)
      for (int j = 0; j < sdim; ++j) I(i, j) = point_.cplx()(sub[i], sub[j]);
    Is = I;
  }
  CurvatureJet out(KahlerPoint(gs, Is), order_, mode_);
  double worst = 0.0;
  std::vector<char> in_sub(d, 0);
  for (int s : sub) in_sub[s] = 1;
  for (int k = 0; k <= order_; ++k) {
    const auto& bsub = MonomialBasis::get(sdim, k);
    for (int m = 0; m < bsub.size(); ++m) {
      std::vector<int> tup = bsub.tuple(m);
      std::vector<int> big;
      for (int i : tup) big.push_back(sub[i]);
      const auto& bbig = MonomialBasis::get(d, k);
      int mb = bbig.rank_of_tuple(big);
      for (int a = 0; a < sdim; ++a)
        for (int b = 0; b < sdim; ++b)
          for (int c = 0; c < sdim; ++c) {
            Eigen::VectorXd v = r_entry(k, mb, sub[a], sub[b], sub[c]);
            for (int e = 0; e < d; ++e)
              if (!in_sub[e]) worst = std::max(worst, std::abs(v[e]));
            for (int e = 0; e < sdim; ++e) out.r_entry(k, m, a, b, c)[e] = v[sub[e]];
          }
    }
  }
  if (leak) *leak = worst;
  return out;
}

/// Curvature generating series: the degree-(k+2) term maps
/// Y -> (1/k!) (nabla^k_{X..X} R)_{X,Y} X.
inline Series curvature_series(const CurvatureJet& jet, int trunc) {
  int dim = jet.dim();
  Series out(dim, ValueKind::Endo, trunc);
  for (int k = 0; k <= jet.order() && k + 2 <= trunc; ++k) {
    double c = 1.0 / MonomialBasis::factorial(k);
    SymTensor t = SymTensor::from_diagonal(
        dim, k + 2, ValueKind::Endo, [&](const std::vector<int>& idx) {
          // idx = (derivs..., a, c); endo columns indexed by the Y slot
          std::vector<int> derivs(idx.begin(), idx.end() - 2);
          int a = idx[idx.size() - 2], cc = idx[idx.size() - 1];
          Eigen::MatrixXd M(dim, dim);
          for (int y = 0; y < dim; ++y) M.col(y) = c * jet.nabla_r(derivs, a, y, cc);
          return M;
        });
    out.set_term(std::move(t));
  }
  return out;
}

/// Torsion generating series: the degree-(k+1) term maps
/// Y -> (1/k!) (nabla^k_{X..X} T)(X, Y).
inline Series torsion_series(const CurvatureJet& jet, int trunc) {
  int dim = jet.dim();
  Series out(dim, ValueKind::Endo, trunc);
  if (!jet.has_torsion()) return out;
  for (int k = 0; k <= jet.torsion_order() && k + 1 <= trunc; ++k) {
    double c = 1.0 / MonomialBasis::factorial(k);
    SymTensor t = SymTensor::from_diagonal(
        dim, k + 1, ValueKind::Endo, [&](const std::vector<int>& idx) {
          std::vector<int> derivs(idx.begin(), idx.end() - 1);
          int a = idx.back();
          const auto& bb = MonomialBasis::get(dim, k);
          int m = bb.rank_of_tuple(derivs);
          Eigen::MatrixXd M(dim, dim);
          for (int y = 0; y < dim; ++y) M.col(y) = c * jet.t_entry(k, m, a, y);
          return M;
        });
    out.set_term(std::move(t));
  }
  return out;
}

/// Higher holomorphic sectional curvature tensors S_k, k >= 4, with
/// S_k(X) = (1/(k-4)!) g((nabla^{k-4}_{X..X} R)_{X,IX} IX, X) as polynomials.
struct SectionalData {
  std::vector<SymTensor> s;  // s[j] has degree j+4
  int max_degree() const { return static_cast<int>(s.size()) + 3; }
  const SymTensor& S(int k) const { return s.at(k - 4); }
};

inline SectionalData sectional_from_jet(const CurvatureJet& jet, int max_degree) {
  require(max_degree >= 4, "sectional data starts at degree 4");
  require(jet.order() >= max_degree - 4, "insufficient jet order");
  int dim = jet.dim();
  const Eigen::MatrixXd& I = jet.point().cplx();
  const Eigen::MatrixXd& g = jet.point().metric();
  SectionalData out;
  for (int k = 4; k <= max_degree; ++k) {
    double c = 1.0 / MonomialBasis::factorial(k - 4);
    out.s.push_back(SymTensor::from_diagonal(
        dim, k, ValueKind::Scalar, [&](const std::vector<int>& idx) {
          std::vector<int> derivs(idx.begin(), idx.end() - 4);
          int a = idx[k - 4], b = idx[k - 3], cc = idx[k - 2], dd = idx[k - 1];
          // g((nabla^{k-4}R)_{e_a, I e_b} I e_c, e_d)
          Eigen::VectorXd val = Eigen::VectorXd::Zero(dim);
          for (int bp = 0; bp < dim; ++bp) {
            if (I(bp, b) == 0.0) continue;
            for (int cp = 0; cp < dim; ++cp) {
              if (I(cp, cc) == 0.0) continue;
              val += I(bp, b) * I(cp, cc) * jet.nabla_r(derivs, a, bp, cp);
            }
          }
          Eigen::MatrixXd r(1, 1);
          r(0, 0) = c * (g.row(dd) * val)(0);
          return r;
        }));
  }
  return out;
}

/// Fully symmetric degree-4 holomorphic sectional curvature tensor via the
/// 8(g(R_{X,IY}IU,V) + g(R_{X,IU}IV,Y) + g(R_{X,IV}IY,U)) formula.
inline SymTensor sectional_s4_symmetrized(const CurvatureJet& jet) {
  int dim = jet.dim();
  const Eigen::MatrixXd& I = jet.point().cplx();
  const Eigen::MatrixXd& g = jet.point().metric();
  auto term = [&](int x, int y, int u, int v) {
    // g(R_{e_x, I e_y} I e_u, e_v)
    double acc = 0.0;
    for (int yp = 0; yp < dim; ++yp) {
      if (I(yp, y) == 0.0) continue;
      for (int up = 0; up < dim; ++up) {
        if (I(up, u) == 0.0) continue;
        acc += I(yp, y) * I(up, u) * (g.row(v) * jet.nabla_r({}, x, yp, up))(0);
      }
    }
    return acc;
  };
  return SymTensor::from_full(dim, 4, ValueKind::Scalar, [&](const std::vector<int>& idx) {
    Eigen::MatrixXd r(1, 1);
    r(0, 0) = 8.0 * (term(idx[0], idx[1], idx[2], idx[3]) + term(idx[0], idx[2], idx[3], idx[1]) +
                     term(idx[0], idx[3], idx[1], idx[2]));
    return r;
  });
}

/// Reconstructs the curvature tensor from the symmetric S4 tensor:
/// g(R_{X,Y}U, V) = (S(X,IY,IU,V) - S(X,IY,U,IV)) / 32.
inline CurvatureJet reconstruct_R(const SymTensor& s4, const KahlerPoint& pt) {
  require(s4.degree() == 4 && s4.kind() == ValueKind::Scalar, "S4 must be a scalar quartic");
  const Eigen::MatrixXd& I = pt.cplx();
  int dim = pt.dim();
  SymTensor d1 = der_I(s4, I);
  require(d1.norm() < 1e-8 * std::max(1.0, s4.norm()), "reconstruct_R: Der_I S4 != 0");
  CurvatureJet jet(pt, 0);
  Eigen::MatrixXd ginv = pt.metric().inverse();
  std::vector<Eigen::VectorXd> basis(dim);
  for (int i = 0; i < dim; ++i) basis[i] = Eigen::VectorXd::Unit(dim, i);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      for (int c = 0; c < dim; ++c) {
        Eigen::VectorXd covec(dim);
        for (int e = 0; e < dim; ++e) {
          double s1 = s4.eval({basis[a], I * basis[b], I * basis[c], basis[e]})(0, 0);
          double s2 = s4.eval({basis[a], I * basis[b], basis[c], I * basis[e]})(0, 0);
          covec[e] = (s1 - s2) / 32.0;
        }
        jet.r_entry(0, 0, a, b, c) = ginv * covec;
      }
  return jet;
}

/// Reconstructs nabla R from the degree-5 sectional tensor:
/// g((nabla_X R)_{Y,Z}U, V) = (S5(X,Y,IZ,IU,V) - S5(X,Y,IZ,U,IV)
///                             + S5(X,IY,Z,U,IV) - S5(X,IY,Z,IU,V)) / 192.
/// Returns the dense 5-slot array flattened as [x][y][z][u] -> vector.
inline std::vector<Eigen::MatrixXd> reconstruct_gradR(const SymTensor& s5, const KahlerPoint& pt) {
  require(s5.degree() == 5 && s5.kind() == ValueKind::Scalar, "S5 must be a scalar quintic");
  int dim = pt.dim();
  const Eigen::MatrixXd& I = pt.cplx();
  Eigen::MatrixXd ginv = pt.metric().inverse();
  std::vector<Eigen::VectorXd> e(dim);
  for (int i = 0; i < dim; ++i) e[i] = Eigen::VectorXd::Unit(dim, i);
  std::vector<Eigen::MatrixXd> out(dim, Eigen::MatrixXd::Zero(dim, dim * dim * dim));
  for (int x = 0; x < dim; ++x)
    for (int y = 0; y < dim; ++y)
      for (int z = 0; z < dim; ++z)
        for (int u = 0; u < dim; ++u) {
          Eigen::VectorXd covec(dim);
          for (int v = 0; v < dim; ++v) {
            double t1 = s5.eval({e[x], e[y], I * e[z], I * e[u], e[v]})(0, 0);
            double t2 = s5.eval({e[x], e[y], I * e[z], e[u], I * e[v]})(0, 0);
            double t3 = s5.eval({e[x], I * e[y], e[z], e[u], I * e[v]})(0, 0);
            double t4 = s5.eval({e[x], I * e[y], e[z], I * e[u], e[v]})(0, 0);
            covec[v] = (t1 - t2 + t3 - t4) / 192.0;
          }
          out[x].col((y * dim + z) * dim + u) = ginv * covec;
        }
  return out;
}

/// Skew part of the second covariant derivative from the curvature action:
/// (nabla^2_{U,V} R - nabla^2_{V,U} R)_{A,B}C = R_{U,V}(R_{A,B}C)
///   - R_{R_{U,V}A, B}C - R_{A, R_{U,V}B}C - R_{A,B}(R_{U,V}C).
inline Eigen::VectorXd skew_nabla2_r(const CurvatureJet& jet, const Eigen::VectorXd& U,
                                     const Eigen::VectorXd& V, const Eigen::VectorXd& A,
                                     const Eigen::VectorXd& B, const Eigen::VectorXd& C) {
  Eigen::MatrixXd Ruv = jet.r_endo(U, V);
  return Ruv * jet.nabla_r_vec({}, A, B, C) - jet.nabla_r_vec({}, Ruv * A, B, C) -
         jet.nabla_r_vec({}, A, Ruv * B, C) - jet.nabla_r_vec({}, A, B, Ruv * C);
}

/// Residual of the fundamental commutator identity:
/// 3 [R_{X,.}X, R_{IX,.}IX] A  minus the four skew-nabla^2 terms.
inline Eigen::VectorXd fcc_residual(const CurvatureJet& jet, const Eigen::VectorXd& X,
                                    const Eigen::VectorXd& A) {
  const Eigen::MatrixXd& I = jet.point().cplx();
  Eigen::VectorXd IX = I * X;
  Eigen::MatrixXd adX = jet.jacobi_matrix(X);
  Eigen::MatrixXd adIX = jet.jacobi_matrix(IX);
  Eigen::VectorXd lhs = 3.0 * (adX * (adIX * A) - adIX * (adX * A));
  Eigen::VectorXd rhs = 0.5 * skew_nabla2_r(jet, X, IX, X, IX, A) +
                        skew_nabla2_r(jet, X, IX, A, X, IX) +
                        skew_nabla2_r(jet, A, X, X, IX, IX) +
                        skew_nabla2_r(jet, A, IX, X, IX, X);
  return lhs - rhs;
}

// ---------------------------------------------------------------------------
// Synthetic jets: random tensors projected onto the symmetry constraints.
// ---------------------------------------------------------------------------

namespace detail {

/// Dense tensor with k derivative slots plus (a,b,c,d) slots; the last slot is
/// the metric-lowered value. Helper for constraint projections.
struct DenseCurv {
  int dim, k;
  std::vector<double> v;  // index ((...((d1*dim+d2)...)*dim+a)*dim+b)*dim+c)*dim+d
  double& at(const std::vector<int>& idx) {
    size_t flat = 0;
    for (int i : idx) flat = flat * dim + i;
    return v[flat];
  }
  double at(const std::vector<int>& idx) const {
    size_t flat = 0;
    for (int i : idx) flat = flat * dim + i;
    return v[flat];
  }
};

template <typename F>
void for_all_indices(int dim, int slots, F&& fn) {
  std::vector<int> idx(slots, 0);
  while (true) {
    fn(idx);
    int p = slots - 1;
    while (p >= 0 && ++idx[p] == dim) idx[p--] = 0;
    if (p < 0) break;
  }
}

}  // namespace detail

/// Random Kaehler-symmetric jet: draws normal entries and cyclically projects
/// onto the linear constraints (derivative-slot symmetry, antisymmetry,
/// first/second Bianchi including its differentiated linearization, pair
/// symmetry, (1,1)-type) until stationary. Uses the standard metric and
/// complex structure.
inline CurvatureJet synthetic_kahler_jet(int n_complex, int order, unsigned seed) {
  KahlerPoint pt = KahlerPoint::standard(n_complex);
  int dim = pt.dim();
  const Eigen::MatrixXd& I = pt.cplx();
  CurvatureJet jet(pt, order);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);

  for (int k = 0; k <= order; ++k) {
    int slots = k + 4;
    detail::DenseCurv T{dim, k, std::vector<double>(static_cast<size_t>(std::pow(dim, slots)))};
    for (auto& x : T.v) x = dist(rng);

    auto sym_derivs = [&](detail::DenseCurv& A) {
      if (k < 2) return;
      detail::DenseCurv B = A;
      detail::for_all_indices(dim, slots, [&](const std::vector<int>& idx) {
        std::vector<int> ds(idx.begin(), idx.begin() + k);
        std::sort(ds.begin(), ds.end());
        double acc = 0.0;
        int count = 0;
        do {
          std::vector<int> full = idx;
          std::copy(ds.begin(), ds.end(), full.begin());
          acc += A.at(full);
          ++count;
        } while (std::next_permutation(ds.begin(), ds.end()));
        B.at(idx) = acc / count;
      });
      A = B;
    };

    auto antisym_ab = [&](detail::DenseCurv& A) {
      detail::DenseCurv B = A;
      detail::for_all_indices(dim, slots, [&](const std::vector<int>& idx) {
        std::vector<int> sw = idx;
        std::swap(sw[k], sw[k + 1]);
        B.at(idx) = 0.5 * (A.at(idx) - A.at(sw));
      });
      A = B;
    };

    auto bianchi1 = [&](detail::DenseCurv& A) {
      detail::DenseCurv B = A;
      detail::for_all_indices(dim, slots, [&](const std::vector<int>& idx) {
        std::vector<int> c1 = idx, c2 = idx;
        // cyclic permutations of (a,b,c)
        c1[k] = idx[k + 1]; c1[k + 1] = idx[k + 2]; c1[k + 2] = idx[k];
        c2[k] = idx[k + 2]; c2[k + 1] = idx[k]; c2[k + 2] = idx[k + 1];
        B.at(idx) = A.at(idx) - (A.at(idx) + A.at(c1) + A.at(c2)) / 3.0;
      });
      A = B;
    };

    auto pair_sym = [&](detail::DenseCurv& A) {
      detail::DenseCurv B = A;
      detail::for_all_indices(dim, slots, [&](const std::vector<int>& idx) {
        std::vector<int> sw = idx;
        std::swap(sw[k], sw[k + 2]);
        std::swap(sw[k + 1], sw[k + 3]);
        B.at(idx) = 0.5 * (A.at(idx) + A.at(sw));
      });
      A = B;
    };

    auto type11 = [&](detail::DenseCurv& A) {
      // average with the (IA, IB) substitution; I is a signed permutation for
      // the standard complex structure, keeping this an orthogonal projection.
      detail::DenseCurv B = A;
      detail::for_all_indices(dim, slots, [&](const std::vector<int>& idx) {
        double acc = 0.0;
        for (int ap = 0; ap < dim; ++ap) {
          if (I(ap, idx[k]) == 0.0) continue;
          for (int bp = 0; bp < dim; ++bp) {
            if (I(bp, idx[k + 1]) == 0.0) continue;
            std::vector<int> sub = idx;
            sub[k] = ap;
            sub[k + 1] = bp;
            acc += I(ap, idx[k]) * I(bp, idx[k + 1]) * A.at(sub);
          }
        }
        B.at(idx) = 0.5 * (A.at(idx) + acc);
      });
      A = B;
    };

    auto bianchi2 = [&](detail::DenseCurv& A) {
      // cyclic sum over (last derivative slot, a, b); valid linearization of
      // the differentiated second Bianchi identity for k >= 1.
      if (k < 1) return;
      detail::DenseCurv B = A;
      detail::for_all_indices(dim, slots, [&](const std::vector<int>& idx) {
        std::vector<int> c1 = idx, c2 = idx;
        int q = k - 1;  // last derivative slot
        c1[q] = idx[k]; c1[k] = idx[k + 1]; c1[k + 1] = idx[q];
        c2[q] = idx[k + 1]; c2[k] = idx[q]; c2[k + 1] = idx[k];
        B.at(idx) = A.at(idx) - (A.at(idx) + A.at(c1) + A.at(c2)) / 3.0;
      });
      A = B;
    };

    double change = 1.0;
    for (int it = 0; it < 400 && change > 1e-14; ++it) {
      std::vector<double> before = T.v;
      sym_derivs(T);
      antisym_ab(T);
      bianchi1(T);
      pair_sym(T);
      type11(T);
      bianchi2(T);
      change = 0.0;
      for (size_t i = 0; i < T.v.size(); ++i) change = std::max(change, std::abs(T.v[i] - before[i]));
    }

    // raise the last index with the (identity) metric and store
    const auto& bb = MonomialBasis::get(dim, k);
    for (int m = 0; m < bb.size(); ++m) {
      std::vector<int> derivs = bb.tuple(m);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          for (int c = 0; c < dim; ++c) {
            Eigen::VectorXd val(dim);
            std::vector<int> idx = derivs;
            idx.push_back(a);
            idx.push_back(b);
            idx.push_back(c);
            idx.push_back(0);
            for (int e = 0; e < dim; ++e) {
              idx.back() = e;
              val[e] = T.at(idx);
            }
            jet.r_entry(k, m, a, b, c) = val;
          }
    }
  }
  return jet;
}

/// Flat jet (all curvature zero) on the standard Kaehler point.
inline CurvatureJet flat_jet(int n_complex, int order = 0) {
  return CurvatureJet(KahlerPoint::standard(n_complex), order);
}

}  // namespace kjet

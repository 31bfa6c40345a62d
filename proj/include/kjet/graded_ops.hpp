#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "kjet/series.hpp"
#include "kjet/sym_tensor.hpp"

namespace kjet {

/// Der_I: derivation extending the complex structure over the argument slots,
/// (Der_I t)(X_1,...,X_k) = sum_i t(X_1,...,IX_i,...,X_k). On polynomials this
/// is the directional derivative along the linear field X -> IX.
inline SymTensor der_I(const SymTensor& t, const Eigen::MatrixXd& I) {
  SymTensor out = SymTensor::zero(t.dim(), t.degree(), t.kind());
  if (t.degree() == 0) return out;
  int dim = t.dim();
  const auto& b = t.basis();
  for (int m = 0; m < b.size(); ++m) {
    if (t.raw().col(m).cwiseAbs().maxCoeff() == 0.0) continue;
    const auto& a = b.exponent(m);
    std::vector<int> beta(a);
    for (int v = 0; v < dim; ++v) {
      if (a[v] == 0) continue;
      --beta[v];
      for (int w = 0; w < dim; ++w) {
        // x_w * d/dx_v with weight I(v,w): field (IX)_v = sum_w I_{v,w} x_w
        if (I(v, w) == 0.0) continue;
        ++beta[w];
        out.raw().col(b.rank(beta)) += t.raw().col(m) * (a[v] * I(v, w));
        --beta[w];
      }
      ++beta[v];
    }
  }
  return out;
}

/// Weight operator: I acting on the value minus Der_I on the arguments.
/// Endomorphism values use the commutator [I, .] on the value.
inline SymTensor weight(const SymTensor& t, const Eigen::MatrixXd& I) {
  require(t.kind() != ValueKind::Scalar, "weight needs a value slot");
  SymTensor out = t.value_lmul(I);
  if (t.kind() == ValueKind::Endo) out -= t.value_rmul(I);
  out -= der_I(t, I);
  return out;
}

/// Der_I (x) I on vector-valued tensors: value I applied after Der_I. Its
/// spectrum on degree-m tensors is {2j - m : j = 0..m}; the kernel of
/// N (x) id + Der_I (x) I is the space of real parts of holomorphic fields.
inline SymTensor der_I_tensor_I(const SymTensor& t, const Eigen::MatrixXd& I) {
  require(t.kind() == ValueKind::Vector, "Der_I (x) I acts on vector-valued tensors");
  return der_I(t, I).value_lmul(I);
}

namespace detail {

/// Applies the Lagrange spectral projector of `op` (diagonalizable with the
/// given eigenvalues) onto eigenvalue lambda[j], by running the product
/// prod_{l != j} (op - lambda_l)/(lambda_j - lambda_l) on t.
template <typename Op>
SymTensor spectral_project(const SymTensor& t, const Op& op, const std::vector<double>& lambdas,
                           int j) {
  SymTensor acc = t;
  for (int l = 0; l < static_cast<int>(lambdas.size()); ++l) {
    if (l == j) continue;
    acc = (op(acc) - acc * lambdas[l]) * (1.0 / (lambdas[j] - lambdas[l]));
  }
  return acc;
}

}  // namespace detail

/// Real bigraded projection of a scalar tensor onto (kappa, kbar) + conjugate:
/// the eigenspace of Der_I^2 for -(kappa-kbar)^2 inside degree kappa+kbar.
inline SymTensor bigrade_project(const SymTensor& t, int kappa, int kbar,
                                 const Eigen::MatrixXd& I) {
  require(t.kind() == ValueKind::Scalar, "bigrade_project acts on scalar tensors");
  require(kappa >= 0 && kbar >= 0 && kappa + kbar == t.degree(),
          "bigrade_project: kappa + kbar must equal the degree");
  int k = t.degree();
  auto der2 = [&](const SymTensor& x) { return der_I(der_I(x, I), I); };
  std::vector<double> lambdas;
  for (int j = 0; 2 * j <= k; ++j) lambdas.push_back(-static_cast<double>((k - 2 * j) * (k - 2 * j)));
  int j = std::min(kappa, kbar);
  return detail::spectral_project(t, der2, lambdas, j);
}

/// Keeps the bigraded parts with kappa >= 2 and kbar >= 2.
inline SymTensor project_ge22(const SymTensor& t, const Eigen::MatrixXd& I) {
  SymTensor out = SymTensor::zero(t.dim(), t.degree(), ValueKind::Scalar);
  int k = t.degree();
  for (int j = 2; 2 * j <= k; ++j) out += bigrade_project(t, k - j, j, I);
  return out;
}

/// Keeps the bigraded parts with kappa = 1 or kbar = 1 (polynomials linear in
/// the holomorphic or antiholomorphic coordinates).
inline SymTensor project_bracket1(const SymTensor& t, const Eigen::MatrixXd& I) {
  int k = t.degree();
  if (k < 1) return SymTensor::zero(t.dim(), t.degree(), ValueKind::Scalar);
  return bigrade_project(t, k - 1, 1, I);
}

/// Result of a guarded partial inversion: the solution on the complement of
/// the kernel plus the norm of the kernel component of the input.
struct PartialInverseResult {
  SymTensor value;
  double kernel_residual = 0.0;
};

/// Partial (Moore-Penrose) inverse of N (x) id + Der_I (x) I on vector-valued
/// degree-m tensors, realized as a polynomial in Der_I (x) I through the exact
/// integer spectrum {2j : j = 0..m}; the kernel (j = 0) is the space of real
/// parts of holomorphic fields and its component of t is reported, not mapped.
inline PartialInverseResult partial_inverse_NI(const SymTensor& t, const Eigen::MatrixXd& I) {
  int m = t.degree();
  auto op = [&](const SymTensor& x) { return der_I_tensor_I(x, I); };
  std::vector<double> lambdas;
  for (int j = 0; j <= m; ++j) lambdas.push_back(static_cast<double>(2 * j - m));
  PartialInverseResult res;
  res.value = SymTensor::zero(t.dim(), m, ValueKind::Vector);
  for (int j = 0; j <= m; ++j) {
    SymTensor pj = detail::spectral_project(t, op, lambdas, j);
    if (2 * j == 0)
      res.kernel_residual = pj.norm();
    else
      res.value += pj * (1.0 / (2.0 * j));
  }
  return res;
}

/// Projector onto the kernel of N (x) id + Der_I (x) I (real parts of
/// holomorphic fields of degree m).
inline SymTensor holomorphic_part(const SymTensor& t, const Eigen::MatrixXd& I) {
  int m = t.degree();
  auto op = [&](const SymTensor& x) { return der_I_tensor_I(x, I); };
  std::vector<double> lambdas;
  for (int j = 0; j <= m; ++j) lambdas.push_back(static_cast<double>(2 * j - m));
  return detail::spectral_project(t, op, lambdas, 0);
}

/// Partial inverse of N^2 + Der_I^2 on scalar degree-m tensors; eigenvalue on
/// the (kappa, kbar) component is 4*kappa*kbar, kernel = pluriharmonic part.
inline PartialInverseResult partial_inverse_potential(const SymTensor& t,
                                                      const Eigen::MatrixXd& I) {
  int m = t.degree();
  auto der2 = [&](const SymTensor& x) { return der_I(der_I(x, I), I); };
  std::vector<double> lambdas;
  for (int j = 0; 2 * j <= m; ++j) lambdas.push_back(-static_cast<double>((m - 2 * j) * (m - 2 * j)));
  PartialInverseResult res;
  res.value = SymTensor::zero(t.dim(), m, ValueKind::Scalar);
  for (int j = 0; 2 * j <= m; ++j) {
    SymTensor pj = detail::spectral_project(t, der2, lambdas, j);
    double ev = 4.0 * j * (m - j);
    if (ev == 0.0)
      res.kernel_residual = pj.norm();
    else
      res.value += pj * (1.0 / ev);
  }
  return res;
}

/// Basis of the real parts of holomorphic polynomial vector fields of degree
/// k: Re(z^alpha w) and Im(z^alpha w) over holomorphic coordinates z and
/// holomorphic value directions w built from an adapted basis.
inline std::vector<SymTensor> holomorphic_field_basis(const KahlerPoint& pt, int k) {
  int dim = pt.dim();
  int n = dim / 2;
  const Eigen::MatrixXd& B = pt.adapted_basis();
  // holomorphic coordinate functionals zeta_j = g(u_j, .) + i g(v_j, .)
  std::vector<Eigen::VectorXd> re(n), im(n);
  for (int j = 0; j < n; ++j) {
    re[j] = pt.metric() * B.col(2 * j);
    im[j] = pt.metric() * B.col(2 * j + 1);
  }
  const auto& nb = MonomialBasis::get(n, k);  // monomials in the n complex coordinates
  std::vector<SymTensor> out;
  const auto& basis = MonomialBasis::get(dim, k);
  for (int m = 0; m < nb.size(); ++m) {
    std::vector<int> zalpha = nb.tuple(m);
    for (int j = 0; j < n; ++j) {
      // values w = u_j - i v_j (holomorphic direction), and i*w
      for (int phase = 0; phase < 2; ++phase) {
        SymTensor t = SymTensor::zero(dim, k, ValueKind::Vector);
        // expand prod_r zeta_{zalpha[r]} over the real monomial basis
        // accumulate complex coefficients of the scalar polynomial
        std::vector<std::complex<double>> poly(basis.size(), 0.0);
        std::function<void(int, int, std::complex<double>, std::vector<int>&)> expand =
            [&](int r, int start, std::complex<double> c, std::vector<int>& expo) {
              if (r == k) {
                poly[basis.rank(expo)] += c;
                return;
              }
              int zj = zalpha[r];
              for (int v = 0; v < dim; ++v) {
                std::complex<double> cv(re[zj][v], im[zj][v]);
                if (std::abs(cv) == 0.0) continue;
                ++expo[v];
                expand(r + 1, 0, c * cv, expo);
                --expo[v];
              }
            };
        std::vector<int> expo(dim, 0);
        expand(0, 0, phase == 0 ? std::complex<double>(1, 0) : std::complex<double>(0, 1), expo);
        Eigen::VectorXd wu = B.col(2 * j), wv = B.col(2 * j + 1);
        for (int mm = 0; mm < basis.size(); ++mm) {
          // Re(poly * (u - i v)) = Re(poly) u + Im(poly) v
          t.raw().col(mm) = poly[mm].real() * wu + poly[mm].imag() * wv;
        }
        if (t.norm() > 0) out.push_back(t);
      }
    }
  }
  return out;
}

/// Closure map from vector fields to polynomials: (cl Z)(X) = g(Z(X), X).
inline SymTensor closure(const SymTensor& z, const Eigen::MatrixXd& metric) {
  require(z.kind() == ValueKind::Vector, "closure needs a vector-valued tensor");
  int dim = z.dim();
  SymTensor out = SymTensor::zero(dim, z.degree() + 1, ValueKind::Scalar);
  const auto& bin = z.basis();
  const auto& bout = out.basis();
  for (int m = 0; m < bin.size(); ++m) {
    Eigen::VectorXd gz = metric * z.raw().col(m);
    const auto& a = bin.exponent(m);
    std::vector<int> beta(a);
    for (int v = 0; v < dim; ++v) {
      if (gz[v] == 0.0) continue;
      ++beta[v];
      out.raw()(0, bout.rank(beta)) += gz[v];
      --beta[v];
    }
  }
  return out;
}

/// Inverts the closure map on real parts of holomorphic fields: solves
/// cl Z = p for Z of degree p.degree()-1 by least squares over the
/// holomorphic field basis. Throws if the residual exceeds `tol` (the input
/// is then not a closure of a holomorphic field).
inline SymTensor closure_inverse(const SymTensor& p, const KahlerPoint& pt, double tol = 1e-9) {
  require(p.kind() == ValueKind::Scalar, "closure_inverse needs a scalar polynomial");
  require(p.degree() >= 3, "closure_inverse: degree >= 3 required (no linear ambiguity)");
  int k = p.degree() - 1;
  std::vector<SymTensor> fields = holomorphic_field_basis(pt, k);
  const auto& bout = MonomialBasis::get(pt.dim(), p.degree());
  Eigen::MatrixXd A(bout.size(), fields.size());
  for (int c = 0; c < static_cast<int>(fields.size()); ++c)
    A.col(c) = closure(fields[c], pt.metric()).raw().row(0).transpose();
  Eigen::VectorXd rhs = p.raw().row(0).transpose();
  Eigen::VectorXd coef = A.colPivHouseholderQr().solve(rhs);
  double resid = (A * coef - rhs).norm();
  require(resid <= tol * std::max(1.0, rhs.norm()),
          "closure_inverse: residual " + std::to_string(resid) +
              " -- input is not the closure of a holomorphic field");
  SymTensor z = SymTensor::zero(pt.dim(), k, ValueKind::Vector);
  for (int c = 0; c < static_cast<int>(fields.size()); ++c) z += fields[c] * coef[c];
  return z;
}

// ---------------------------------------------------------------------------
// Assembled operators on small coefficient spaces.
// ---------------------------------------------------------------------------

/// A linear operator on the coefficient space of SymTensors of one degree and
/// kind, assembled as an explicit matrix (desk-scale dimensions only).
struct GradedOperator {
  int dim = 0;
  int degree = 0;
  ValueKind kind = ValueKind::Scalar;
  Eigen::MatrixXd matrix;
};

/// Coordinates are taken orthonormal for the natural inner product of
/// symmetric forms inside the full tensor power (monomial coefficient times
/// sqrt(k! * prod alpha!)); self-adjoint graded operators then assemble to
/// symmetric matrices and SVD pseudo-inverses agree with the spectral ones.
inline double monomial_weight(const MonomialBasis& b, int m) {
  return MonomialBasis::factorial(b.degree()) / std::sqrt(b.multinomial(m));
}

inline Eigen::VectorXd tensor_to_vec(const SymTensor& t) {
  Eigen::VectorXd v(t.raw().size());
  int rows = static_cast<int>(t.raw().rows());
  const auto& b = t.basis();
  for (int c = 0; c < t.raw().cols(); ++c)
    v.segment(c * rows, rows) = t.raw().col(c) * monomial_weight(b, c);
  return v;
}

inline SymTensor vec_to_tensor(const Eigen::VectorXd& v, int dim, int degree, ValueKind kind) {
  SymTensor t = SymTensor::zero(dim, degree, kind);
  int rows = static_cast<int>(t.raw().rows());
  const auto& b = t.basis();
  for (int c = 0; c < t.raw().cols(); ++c)
    t.raw().col(c) = v.segment(c * rows, rows) / monomial_weight(b, c);
  return t;
}

/// Assembles any tensor map as a matrix by applying it to coefficient basis
/// vectors. fn must preserve (dim, degree, kind).
inline GradedOperator assemble_operator(int dim, int degree, ValueKind kind,
                                        const std::function<SymTensor(const SymTensor&)>& fn) {
  SymTensor probe = SymTensor::zero(dim, degree, kind);
  int n = static_cast<int>(probe.raw().size());
  GradedOperator op{dim, degree, kind, Eigen::MatrixXd::Zero(n, n)};
  for (int c = 0; c < n; ++c) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[c] = 1.0;
    op.matrix.col(c) = tensor_to_vec(fn(vec_to_tensor(e, dim, degree, kind)));
  }
  return op;
}

/// Moore-Penrose pseudo-inverse via SVD (small matrices).
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A, double tol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd s = svd.singularValues();
  double cut = tol * s.maxCoeff();
  Eigen::VectorXd si = Eigen::VectorXd::Zero(s.size());
  for (int i = 0; i < s.size(); ++i) si[i] = s[i] > cut ? 1.0 / s[i] : 0.0;
  return svd.matrixV() * si.asDiagonal() * svd.matrixU().transpose();
}

// ---------------------------------------------------------------------------
// Special alternating forms and the boundary operators L, L*.
// ---------------------------------------------------------------------------

/// An element of Sym^k T* (x) Lambda^d T* (x) T: for every d-combination of
/// basis indices a vector-valued polynomial coefficient block. Combinations
/// are enumerated in lexicographic order.
class PolyForm {
 public:
  PolyForm(int dim, int poly_deg, int form_deg)
      : dim_(dim), poly_deg_(poly_deg), form_deg_(form_deg), combs_(combinations(dim, form_deg)) {
    const auto& b = MonomialBasis::get(dim, poly_deg);
    data_.assign(combs_.size(), Eigen::MatrixXd::Zero(dim, b.size()));
  }

  static std::vector<std::vector<int>> combinations(int dim, int d) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int start) {
      if (static_cast<int>(cur.size()) == d) {
        out.push_back(cur);
        return;
      }
      for (int v = start; v < dim; ++v) {
        cur.push_back(v);
        rec(v + 1);
        cur.pop_back();
      }
    };
    rec(0);
    return out;
  }

  int dim() const { return dim_; }
  int poly_deg() const { return poly_deg_; }
  int form_deg() const { return form_deg_; }
  int n_combs() const { return static_cast<int>(combs_.size()); }
  const std::vector<int>& comb(int c) const { return combs_[c]; }

  int comb_rank(const std::vector<int>& c) const {
    for (int i = 0; i < n_combs(); ++i)
      if (combs_[i] == c) return i;
    throw std::invalid_argument("PolyForm: combination not found");
  }

  Eigen::MatrixXd& block(int c) { return data_[c]; }
  const Eigen::MatrixXd& block(int c) const { return data_[c]; }

  double norm() const {
    double n2 = 0;
    for (const auto& blk : data_) n2 += blk.squaredNorm();
    return std::sqrt(n2);
  }

  PolyForm& operator+=(const PolyForm& o) {
    for (int c = 0; c < n_combs(); ++c) data_[c] += o.data_[c];
    return *this;
  }
  PolyForm& operator*=(double s) {
    for (auto& blk : data_) blk *= s;
    return *this;
  }
  friend PolyForm operator+(PolyForm a, const PolyForm& b) { return a += b; }
  friend PolyForm operator*(PolyForm a, double s) { return a *= s; }
  friend PolyForm operator-(PolyForm a, const PolyForm& b) { return a += b * (-1.0); }

  Eigen::VectorXd to_vec() const {
    const auto& b = MonomialBasis::get(dim_, poly_deg_);
    int bs = static_cast<int>(data_[0].size());
    Eigen::VectorXd v(bs * n_combs());
    for (int c = 0; c < n_combs(); ++c)
      for (int m = 0; m < b.size(); ++m)
        v.segment(c * bs + m * dim_, dim_) = data_[c].col(m) * monomial_weight(b, m);
    return v;
  }

  static PolyForm from_vec(const Eigen::VectorXd& v, int dim, int poly_deg, int form_deg) {
    PolyForm f(dim, poly_deg, form_deg);
    const auto& b = MonomialBasis::get(dim, poly_deg);
    int bs = static_cast<int>(f.data_[0].size());
    for (int c = 0; c < f.n_combs(); ++c)
      for (int m = 0; m < b.size(); ++m)
        f.data_[c].col(m) = v.segment(c * bs + m * dim, dim) / monomial_weight(b, m);
    return f;
  }

 private:
  int dim_, poly_deg_, form_deg_;
  std::vector<std::vector<int>> combs_;
  std::vector<Eigen::MatrixXd> data_;  // per combination: dim x n_monomials
};

/// L*: inserts the point argument into the first form slot,
/// [L*F]_X(Z_2,...,Z_r) = F_X(X, Z_2,...,Z_r). Raises polynomial degree.
inline PolyForm boundary_Lstar(const PolyForm& f) {
  require(f.form_deg() >= 1, "L*: form degree must be >= 1");
  int dim = f.dim();
  PolyForm out(dim, f.poly_deg() + 1, f.form_deg() - 1);
  const auto& bin = MonomialBasis::get(dim, f.poly_deg());
  const auto& bout = MonomialBasis::get(dim, f.poly_deg() + 1);
  for (int c = 0; c < f.n_combs(); ++c) {
    const auto& comb = f.comb(c);
    // F(e_i, e_J): decompose combination into i and the rest
    for (size_t pos = 0; pos < comb.size(); ++pos) {
      int i = comb[pos];
      std::vector<int> rest;
      for (size_t q = 0; q < comb.size(); ++q)
        if (q != pos) rest.push_back(comb[q]);
      double sign = (pos % 2 == 0) ? 1.0 : -1.0;  // move e_i to the front
      int cr = out.comb_rank(rest);
      // multiply the polynomial block by x_i
      for (int m = 0; m < bin.size(); ++m) {
        std::vector<int> e = bin.exponent(m);
        ++e[i];
        out.block(cr).col(bout.rank(e)) += sign * f.block(c).col(m);
      }
    }
  }
  return out;
}

/// L: (1/2) sum_mu (E_mu . d/dx (x) dE_mu ^ (x) id  +  IE_mu . d/dx (x) dE_mu ^ (x) I).
inline PolyForm boundary_L(const PolyForm& f, const Eigen::MatrixXd& I) {
  require(f.poly_deg() >= 1, "L: polynomial degree must be >= 1");
  int dim = f.dim();
  PolyForm out(dim, f.poly_deg() - 1, f.form_deg() + 1);
  const auto& bin = MonomialBasis::get(dim, f.poly_deg());
  const auto& bout = MonomialBasis::get(dim, f.poly_deg() - 1);
  for (int c = 0; c < f.n_combs(); ++c) {
    const auto& comb = f.comb(c);
    for (int mu = 0; mu < dim; ++mu) {
      // wedge dE_mu into the combination
      if (std::find(comb.begin(), comb.end(), mu) != comb.end()) continue;
      std::vector<int> bigger = comb;
      int before = 0;
      while (before < static_cast<int>(bigger.size()) && bigger[before] < mu) ++before;
      bigger.insert(bigger.begin() + before, mu);
      double sign = (before % 2 == 0) ? 1.0 : -1.0;
      int cb = out.comb_rank(bigger);
      for (int m = 0; m < bin.size(); ++m) {
        const auto& a = bin.exponent(m);
        // term 1: d/dx_mu, value unchanged
        if (a[mu] > 0) {
          std::vector<int> e = a;
          --e[mu];
          out.block(cb).col(bout.rank(e)) += 0.5 * sign * a[mu] * f.block(c).col(m);
        }
        // term 2: derivative along IE_mu, value multiplied by I
        for (int v = 0; v < dim; ++v) {
          if (a[v] == 0 || I(v, mu) == 0.0) continue;
          std::vector<int> e = a;
          --e[v];
          out.block(cb).col(bout.rank(e)) += 0.5 * sign * a[v] * I(v, mu) * (I * f.block(c).col(m));
        }
      }
    }
  }
  return out;
}

/// Constant special alternating forms Sigma^d: eigenvectors of Der_I (x) I on
/// Lambda^d T* (x) T for the eigenvalue d. Returns an orthonormal basis, each
/// element a PolyForm of polynomial degree 0.
inline std::vector<PolyForm> sigma_basis(int dim, int d, const Eigen::MatrixXd& I) {
  auto combs = PolyForm::combinations(dim, d);
  int nc = static_cast<int>(combs.size());
  int n = nc * dim;
  // assemble Der_I (x) I on constant Lambda^d (x) T forms:
  // (Der_I F)(X_1..X_d) = sum_i F(..IX_i..); then value-multiply by I.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  auto comb_rank = [&](const std::vector<int>& c) {
    for (int i = 0; i < nc; ++i)
      if (combs[i] == c) return i;
    return -1;
  };
  for (int c = 0; c < nc; ++c) {
    for (int val = 0; val < dim; ++val) {
      // basis form: e_val (x) dE_comb; compute (Der_I (x) I) of it
      // Der_I on an alternating form with coefficient at comb: sum over slots.
      for (size_t slot = 0; slot < combs[c].size(); ++slot) {
        for (int rep = 0; rep < dim; ++rep) {
          double w = I(combs[c][slot], rep);  // argument IX_slot hits e_rep
          if (w == 0.0) continue;
          std::vector<int> nc2 = combs[c];
          nc2[slot] = rep;
          // sort with sign
          double sign = 1.0;
          bool dup = false;
          for (size_t a2 = 0; a2 < nc2.size() && !dup; ++a2)
            for (size_t b2 = a2 + 1; b2 < nc2.size(); ++b2) {
              if (nc2[a2] == nc2[b2]) {
                dup = true;
                break;
              }
              if (nc2[a2] > nc2[b2]) {
                std::swap(nc2[a2], nc2[b2]);
                sign = -sign;
              }
            }
          if (dup) continue;
          int cr = comb_rank(nc2);
          for (int vo = 0; vo < dim; ++vo) {
            if (I(vo, val) == 0.0) continue;
            M(cr * dim + vo, c * dim + val) += sign * w * I(vo, val);
          }
        }
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  require((M - M.transpose()).norm() < 1e-9 * (1.0 + M.norm()), "Der_I (x) I not symmetric");
  std::vector<PolyForm> out;
  for (int i = 0; i < n; ++i) {
    if (std::abs(es.eigenvalues()[i] - d) > 1e-8) continue;
    PolyForm f(dim, 0, d);
    for (int c = 0; c < nc; ++c) f.block(c).col(0) = es.eigenvectors().col(i).segment(c * dim, dim);
    out.push_back(f);
  }
  return out;
}

/// Projection of an endomorphism onto Sigma^1 (anticommuting part):
/// pr(F) = (F + I F I)/2.
inline Eigen::MatrixXd pr_sigma1(const Eigen::MatrixXd& F, const Eigen::MatrixXd& I) {
  return 0.5 * (F + I * F * I);
}

/// Basis of Sym^k (x) Sigma^d as PolyForms: monomial x Sigma-basis element.
inline std::vector<PolyForm> sym_sigma_basis(int dim, int k, int d, const Eigen::MatrixXd& I) {
  std::vector<PolyForm> sigma = sigma_basis(dim, d, I);
  const auto& b = MonomialBasis::get(dim, k);
  std::vector<PolyForm> out;
  for (int m = 0; m < b.size(); ++m)
    for (const auto& s : sigma) {
      PolyForm f(dim, k, d);
      for (int c = 0; c < f.n_combs(); ++c) f.block(c).col(m) = s.block(c).col(0);
      out.push_back(f);
    }
  return out;
}

/// Matrix of a PolyForm map restricted to given domain/target bases, assuming
/// the image lies in the span of `target` (residual returned separately).
struct FormOperatorMatrix {
  Eigen::MatrixXd matrix;
  double off_space_residual = 0.0;
};

inline FormOperatorMatrix assemble_form_operator(const std::vector<PolyForm>& domain,
                                                 const std::vector<PolyForm>& target,
                                                 const std::function<PolyForm(const PolyForm&)>& fn) {
  FormOperatorMatrix out;
  if (domain.empty()) {
    out.matrix = Eigen::MatrixXd::Zero(target.size(), 0);
    return out;
  }
  int tn = target.empty() ? 0 : static_cast<int>(target[0].to_vec().size());
  Eigen::MatrixXd T(tn, target.size());
  for (size_t c = 0; c < target.size(); ++c) T.col(c) = target[c].to_vec();
  out.matrix.resize(target.size(), domain.size());
  for (size_t c = 0; c < domain.size(); ++c) {
    Eigen::VectorXd y = fn(domain[c]).to_vec();
    if (target.empty()) {
      out.off_space_residual = std::max(out.off_space_residual, y.norm());
      continue;
    }
    Eigen::VectorXd coef = T.colPivHouseholderQr().solve(y);
    out.off_space_residual = std::max(out.off_space_residual, (T * coef - y).norm());
    out.matrix.col(c) = coef;
  }
  return out;
}

/// Exactness report for the free resolution of holomorphic vector fields:
/// 0 -> H^k -> Sym^k (x) Sigma^0 -> Sym^{k-1} (x) Sigma^1 -> ... -> Sym^{k-n} (x) Sigma^n -> 0.
struct ResolutionReport {
  int k = 0;
  bool pass = false;
  std::vector<int> space_dims;
  std::vector<int> ranks;      // rank of L at each position
  std::vector<int> kernels;    // kernel dimension of L at each position
  int h_dim = 0;               // expected dim of H^k
  double l2_residual = 0.0;    // max norm of L composed with L
  std::string detail;
};

// Degreewise graded operators on series.

inline Series der_I_series(const Series& s, const Eigen::MatrixXd& I) {
  return s.map_terms([&](const SymTensor& t) { return der_I(t, I); });
}

inline Series weight_series(const Series& s, const Eigen::MatrixXd& I) {
  return s.map_terms([&](const SymTensor& t) { return weight(t, I); });
}

/// Keeps the (kappa, kbar) + conjugate component of every term (degrees whose
/// bidegree constraint kappa + kbar = degree cannot hold are dropped).
inline Series bigrade_series(const Series& s, int kappa, int kbar, const Eigen::MatrixXd& I) {
  Series out(s.dim(), s.kind(), s.trunc());
  int deg = kappa + kbar;
  if (s.has_term(deg)) out.set_term(bigrade_project(s.term(deg), kappa, kbar, I));
  return out;
}

inline ResolutionReport resolution_check(int n_complex, int k, const Eigen::MatrixXd& I) {
  int dim = 2 * n_complex;
  ResolutionReport rep;
  rep.k = k;
  rep.h_dim = 2 * n_complex * static_cast<int>(MonomialBasis::get(n_complex, k).size());
  std::vector<std::vector<PolyForm>> bases;
  for (int p = 0; p <= n_complex && k - p >= 0; ++p)
    bases.push_back(sym_sigma_basis(dim, k - p, p, I));
  std::vector<Eigen::MatrixXd> mats;
  for (size_t p = 0; p + 1 < bases.size(); ++p) {
    auto fop = assemble_form_operator(bases[p], bases[p + 1],
                                      [&](const PolyForm& f) { return boundary_L(f, I); });
    require(fop.off_space_residual < 1e-8, "L image left the special-form subspace");
    mats.push_back(fop.matrix);
  }
  for (size_t p = 0; p < bases.size(); ++p) rep.space_dims.push_back(static_cast<int>(bases[p].size()));
  // ranks and kernels
  for (size_t p = 0; p < mats.size(); ++p) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(mats[p]);
    lu.setThreshold(1e-8);
    rep.ranks.push_back(static_cast<int>(lu.rank()));
    rep.kernels.push_back(static_cast<int>(mats[p].cols() - lu.rank()));
  }
  // L o L = 0
  for (size_t p = 0; p + 1 < mats.size(); ++p)
    rep.l2_residual = std::max(rep.l2_residual, (mats[p + 1] * mats[p]).norm());
  // exactness: ker(L_0) = H^k; im(L_p) = ker(L_{p+1}); last map surjective
  bool ok = rep.l2_residual < 1e-8;
  if (!mats.empty()) {
    ok = ok && rep.kernels[0] == rep.h_dim;
    for (size_t p = 0; p + 1 < mats.size(); ++p) ok = ok && rep.ranks[p] == rep.kernels[p + 1];
    ok = ok && rep.ranks.back() == rep.space_dims.back();
  } else {
    ok = ok && rep.h_dim == rep.space_dims[0];
  }
  rep.pass = ok;
  return rep;
}

}  // namespace kjet

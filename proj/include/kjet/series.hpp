#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "kjet/sym_tensor.hpp"

namespace kjet {

/// Truncated graded power series on R^dim: one SymTensor per degree up to
/// `trunc`, absent terms meaning zero. The value of the series at X is the
/// sum of the polynomial (diagonal) values of its terms.
class Series {
 public:
  Series() = default;
  Series(int dim, ValueKind kind, int trunc) : dim_(dim), kind_(kind), trunc_(trunc) {
    require(trunc >= 0, "Series: negative truncation");
    terms_.resize(trunc + 1);
  }

  static Series zero(int dim, ValueKind kind, int trunc) { return Series(dim, kind, trunc); }

  /// The anchored identity series X -> X.
  static Series identity(int dim, int trunc) {
    Series s(dim, ValueKind::Vector, trunc);
    if (trunc >= 1) s.set_term(SymTensor::identity_map(dim));
    return s;
  }

  /// Endo series with a single degree-0 term.
  static Series constant_endo(const Eigen::MatrixXd& A, int trunc) {
    Series s(static_cast<int>(A.rows()), ValueKind::Endo, trunc);
    s.set_term(SymTensor::constant(s.dim_, A, ValueKind::Endo));
    return s;
  }

  static Series id_endo(int dim, int trunc) {
    return constant_endo(Eigen::MatrixXd::Identity(dim, dim), trunc);
  }

  int dim() const { return dim_; }
  ValueKind kind() const { return kind_; }
  int trunc() const { return trunc_; }

  bool has_term(int k) const { return k >= 0 && k <= trunc_ && terms_[k].has_value(); }

  /// Term of degree k (zero tensor if absent).
  SymTensor term(int k) const {
    require(k >= 0 && k <= trunc_, "term degree out of range");
    if (terms_[k]) return *terms_[k];
    return SymTensor::zero(dim_, k, kind_);
  }

  void set_term(SymTensor t) {
    require(t.dim() == dim_ && t.kind() == kind_, "set_term: shape mismatch");
    if (t.degree() > trunc_) return;
    terms_[t.degree()] = std::move(t);
  }

  void add_term(const SymTensor& t) {
    if (t.degree() > trunc_) return;
    if (terms_[t.degree()])
      *terms_[t.degree()] += t;
    else
      terms_[t.degree()] = t;
  }

  bool anchored() const {
    if (kind_ != ValueKind::Vector) return false;
    if (has_term(0) && !terms_[0]->is_zero(0.0)) return false;
    if (trunc_ < 1) return false;
    SymTensor lin = term(1) - SymTensor::identity_map(dim_);
    return lin.is_zero(1e-12 * (1.0 + term(1).norm()));
  }

  Series truncated(int new_trunc) const {
    Series out(dim_, kind_, new_trunc);
    for (int k = 0; k <= std::min(trunc_, new_trunc); ++k)
      if (has_term(k)) out.set_term(*terms_[k]);
    return out;
  }

  Series& operator+=(const Series& o) {
    require(dim_ == o.dim_ && kind_ == o.kind_, "series add: shape mismatch");
    for (int k = 0; k <= std::min(trunc_, o.trunc_); ++k)
      if (o.has_term(k)) add_term(*o.terms_[k]);
    return *this;
  }
  Series& operator-=(const Series& o) { return *this += o * (-1.0); }
  Series& operator*=(double s) {
    for (auto& t : terms_)
      if (t) *t *= s;
    return *this;
  }
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator*(Series a, double s) { return a *= s; }
  friend Series operator*(double s, Series a) { return a *= s; }

  double norm() const {
    double n2 = 0;
    for (const auto& t : terms_)
      if (t) n2 += t->norm() * t->norm();
    return std::sqrt(n2);
  }

  /// Sum of the polynomial values of all terms at X.
  Eigen::MatrixXd eval(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd acc =
        SymTensor::unflatten(Eigen::VectorXd::Zero(value_size(kind_, dim_)), kind_, dim_);
    for (int k = 0; k <= trunc_; ++k)
      if (has_term(k)) acc += terms_[k]->eval_diagonal(x);
    return acc;
  }

  /// Number operator: multiplies the degree-k term by k.
  Series number_op() const {
    Series out(dim_, kind_, trunc_);
    for (int k = 1; k <= trunc_; ++k)
      if (has_term(k)) out.set_term(term(k) * static_cast<double>(k));
    return out;
  }

  /// Applies fn degreewise.
  Series map_terms(const std::function<SymTensor(const SymTensor&)>& fn) const {
    Series out(dim_, kind_, trunc_);
    for (int k = 0; k <= trunc_; ++k)
      if (has_term(k)) {
        SymTensor t = fn(*terms_[k]);
        out.kind_ = t.kind();  // allow kind-changing maps (e.g. closure)
        out.set_term(std::move(t));
      }
    return out;
  }

 private:
  int dim_ = 0;
  ValueKind kind_ = ValueKind::Scalar;
  int trunc_ = 0;
  std::vector<std::optional<SymTensor>> terms_;
};

namespace detail {

/// Pointwise product of two coefficient values: endo*endo, endo*vector,
/// scalar*any, any*scalar.
inline Eigen::MatrixXd value_product(const Eigen::MatrixXd& a, ValueKind ka,
                                     const Eigen::MatrixXd& b, ValueKind kb) {
  if (ka == ValueKind::Scalar) return a(0, 0) * b;
  if (kb == ValueKind::Scalar) return b(0, 0) * a;
  require(ka == ValueKind::Endo, "mul: left factor must be endo or scalar");
  return a * b;
}

inline ValueKind product_kind(ValueKind ka, ValueKind kb) {
  if (ka == ValueKind::Scalar) return kb;
  if (kb == ValueKind::Scalar) return ka;
  require(ka == ValueKind::Endo, "mul: kind mismatch");
  return kb;  // endo*endo -> endo, endo*vector -> vector
}

}  // namespace detail

/// Product of two homogeneous terms as polynomials (monomial convolution with
/// pointwise value products).
inline SymTensor mul_terms(const SymTensor& ta, const SymTensor& tb) {
  require(ta.dim() == tb.dim(), "mul_terms: dimension mismatch");
  int dim = ta.dim();
  ValueKind kout = detail::product_kind(ta.kind(), tb.kind());
  SymTensor tc = SymTensor::zero(dim, ta.degree() + tb.degree(), kout);
  const auto& ba = ta.basis();
  const auto& bb = tb.basis();
  const auto& bc = tc.basis();
  for (int ma = 0; ma < ba.size(); ++ma) {
    if (ta.raw().col(ma).cwiseAbs().maxCoeff() == 0.0) continue;
    Eigen::MatrixXd va = SymTensor::unflatten(ta.raw().col(ma), ta.kind(), dim);
    const auto& ea = ba.exponent(ma);
    for (int mb = 0; mb < bb.size(); ++mb) {
      if (tb.raw().col(mb).cwiseAbs().maxCoeff() == 0.0) continue;
      Eigen::MatrixXd vb = SymTensor::unflatten(tb.raw().col(mb), tb.kind(), dim);
      std::vector<int> ec = ea;
      const auto& eb = bb.exponent(mb);
      for (int v = 0; v < dim; ++v) ec[v] += eb[v];
      tc.raw().col(bc.rank(ec)) +=
          SymTensor::flatten(detail::value_product(va, ta.kind(), vb, tb.kind()), kout, dim);
    }
  }
  return tc;
}

/// Degreewise product: the term of degree m collects all products of a
/// degree-i term of `a` with a degree-j term of `b`, i+j = m, as polynomials
/// (monomial coefficients convolve).
inline Series mul(const Series& a, const Series& b) {
  require(a.dim() == b.dim(), "mul: dimension mismatch");
  int trunc = std::min(a.trunc(), b.trunc());
  ValueKind kout = detail::product_kind(a.kind(), b.kind());
  Series out(a.dim(), kout, trunc);
  for (int i = 0; i <= trunc; ++i) {
    if (!a.has_term(i)) continue;
    for (int j = 0; i + j <= trunc; ++j) {
      if (!b.has_term(j)) continue;
      out.add_term(mul_terms(a.term(i), b.term(j)));
    }
  }
  return out;
}

/// Scalar series g(a(X), b(X)) for two vector series and a metric.
inline Series pairing(const Series& a, const Series& b, const Eigen::MatrixXd& metric) {
  require(a.kind() == ValueKind::Vector && b.kind() == ValueKind::Vector,
          "pairing needs vector series");
  int trunc = std::min(a.trunc(), b.trunc());
  int dim = a.dim();
  Series out(dim, ValueKind::Scalar, trunc);
  for (int i = 0; i <= trunc; ++i) {
    if (!a.has_term(i)) continue;
    SymTensor ta = a.term(i);
    const auto& ba = ta.basis();
    for (int j = 0; i + j <= trunc; ++j) {
      if (!b.has_term(j)) continue;
      SymTensor tb = b.term(j);
      const auto& bb = tb.basis();
      SymTensor tc = SymTensor::zero(dim, i + j, ValueKind::Scalar);
      const auto& bc = tc.basis();
      for (int ma = 0; ma < ba.size(); ++ma) {
        Eigen::VectorXd va = ta.raw().col(ma);
        Eigen::VectorXd gva = metric * va;
        const auto& ea = ba.exponent(ma);
        for (int mb = 0; mb < bb.size(); ++mb) {
          std::vector<int> ec = ea;
          const auto& eb = bb.exponent(mb);
          for (int v = 0; v < dim; ++v) ec[v] += eb[v];
          tc.raw()(0, bc.rank(ec)) += gva.dot(tb.raw().col(mb));
        }
      }
      out.add_term(tc);
    }
  }
  return out;
}

/// Applies an endo series to a vector series (same as mul, named for intent).
inline Series apply(const Series& endos, const Series& vec) { return mul(endos, vec); }

/// Vector series X -> G(X)X.
inline Series apply_to_identity(const Series& endos) {
  return mul(endos, Series::identity(endos.dim(), endos.trunc()));
}

/// Composition outer(inner(X)) for an anchored vector series `inner`. The
/// outer terms are polynomials in the target coordinates; substitution walks
/// the monomial tree so each edge costs one truncated scalar-series product.
inline Series compose(const Series& outer, const Series& inner) {
  require(inner.kind() == ValueKind::Vector, "compose: inner must be vector-valued");
  require(inner.anchored(), "compose: inner series must be anchored");
  require(outer.dim() == inner.dim(), "compose: dimension mismatch");
  int dim = outer.dim();
  int trunc = std::min(outer.trunc(), inner.trunc());
  Series out(dim, outer.kind(), trunc);
  if (outer.has_term(0)) out.add_term(outer.term(0));

  // scalar component series of inner
  std::vector<Series> comp(dim, Series(dim, ValueKind::Scalar, trunc));
  for (int k = 1; k <= trunc; ++k) {
    if (!inner.has_term(k)) continue;
    SymTensor t = inner.term(k);
    for (int i = 0; i < dim; ++i) {
      SymTensor ci = SymTensor::zero(dim, k, ValueKind::Scalar);
      ci.raw() = t.raw().row(i);
      comp[i].add_term(ci);
    }
  }

  // multiply two truncated scalar series where the left has min degree mina
  auto scalar_mul = [&](const Series& x, int minx, const Series& y, int miny) {
    Series r(dim, ValueKind::Scalar, trunc);
    for (int i = minx; i <= trunc; ++i) {
      if (!x.has_term(i)) continue;
      SymTensor tx = x.term(i);
      const auto& bx = tx.basis();
      for (int j = miny; i + j <= trunc; ++j) {
        if (!y.has_term(j)) continue;
        SymTensor ty = y.term(j);
        const auto& by = ty.basis();
        SymTensor tr = SymTensor::zero(dim, i + j, ValueKind::Scalar);
        const auto& br = tr.basis();
        for (int mx = 0; mx < bx.size(); ++mx) {
          double vx = tx.raw()(0, mx);
          if (vx == 0.0) continue;
          const auto& ex = bx.exponent(mx);
          for (int my = 0; my < by.size(); ++my) {
            double vy = ty.raw()(0, my);
            if (vy == 0.0) continue;
            std::vector<int> er = ex;
            const auto& ey = by.exponent(my);
            for (int v = 0; v < dim; ++v) er[v] += ey[v];
            tr.raw()(0, br.rank(er)) += vx * vy;
          }
        }
        r.add_term(tr);
      }
    }
    return r;
  };

  // DFS over monomials: node = non-increasing chain of variable choices; the
  // partial product comp[i_1]*...*comp[i_d] is threaded through the recursion.
  std::vector<int> chain;
  std::function<void(int, const Series&, int)> walk = [&](int depth, const Series& prod,
                                                          int maxvar) {
    for (int v = 0; v <= maxvar; ++v) {
      Series p = depth == 0 ? comp[v] : scalar_mul(prod, depth, comp[v], 1);
      chain.push_back(v);
      std::vector<int> alpha(dim, 0);
      for (int cv : chain) ++alpha[cv];
      int deg = depth + 1;
      if (outer.has_term(deg)) {
        SymTensor to = outer.term(deg);
        const auto& bo = to.basis();
        Eigen::VectorXd coeff = to.raw().col(bo.rank(alpha));
        if (coeff.cwiseAbs().maxCoeff() > 0.0) {
          // result += coeff (x) p
          for (int k = deg; k <= trunc; ++k) {
            if (!p.has_term(k)) continue;
            SymTensor addk = SymTensor::zero(dim, k, outer.kind());
            addk.raw() = coeff * p.term(k).raw().row(0);
            out.add_term(addk);
          }
        }
      }
      if (deg < trunc) walk(depth + 1, p, v);
      chain.pop_back();
    }
  };
  if (trunc >= 1) walk(0, Series(dim, ValueKind::Scalar, trunc), dim - 1);
  return out;
}

/// Compositional inverse of an anchored vector series: compose(s, result) =
/// identity = compose(result, s) through the truncation order.
inline Series invert_anchored(const Series& s) {
  require(s.anchored(), "invert_anchored: series must be anchored");
  int dim = s.dim();
  int trunc = s.trunc();
  Series r = Series::identity(dim, trunc);
  for (int m = 2; m <= trunc; ++m) {
    // r has no degree-m term yet, so [s(r)]_m misses exactly r_m (through the
    // linear slot of s); solving [s(r)]_m + r_m = 0 fixes it.
    Series t = compose(s.truncated(m), r.truncated(m));
    r.set_term(t.term(m) * (-1.0));
  }
  return r;
}

/// Multiplicative inverse of an endo series with invertible degree-0 term.
inline Series mul_inverse(const Series& s) {
  require(s.kind() == ValueKind::Endo, "mul_inverse needs endo series");
  int dim = s.dim();
  int trunc = s.trunc();
  Eigen::MatrixXd head = SymTensor::unflatten(s.term(0).raw().col(0), ValueKind::Endo, dim);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(head);
  require(lu.isInvertible(), "mul_inverse: singular degree-0 term");
  Eigen::MatrixXd head_inv = lu.inverse();
  Series r(dim, ValueKind::Endo, trunc);
  r.set_term(SymTensor::constant(dim, head_inv, ValueKind::Endo));
  for (int m = 1; m <= trunc; ++m) {
    // sum_{i>=1} s_i r_{m-i} = -s_0 r_m
    SymTensor acc = SymTensor::zero(dim, m, ValueKind::Endo);
    for (int i = 1; i <= m; ++i) {
      if (!s.has_term(i) || !r.has_term(m - i)) continue;
      acc += mul_terms(s.term(i), r.term(m - i));
    }
    r.set_term(acc.value_lmul(-head_inv));
  }
  return r;
}

/// Derivation of a series along a vector field series W: X -> Ds(X)[W(X)].
inline Series derive_along(const Series& s, const Series& w) {
  require(w.kind() == ValueKind::Vector, "derive_along: W must be vector-valued");
  require(s.dim() == w.dim(), "derive_along: dimension mismatch");
  int dim = s.dim();
  int trunc = std::min(s.trunc(), w.trunc());
  Series out(dim, s.kind(), trunc);
  for (int i = 0; i < dim; ++i) {
    // w_i(X) * d/dx_i s
    Series wi(dim, ValueKind::Scalar, trunc);
    for (int k = 0; k <= trunc; ++k) {
      if (!w.has_term(k)) continue;
      SymTensor ci = SymTensor::zero(dim, k, ValueKind::Scalar);
      ci.raw() = w.term(k).raw().row(i);
      if (ci.raw().cwiseAbs().maxCoeff() == 0.0) continue;
      wi.add_term(ci);
    }
    Series ds(dim, s.kind(), trunc);
    for (int k = 1; k <= s.trunc(); ++k) {
      if (!s.has_term(k)) continue;
      ds.add_term(s.term(k).derivative(i));
    }
    out += mul(wi, ds);
  }
  return out;
}

/// Derivation extension of an endo series G: X -> Ds(X)[G(X)X]. For G the
/// constant identity this is the number operator (Euler identity).
inline Series directional_compose(const Series& s, const Series& g) {
  require(g.kind() == ValueKind::Endo, "directional_compose: G must be endo-valued");
  return derive_along(s, apply_to_identity(g));
}

/// Jacobian of a vector series as an endo series: column j of the degree-k
/// term is the x_j-derivative of the degree-(k+1) term of s.
inline Series jacobian(const Series& s) {
  require(s.kind() == ValueKind::Vector, "jacobian needs a vector series");
  int dim = s.dim();
  int trunc = s.trunc() == 0 ? 0 : s.trunc() - 1;
  Series out(dim, ValueKind::Endo, trunc);
  for (int k = 1; k <= s.trunc(); ++k) {
    if (!s.has_term(k)) continue;
    SymTensor t = s.term(k);
    SymTensor d = SymTensor::zero(dim, k - 1, ValueKind::Endo);
    for (int j = 0; j < dim; ++j) {
      SymTensor dj = t.derivative(j);
      const auto& bd = dj.basis();
      for (int m = 0; m < bd.size(); ++m)
        for (int i = 0; i < dim; ++i) d.raw()(j * dim + i, m) += dj.raw()(i, m);
    }
    out.add_term(d);
  }
  return out;
}

}  // namespace kjet

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "kjet/basis.hpp"

namespace kjet {

enum class ValueKind { Scalar, Vector, Endo };

inline int value_size(ValueKind kind, int dim) {
  switch (kind) {
    case ValueKind::Scalar: return 1;
    case ValueKind::Vector: return dim;
    case ValueKind::Endo: return dim * dim;
  }
  return 0;
}

inline const char* value_kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::Scalar: return "scalar";
    case ValueKind::Vector: return "vector";
    case ValueKind::Endo: return "endo";
  }
  return "?";
}

/// A symmetric k-multilinear map on R^dim with scalar, vector or endomorphism
/// values. Internally the map F is stored through the coefficients of the
/// associated homogeneous polynomial p(X) = F(X,...,X)/k!, one column per
/// monomial of MonomialBasis(dim, k). Under this convention inserting a fixed
/// first argument is the directional derivative of p, and the component
/// F(e_{i_1},...,e_{i_k}) equals coeff(alpha) * prod_v alpha_v! for the
/// exponent vector alpha of the index tuple.
class SymTensor {
 public:
  SymTensor() = default;

  static SymTensor zero(int dim, int degree, ValueKind kind) {
    SymTensor t;
    t.dim_ = dim;
    t.degree_ = degree;
    t.kind_ = kind;
    const auto& basis = MonomialBasis::get(dim, degree);
    t.coeffs_ = Eigen::MatrixXd::Zero(value_size(kind, dim), basis.size());
    return t;
  }

  /// Degree-1 identity map X -> X.
  static SymTensor identity_map(int dim) {
    SymTensor t = zero(dim, 1, ValueKind::Vector);
    for (int i = 0; i < dim; ++i) t.coeffs_(i, t.basis().rank_of_tuple({i})) = 1.0;
    return t;
  }

  /// Degree-0 constant.
  static SymTensor constant(int dim, const Eigen::MatrixXd& value, ValueKind kind) {
    SymTensor t = zero(dim, 0, kind);
    t.coeffs_.col(0) = flatten(value, kind, dim);
    return t;
  }

  /// Symmetrizes a raw k-argument multilinear map given by a callback on
  /// basis index tuples; fn(idx) returns the value at (e_{idx[0]},...).
  /// The result is the average over all argument permutations.
  static SymTensor from_full(int dim, int degree, ValueKind kind,
                             const std::function<Eigen::MatrixXd(const std::vector<int>&)>& fn) {
    SymTensor t = zero(dim, degree, kind);
    const auto& basis = t.basis();
    const double kfac = MonomialBasis::factorial(degree);
    for (int m = 0; m < basis.size(); ++m) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(t.coeffs_.rows());
      basis.for_each_arrangement(m, [&](const std::vector<int>& idx) {
        acc += flatten(fn(idx), kind, dim);
      });
      // monomial coefficient = (sum over arrangements of fn) / k!
      t.coeffs_.col(m) = acc / kfac;
    }
    return t;
  }

  /// Builds the tensor whose polynomial is the diagonal X -> fn(X,...,X) of a
  /// multilinear callback, i.e. coeff(alpha) = sum over the distinct
  /// arrangements of alpha of fn. Use this to realize maps like
  /// X -> (1/k!) (nabla^k_{X..X} R)_{X,.}X directly as series terms.
  static SymTensor from_diagonal(int dim, int degree, ValueKind kind,
                                 const std::function<Eigen::MatrixXd(const std::vector<int>&)>& fn) {
    SymTensor t = zero(dim, degree, kind);
    const auto& basis = t.basis();
    for (int m = 0; m < basis.size(); ++m) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(t.coeffs_.rows());
      basis.for_each_arrangement(m, [&](const std::vector<int>& idx) {
        acc += flatten(fn(idx), kind, dim);
      });
      t.coeffs_.col(m) = acc;
    }
    return t;
  }

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  ValueKind kind() const { return kind_; }
  const MonomialBasis& basis() const { return MonomialBasis::get(dim_, degree_); }

  Eigen::MatrixXd& raw() { return coeffs_; }
  const Eigen::MatrixXd& raw() const { return coeffs_; }

  /// Multilinear component F(e_{i_1},...,e_{i_k}); idx need not be sorted.
  Eigen::MatrixXd component(const std::vector<int>& idx) const {
    require(static_cast<int>(idx.size()) == degree_, "component: wrong index count");
    const auto& b = basis();
    int m = b.rank_of_tuple(idx);
    double scale = MonomialBasis::factorial(degree_) / b.multinomial(m);  // prod alpha_v!
    return unflatten(coeffs_.col(m) * scale, kind_, dim_);
  }

  /// Full multilinear evaluation F(args[0],...,args[k-1]).
  Eigen::MatrixXd eval(const std::vector<Eigen::VectorXd>& args) const {
    require(static_cast<int>(args.size()) == degree_, "eval: wrong argument count");
    SymTensor t = *this;
    for (const auto& a : args) t = t.insert_slot(a);
    return unflatten(t.coeffs_.col(0), kind_, dim_);
  }

  /// Polynomial (diagonal) value p(X) = F(X,...,X)/k!.
  Eigen::MatrixXd eval_diagonal(const Eigen::VectorXd& x) const {
    require(x.size() == dim_, "eval_diagonal: dimension mismatch");
    const auto& b = basis();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(coeffs_.rows());
    for (int m = 0; m < b.size(); ++m) {
      const auto& a = b.exponent(m);
      double mono = 1.0;
      for (int v = 0; v < dim_; ++v)
        for (int c = 0; c < a[v]; ++c) mono *= x[v];
      acc += coeffs_.col(m) * mono;
    }
    return unflatten(acc, kind_, dim_);
  }

  /// Inserts a fixed first argument: result(Y_2,...,Y_k) = F(z, Y_2,...,Y_k).
  /// On polynomials this is the directional derivative along z.
  SymTensor insert_slot(const Eigen::VectorXd& z) const {
    require(degree_ >= 1, "insert_slot: degree-0 tensor");
    require(z.size() == dim_, "insert_slot: dimension mismatch");
    SymTensor out = zero(dim_, degree_ - 1, kind_);
    const auto& bin = basis();
    const auto& bout = out.basis();
    for (int m = 0; m < bin.size(); ++m) {
      const auto& a = bin.exponent(m);
      std::vector<int> beta(a);
      for (int v = 0; v < dim_; ++v) {
        if (a[v] == 0 || z[v] == 0.0) continue;
        --beta[v];
        out.coeffs_.col(bout.rank(beta)) += coeffs_.col(m) * (a[v] * z[v]);
        ++beta[v];
      }
    }
    return out;
  }

  /// Directional derivative of the polynomial along basis direction v.
  SymTensor derivative(int v) const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim_);
    z[v] = 1.0;
    return insert_slot(z);
  }

  SymTensor& operator+=(const SymTensor& o) {
    require(compatible(o), "tensor add: shape mismatch");
    coeffs_ += o.coeffs_;
    return *this;
  }
  SymTensor& operator-=(const SymTensor& o) {
    require(compatible(o), "tensor sub: shape mismatch");
    coeffs_ -= o.coeffs_;
    return *this;
  }
  SymTensor& operator*=(double s) {
    coeffs_ *= s;
    return *this;
  }
  friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend SymTensor operator*(SymTensor a, double s) { return a *= s; }
  friend SymTensor operator*(double s, SymTensor a) { return a *= s; }

  double norm() const { return coeffs_.norm(); }
  bool is_zero(double tol = 0.0) const { return coeffs_.norm() <= tol; }

  /// Applies a linear map to every coefficient value (left multiplication for
  /// vector values; A*M for endo values).
  SymTensor value_lmul(const Eigen::MatrixXd& A) const {
    SymTensor out = *this;
    if (kind_ == ValueKind::Scalar) {
      require(A.rows() == 1 && A.cols() == 1, "value_lmul on scalar");
      out.coeffs_ *= A(0, 0);
      return out;
    }
    for (int m = 0; m < coeffs_.cols(); ++m) {
      Eigen::MatrixXd v = unflatten(coeffs_.col(m), kind_, dim_);
      out.coeffs_.col(m) = flatten(A * v, kind_, dim_);
    }
    return out;
  }

  /// Right multiplication of endo values: M -> M*A.
  SymTensor value_rmul(const Eigen::MatrixXd& A) const {
    require(kind_ == ValueKind::Endo, "value_rmul needs endo values");
    SymTensor out = *this;
    for (int m = 0; m < coeffs_.cols(); ++m) {
      Eigen::MatrixXd v = unflatten(coeffs_.col(m), kind_, dim_);
      out.coeffs_.col(m) = flatten(v * A, kind_, dim_);
    }
    return out;
  }

  /// Restriction to a coordinate subspace: keeps monomials supported on
  /// `sub` and (for vector/endo values) the sub-block of the value,
  /// reindexed to the sub dimension. Off-subspace value components are the
  /// caller's responsibility to check.
  SymTensor restrict(const std::vector<int>& sub) const {
    int sdim = static_cast<int>(sub.size());
    SymTensor out = zero(sdim, degree_, kind_);
    const auto& bin = basis();
    const auto& bout = out.basis();
    for (int m = 0; m < bin.size(); ++m) {
      const auto& a = bin.exponent(m);
      std::vector<int> beta(sdim, 0);
      int covered = 0;
      for (int s = 0; s < sdim; ++s) {
        beta[s] = a[sub[s]];
        covered += beta[s];
      }
      if (covered != degree_) continue;  // monomial touches excluded coordinates
      Eigen::MatrixXd v = unflatten(coeffs_.col(m), kind_, dim_);
      Eigen::MatrixXd w;
      if (kind_ == ValueKind::Scalar) {
        w = v;
      } else if (kind_ == ValueKind::Vector) {
        w.resize(sdim, 1);
        for (int s = 0; s < sdim; ++s) w(s, 0) = v(sub[s], 0);
      } else {
        w.resize(sdim, sdim);
        for (int r = 0; r < sdim; ++r)
          for (int c = 0; c < sdim; ++c) w(r, c) = v(sub[r], sub[c]);
      }
      out.coeffs_.col(bout.rank(beta)) = flatten(w, kind_, sdim);
    }
    return out;
  }

  static Eigen::VectorXd flatten(const Eigen::MatrixXd& v, ValueKind kind, int dim) {
    int n = value_size(kind, dim);
    require(static_cast<int>(v.size()) == n, "value shape mismatch");
    Eigen::VectorXd out(n);
    if (kind == ValueKind::Endo) {
      for (int c = 0; c < dim; ++c)
        for (int r = 0; r < dim; ++r) out[c * dim + r] = v(r, c);
    } else {
      for (int i = 0; i < n; ++i) out[i] = v(i);
    }
    return out;
  }

  static Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, ValueKind kind, int dim) {
    if (kind == ValueKind::Scalar) {
      Eigen::MatrixXd m(1, 1);
      m(0, 0) = v[0];
      return m;
    }
    if (kind == ValueKind::Vector) return v;
    Eigen::MatrixXd m(dim, dim);
    for (int c = 0; c < dim; ++c)
      for (int r = 0; r < dim; ++r) m(r, c) = v[c * dim + r];
    return m;
  }

 private:
  bool compatible(const SymTensor& o) const {
    return dim_ == o.dim_ && degree_ == o.degree_ && kind_ == o.kind_;
  }

  int dim_ = 0;
  int degree_ = 0;
  ValueKind kind_ = ValueKind::Scalar;
  Eigen::MatrixXd coeffs_;  // value_size x n_monomials
};

/// Pointwise Kaehler data: an even-dimensional inner product space with an
/// orthogonal complex structure. The complex structure is optional so the
/// same type can carry purely affine data (Lie group models).
class KahlerPoint {
 public:
  KahlerPoint() = default;

  KahlerPoint(Eigen::MatrixXd metric, std::optional<Eigen::MatrixXd> cplx)
      : dim_(static_cast<int>(metric.rows())), metric_(std::move(metric)), cplx_(std::move(cplx)) {
    require(metric_.rows() == metric_.cols(), "metric must be square");
    require((metric_ - metric_.transpose()).norm() < 1e-12 * (1.0 + metric_.norm()),
            "metric must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(metric_);
    require(es.eigenvalues().minCoeff() > 0.0, "metric must be positive definite");
    if (cplx_) {
      require(dim_ % 2 == 0, "complex structure needs even dimension");
      require(cplx_->rows() == dim_ && cplx_->cols() == dim_, "I shape mismatch");
      const Eigen::MatrixXd& I = *cplx_;
      require((I * I + Eigen::MatrixXd::Identity(dim_, dim_)).cwiseAbs().maxCoeff() < 1e-12,
              "I*I must equal -id");
      require((I.transpose() * metric_ * I - metric_).cwiseAbs().maxCoeff() < 1e-12,
              "I must be orthogonal for the metric");
      build_adapted_basis();
    }
  }

  static KahlerPoint standard(int n_complex) {
    int dim = 2 * n_complex;
    Eigen::MatrixXd I = Eigen::MatrixXd::Zero(dim, dim);
    for (int j = 0; j < n_complex; ++j) {
      I(2 * j + 1, 2 * j) = 1.0;
      I(2 * j, 2 * j + 1) = -1.0;
    }
    return KahlerPoint(Eigen::MatrixXd::Identity(dim, dim), I);
  }

  static KahlerPoint affine(int dim) {
    return KahlerPoint(Eigen::MatrixXd::Identity(dim, dim), std::nullopt);
  }

  int dim() const { return dim_; }
  const Eigen::MatrixXd& metric() const { return metric_; }
  bool has_cplx() const { return cplx_.has_value(); }
  const Eigen::MatrixXd& cplx() const {
    require(cplx_.has_value(), "point carries no complex structure");
    return *cplx_;
  }

  double g(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return x.dot(metric_ * y);
  }

  /// Kaehler form omega(X,Y) = g(IX, Y).
  double omega(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return (cplx() * x).dot(metric_ * y);
  }

  /// A g-orthonormal basis (u_1, Iu_1, ..., u_n, Iu_n) adapted to I; columns
  /// of the returned matrix. Used to build holomorphic coordinates.
  const Eigen::MatrixXd& adapted_basis() const {
    require(adapted_.size() > 0, "point carries no complex structure");
    return adapted_;
  }

 private:
  void build_adapted_basis() {
    const Eigen::MatrixXd& I = *cplx_;
    int n = dim_ / 2;
    Eigen::MatrixXd B(dim_, dim_);
    int taken = 0;
    for (int j = 0; j < n; ++j) {
      // pick any unit vector g-orthogonal to the span collected so far
      Eigen::VectorXd u;
      double best = -1.0;
      for (int c = 0; c < dim_; ++c) {
        Eigen::VectorXd cand = Eigen::VectorXd::Unit(dim_, c);
        for (int t = 0; t < taken; ++t)
          cand -= B.col(t) * (B.col(t).dot(metric_ * cand));
        double nn = std::sqrt(std::max(0.0, cand.dot(metric_ * cand)));
        if (nn > best) {
          best = nn;
          u = cand;
        }
      }
      u /= std::sqrt(u.dot(metric_ * u));
      B.col(taken++) = u;
      B.col(taken++) = I * u;
    }
    adapted_ = B;
  }

  int dim_ = 0;
  Eigen::MatrixXd metric_;
  std::optional<Eigen::MatrixXd> cplx_;
  Eigen::MatrixXd adapted_;
};

}  // namespace kjet

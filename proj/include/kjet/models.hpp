#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "kjet/curvature.hpp"
#include "kjet/series.hpp"

namespace kjet {

// ---------------------------------------------------------------------------
// Even power series utilities (coefficient lists in the squared variable).
// ---------------------------------------------------------------------------

inline std::vector<double> even_mul(const std::vector<double>& a, const std::vector<double>& b,
                                    int n) {
  std::vector<double> c(n, 0.0);
  for (int i = 0; i < n && i < static_cast<int>(a.size()); ++i)
    for (int j = 0; i + j < n && j < static_cast<int>(b.size()); ++j) c[i + j] += a[i] * b[j];
  return c;
}

inline std::vector<double> even_inv(const std::vector<double>& a, int n) {
  require(!a.empty() && a[0] != 0.0, "even_inv: zero constant term");
  std::vector<double> r(n, 0.0);
  r[0] = 1.0 / a[0];
  for (int k = 1; k < n; ++k) {
    double s = 0.0;
    for (int j = 0; j < k; ++j)
      if (k - j < static_cast<int>(a.size())) s += r[j] * a[k - j];
    r[k] = -s / a[0];
  }
  return r;
}

/// sinh(x)/x = sum y^k/(2k+1)! with y = x^2.
inline std::vector<double> coeffs_sinh_over_x(int n) {
  std::vector<double> c(n);
  for (int k = 0; k < n; ++k) c[k] = 1.0 / MonomialBasis::factorial(2 * k + 1);
  return c;
}

/// cosh(x) = sum y^k/(2k)!.
inline std::vector<double> coeffs_cosh(int n) {
  std::vector<double> c(n);
  for (int k = 0; k < n; ++k) c[k] = 1.0 / MonomialBasis::factorial(2 * k);
  return c;
}

/// x/sinh(x).
inline std::vector<double> coeffs_x_over_sinh(int n) { return even_inv(coeffs_sinh_over_x(n), n); }

/// x/tanh(x) = cosh(x) * x/sinh(x).
inline std::vector<double> coeffs_x_over_tanh(int n) {
  return even_mul(coeffs_cosh(n), coeffs_x_over_sinh(n), n);
}

/// tanh(x/2)/(x/2) = [sinh(t)/t / cosh(t)](t = x/2): coefficients in y = x^2.
inline std::vector<double> coeffs_tanh_half(int n) {
  std::vector<double> t = even_mul(coeffs_sinh_over_x(n), even_inv(coeffs_cosh(n), n), n);
  for (int k = 0; k < n; ++k) t[k] /= std::pow(4.0, k);
  return t;
}

/// artanh(x/2)/(x/2) = sum (x^2/4)^k/(2k+1).
inline std::vector<double> coeffs_artanh_half(int n) {
  std::vector<double> c(n);
  for (int k = 0; k < n; ++k) c[k] = 1.0 / ((2.0 * k + 1.0) * std::pow(4.0, k));
  return c;
}

/// log(1 - x^2/4)/(-x^2/4) = sum (x^2/4)^k/(k+1).
inline std::vector<double> coeffs_log_quarter(int n) {
  std::vector<double> c(n);
  for (int k = 0; k < n; ++k) c[k] = 1.0 / ((k + 1.0) * std::pow(4.0, k));
  return c;
}

// ---------------------------------------------------------------------------
// Matrix functions of g-symmetric operators via eigendecomposition.
// ---------------------------------------------------------------------------

enum class MatFun {
  SinhSqrtOverSqrt,  // sinh(sqrt(l))/sqrt(l)
  SqrtOverSinhSqrt,  // sqrt(l)/sinh(sqrt(l))
  TanhHalfSqrt,      // tanh(sqrt(l)/2)/(sqrt(l)/2)
  ArtanhHalfSqrt,    // artanh(sqrt(l)/2)/(sqrt(l)/2)
  LogOneQuarter,     // log(1 - l/4)/(-l/4)
  SqrtOverTanhSqrt,  // sqrt(l)/tanh(sqrt(l))
};

/// Scalar evaluation; every tag is an even function of sqrt(l), so negative
/// eigenvalues continue through the trigonometric branch.
inline double matfun_scalar(MatFun f, double lambda) {
  double s = std::sqrt(std::abs(lambda));
  bool neg = lambda < 0.0;
  auto near_zero = s < 1e-8;
  switch (f) {
    case MatFun::SinhSqrtOverSqrt:
      if (near_zero) return 1.0 + lambda / 6.0;
      return neg ? std::sin(s) / s : std::sinh(s) / s;
    case MatFun::SqrtOverSinhSqrt:
      if (near_zero) return 1.0 - lambda / 6.0;
      require(!neg || s < M_PI, "matfun: sqrt/sinh pole");
      return neg ? s / std::sin(s) : s / std::sinh(s);
    case MatFun::TanhHalfSqrt:
      if (near_zero) return 1.0 - lambda / 12.0;
      require(!neg || s < M_PI, "matfun: tan pole");
      return neg ? std::tan(s / 2.0) / (s / 2.0) : std::tanh(s / 2.0) / (s / 2.0);
    case MatFun::ArtanhHalfSqrt:
      if (near_zero) return 1.0 + lambda / 12.0;
      require(neg || s < 2.0, "matfun: artanh out of domain (spectrum/4 must lie in (-1,1))");
      return neg ? std::atan(s / 2.0) / (s / 2.0) : std::atanh(s / 2.0) / (s / 2.0);
    case MatFun::LogOneQuarter:
      if (near_zero) return 1.0 + lambda / 8.0;
      require(lambda < 4.0, "matfun: log out of domain (spectrum must be < 4)");
      return std::log(1.0 - lambda / 4.0) / (-lambda / 4.0);
    case MatFun::SqrtOverTanhSqrt:
      if (near_zero) return 1.0 + lambda / 3.0;
      require(!neg || s < M_PI, "matfun: sqrt/tan pole");
      return neg ? s / std::tan(s) : s / std::tanh(s);
  }
  return 0.0;
}

/// Reference Taylor coefficients of each tag (in the operator itself).
inline std::vector<double> matfun_series(MatFun f, int n) {
  switch (f) {
    case MatFun::SinhSqrtOverSqrt: return coeffs_sinh_over_x(n);
    case MatFun::SqrtOverSinhSqrt: return coeffs_x_over_sinh(n);
    case MatFun::TanhHalfSqrt: return coeffs_tanh_half(n);
    case MatFun::ArtanhHalfSqrt: return coeffs_artanh_half(n);
    case MatFun::LogOneQuarter: return coeffs_log_quarter(n);
    case MatFun::SqrtOverTanhSqrt: return coeffs_x_over_tanh(n);
  }
  return {};
}

/// f(A) for a g-symmetric matrix A (diagonalizable with real spectrum).
inline Eigen::MatrixXd matfun(const Eigen::MatrixXd& A, MatFun f,
                              const Eigen::MatrixXd& metric) {
  int n = static_cast<int>(A.rows());
  Eigen::MatrixXd GA = metric * A;
  require((GA - GA.transpose()).cwiseAbs().maxCoeff() <
              1e-9 * std::max(1.0, GA.cwiseAbs().maxCoeff()),
          "matfun: operator is not g-symmetric");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(GA, metric);
  Eigen::VectorXd lam = es.eigenvalues();
  Eigen::MatrixXd V = es.eigenvectors();  // V^T G V = id, A V = V diag(lam)
  Eigen::VectorXd flam(n);
  for (int i = 0; i < n; ++i) flam[i] = matfun_scalar(f, lam[i]);
  return V * flam.asDiagonal() * V.transpose() * metric;
}

inline Eigen::MatrixXd matfun(const Eigen::MatrixXd& A, MatFun f) {
  return matfun(A, f, Eigen::MatrixXd::Identity(A.rows(), A.cols()));
}

/// Doubly even extension F^ext(x, xbar) = sum_k sum_mu C(2k+1, 2mu) F_{2k}
/// (x^2)^{k-mu} (xbar^2)^mu evaluated on commuting matrices x2 = x^2,
/// xbar2 = xbar^2; F given by its even coefficients F_{2k}.
inline Eigen::MatrixXd f_ext(const std::vector<double>& F, const Eigen::MatrixXd& x2,
                             const Eigen::MatrixXd& xbar2, double commute_tol = 1e-10) {
  int n = static_cast<int>(x2.rows());
  double scale = std::max(1.0, x2.norm() * xbar2.norm());
  require((x2 * xbar2 - xbar2 * x2).norm() <= commute_tol * scale,
          "f_ext: arguments do not commute");
  auto binom = [](int a, int b) {
    double r = 1.0;
    for (int i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
    return r;
  };
  int kmax = static_cast<int>(F.size());
  std::vector<Eigen::MatrixXd> xp(kmax + 1), bp(kmax + 1);
  xp[0] = bp[0] = Eigen::MatrixXd::Identity(n, n);
  for (int i = 1; i <= kmax; ++i) {
    xp[i] = xp[i - 1] * x2;
    bp[i] = bp[i - 1] * xbar2;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < kmax; ++k) {
    if (F[k] == 0.0) continue;
    for (int mu = 0; mu <= k; ++mu)
      out += binom(2 * k + 1, 2 * mu) * F[k] * (xp[k - mu] * bp[mu]);
  }
  return out;
}

/// Jacobi operators of a fixed tangent vector.
struct JacobiOps {
  Eigen::MatrixXd adsq_x;   // A -> R_{X,A}X
  Eigen::MatrixXd adsq_ix;  // A -> R_{IX,A}IX
};

inline JacobiOps jacobi(const CurvatureJet& jet, const Eigen::VectorXd& X) {
  JacobiOps ops;
  ops.adsq_x = jet.jacobi_matrix(X);
  ops.adsq_ix = jet.jacobi_matrix(jet.point().cplx() * X);
  return ops;
}

// ---------------------------------------------------------------------------
// Closed-form series on locally symmetric data (for termwise comparisons).
// ---------------------------------------------------------------------------

/// Degree-2 endo term X -> (Y -> R_{X,Y}X).
inline SymTensor adsq_x_term(const CurvatureJet& jet) {
  int dim = jet.dim();
  return SymTensor::from_diagonal(dim, 2, ValueKind::Endo, [&](const std::vector<int>& idx) {
    Eigen::MatrixXd M(dim, dim);
    for (int y = 0; y < dim; ++y) M.col(y) = jet.nabla_r({}, idx[0], y, idx[1]);
    return M;
  });
}

/// Degree-2 endo term X -> (Y -> R_{IX,Y}IX).
inline SymTensor adsq_ix_term(const CurvatureJet& jet) {
  int dim = jet.dim();
  const Eigen::MatrixXd& I = jet.point().cplx();
  return SymTensor::from_diagonal(dim, 2, ValueKind::Endo, [&](const std::vector<int>& idx) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
    for (int ap = 0; ap < dim; ++ap) {
      if (I(ap, idx[0]) == 0.0) continue;
      for (int cp = 0; cp < dim; ++cp) {
        if (I(cp, idx[1]) == 0.0) continue;
        for (int y = 0; y < dim; ++y)
          M.col(y) += I(ap, idx[0]) * I(cp, idx[1]) * jet.nabla_r({}, ap, y, cp);
      }
    }
    return M;
  });
}

/// sum_k c[k] * G^k as an endo series, G a degree-2 generator term.
inline Series operator_power_series(const SymTensor& gen, const std::vector<double>& c,
                                    int trunc) {
  int dim = gen.dim();
  Series out(dim, ValueKind::Endo, trunc);
  Series gen_series(dim, ValueKind::Endo, trunc);
  gen_series.set_term(gen);
  Series power = Series::id_endo(dim, trunc);
  for (int k = 0; k < static_cast<int>(c.size()) && 2 * k <= trunc; ++k) {
    if (k > 0) power = mul(power, gen_series);
    out += power * c[k];
  }
  return out;
}

/// sinh(ad X)/ad X termwise on a symmetric jet.
inline Series sym_phi_inv_series(const CurvatureJet& jet, int trunc) {
  int n = trunc / 2 + 1;
  return operator_power_series(adsq_x_term(jet), coeffs_sinh_over_x(n), trunc);
}

/// tanh((1/2) ad IX)/((1/2) ad IX) X termwise.
inline Series sym_k_inv_series(const CurvatureJet& jet, int trunc) {
  int n = trunc / 2 + 1;
  std::vector<double> c = coeffs_tanh_half(n);  // in (x^2)^k
  return apply_to_identity(operator_power_series(adsq_ix_term(jet), c, trunc));
}

/// artanh((1/2) ad IX)/((1/2) ad IX) X termwise.
inline Series sym_k_series(const CurvatureJet& jet, int trunc) {
  int n = trunc / 2 + 1;
  return apply_to_identity(operator_power_series(adsq_ix_term(jet), coeffs_artanh_half(n), trunc));
}

/// g(X, log(id - (1/4) ad^2 IX)/(-(1/4) ad^2 IX) X) termwise.
inline Series sym_potential_series(const CurvatureJet& jet, int trunc) {
  int n = trunc / 2 + 1;
  Series v = apply_to_identity(
      operator_power_series(adsq_ix_term(jet), coeffs_log_quarter(n), trunc));
  return pairing(Series::identity(jet.dim(), trunc), v, jet.point().metric());
}

/// ad X / tanh(ad X) termwise.
inline Series sym_theta_exp_series(const CurvatureJet& jet, int trunc) {
  int n = trunc / 2 + 1;
  return operator_power_series(adsq_x_term(jet), coeffs_x_over_tanh(n), trunc);
}

/// (e^{-ad X} - id)/(-ad X) termwise for a flat-with-torsion Lie group jet:
/// sum_m (-1)^m (ad X)^m / (m+1)!.
inline Series lie_phi_inv_series(const CurvatureJet& jet, int trunc) {
  int dim = jet.dim();
  require(jet.has_torsion(), "lie series needs a torsion jet");
  SymTensor ad = SymTensor::from_diagonal(dim, 1, ValueKind::Endo, [&](const std::vector<int>& idx) {
    Eigen::MatrixXd M(dim, dim);
    for (int y = 0; y < dim; ++y) M.col(y) = -jet.t_entry(0, 0, idx[0], y);  // [X,Y] = -T(X,Y)
    return M;
  });
  Series ad_series(dim, ValueKind::Endo, trunc);
  ad_series.set_term(ad);
  Series out(dim, ValueKind::Endo, trunc);
  Series power = Series::id_endo(dim, trunc);
  for (int m = 0; m <= trunc; ++m) {
    if (m > 0) power = mul(power, ad_series);
    out += power * (std::pow(-1.0, m) / MonomialBasis::factorial(m + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model zoo.
// ---------------------------------------------------------------------------

/// A closed-form geometry: pointwise Kaehler data, its curvature jet and the
/// chart-level oracle maps from the ambient matrix model. Chart objects are
/// canonicalized (projection matrices, lines as rank-1 projectors, or the
/// complex structure itself) so chart distance is a plain Frobenius norm.
struct Model {
  std::string name;
  KahlerPoint point;
  CurvatureJet jet;
  bool symmetric = true;

  std::function<Eigen::MatrixXcd(const Eigen::VectorXd&)> exp_chart;
  std::function<Eigen::MatrixXcd(const Eigen::VectorXd&)> knc_chart;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> k_inv_closed;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> k_closed;
  std::function<double(const Eigen::VectorXd&)> potential_closed;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> phi_inv_closed;

  Model(std::string n, KahlerPoint p, CurvatureJet j)
      : name(std::move(n)), point(std::move(p)), jet(std::move(j)) {}

  static double chart_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return (a - b).norm();
  }
};

/// Pointwise closed-form evaluations on a symmetric model.
struct ClosedForms {
  Eigen::MatrixXd phi_inv;   // sinh(ad X)/ad X
  Eigen::VectorXd k;         // artanh((1/2) ad IX)/((1/2) ad IX) X
  Eigen::VectorXd k_inv;     // tanh((1/2) ad IX)/((1/2) ad IX) X
  double theta = 0.0;        // g(X, log(id - ad^2 IX/4)/(-ad^2 IX/4) X)
  Eigen::MatrixXd theta_exp;  // ad X/tanh(ad X)
  Eigen::MatrixXd z_knc_op;   // Z -> Z - (R_{Z,X}X - R_{Z,IX}IX)/4
};

inline ClosedForms closed_forms(const Model& model, const Eigen::VectorXd& X) {
  require(model.symmetric, "closed forms require a symmetric model");
  const Eigen::MatrixXd& g = model.point.metric();
  JacobiOps ops = jacobi(model.jet, X);
  ClosedForms out;
  out.phi_inv = matfun(ops.adsq_x, MatFun::SinhSqrtOverSqrt, g);
  out.k = matfun(ops.adsq_ix, MatFun::ArtanhHalfSqrt, g) * X;
  out.k_inv = matfun(ops.adsq_ix, MatFun::TanhHalfSqrt, g) * X;
  out.theta = X.dot(g * (matfun(ops.adsq_ix, MatFun::LogOneQuarter, g) * X));
  out.theta_exp = matfun(ops.adsq_x, MatFun::SqrtOverTanhSqrt, g);
  int dim = model.point.dim();
  // R_{Z,X}X = -ad^2X Z and R_{Z,IX}IX = -ad^2IX Z
  out.z_knc_op = Eigen::MatrixXd::Identity(dim, dim) + 0.25 * (ops.adsq_x - ops.adsq_ix);
  return out;
}

/// Central difference with one Richardson step for the directional derivative
/// checks of the F^ext calculus.
struct DdeReport {
  double derivative_residual = 0.0;    // FD of F(ad I(X+tA))(X+tA) vs F^ext A
  double intertwine_residual = 0.0;    // ad(F(ad IX)X) vs (ad X) o F^ext
};

inline DdeReport dde_check(const Model& model, const Eigen::VectorXd& X, const Eigen::VectorXd& A,
                           const std::vector<double>& F, double step = 1e-4) {
  require(model.symmetric, "dde_check needs a symmetric model");
  const CurvatureJet& jet = model.jet;
  const Eigen::MatrixXd& I = model.point.cplx();
  int dim = model.point.dim();
  auto f_of = [&](const Eigen::VectorXd& Y) {
    Eigen::MatrixXd ad2 = jet.jacobi_matrix(I * Y);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(dim, dim);
    for (size_t k = 0; k < F.size(); ++k) {
      if (k > 0) p = p * ad2;
      acc += F[k] * p;
    }
    return Eigen::VectorXd(acc * Y);
  };
  auto central = [&](double h) {
    return Eigen::VectorXd((f_of(X + h * A) - f_of(X - h * A)) / (2.0 * h));
  };
  Eigen::VectorXd d = (4.0 * central(step / 2.0) - central(step)) / 3.0;
  JacobiOps ops = jacobi(jet, X);
  Eigen::VectorXd rhs = f_ext(F, ops.adsq_x, ops.adsq_ix) * A;
  DdeReport rep;
  rep.derivative_residual = (d - rhs).norm();
  // ad(F(ad IX)X)|_T = (ad X) o F^ext: both sides map A -> an element of the
  // stabilizer, realized as curvature endomorphisms R_{W,A} vs R_{X, F^ext A}.
  Eigen::VectorXd W = f_of(X);
  Eigen::MatrixXd fext = f_ext(F, ops.adsq_x, ops.adsq_ix);
  double resid = 0.0;
  for (int a = 0; a < dim; ++a) {
    Eigen::VectorXd ea = Eigen::VectorXd::Unit(dim, a);
    Eigen::MatrixXd lhs = jet.r_endo(W, ea);
    Eigen::MatrixXd rhs2 = jet.r_endo(X, fext * ea);
    resid = std::max(resid, (lhs - rhs2).norm());
  }
  rep.intertwine_residual = resid;
  return rep;
}

namespace detail {

/// Even matrix functions of a square argument: f(M) X-style helpers used by
/// the chart oracles; M symmetric (or hermitian) handled by the callers.
inline Eigen::MatrixXcd herm_fun(const Eigen::MatrixXcd& H,
                                 const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  Eigen::VectorXd lam = es.eigenvalues();
  Eigen::VectorXcd fl(lam.size());
  for (int i = 0; i < lam.size(); ++i) fl[i] = f(lam[i]);
  return es.eigenvectors() * fl.asDiagonal() * es.eigenvectors().adjoint();
}

inline Eigen::MatrixXd sym_fun(const Eigen::MatrixXd& H, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  Eigen::VectorXd lam = es.eigenvalues();
  Eigen::VectorXd fl(lam.size());
  for (int i = 0; i < lam.size(); ++i) fl[i] = f(lam[i]);
  return es.eigenvectors() * fl.asDiagonal() * es.eigenvectors().transpose();
}

/// Canonical projector onto the column span of a full-rank matrix.
inline Eigen::MatrixXcd span_projector(const Eigen::MatrixXcd& B) {
  return B * (B.adjoint() * B).inverse() * B.adjoint();
}

}  // namespace detail

/// Complex Grassmannian Gr_k(C^m) at the base plane spanned by the first k
/// coordinates; tangent vectors are (m-k) x k complex blocks flattened as
/// (real, imag) pairs in row-major entry order.
inline Model grassmann_c(int k, int m, int jet_order = 3) {
  require(1 <= k && k < m, "grassmann_c: need 1 <= k < m");
  int rows = m - k, cols = k;
  int n_complex = rows * cols;
  KahlerPoint pt = KahlerPoint::standard(n_complex);
  int dim = pt.dim();

  auto to_cplx = [rows, cols, dim](const Eigen::VectorXd& v) {
    Eigen::MatrixXcd X(rows, cols);
    require(static_cast<int>(v.size()) == dim, "grassmann_c: bad coordinate vector");
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        int j = r * cols + c;
        X(r, c) = std::complex<double>(v[2 * j], v[2 * j + 1]);
      }
    return X;
  };
  auto to_real = [rows, cols, dim](const Eigen::MatrixXcd& X) {
    Eigen::VectorXd v(dim);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        int j = r * cols + c;
        v[2 * j] = X(r, c).real();
        v[2 * j + 1] = X(r, c).imag();
      }
    return v;
  };

  CurvatureJet jet(pt, jet_order);
  // R_{U,V}W = U V* W - V U* W - W U* V + W V* U
  for (int a = 0; a < dim; ++a) {
    Eigen::MatrixXcd U = to_cplx(Eigen::VectorXd::Unit(dim, a));
    for (int b = 0; b < dim; ++b) {
      Eigen::MatrixXcd V = to_cplx(Eigen::VectorXd::Unit(dim, b));
      for (int c = 0; c < dim; ++c) {
        Eigen::MatrixXcd W = to_cplx(Eigen::VectorXd::Unit(dim, c));
        Eigen::MatrixXcd R = U * V.adjoint() * W - V * U.adjoint() * W - W * U.adjoint() * V +
                             W * V.adjoint() * U;
        jet.r_entry(0, 0, a, b, c) = to_real(R);
      }
    }
  }

  Model model("grassmann_c(" + std::to_string(k) + "," + std::to_string(m) + ")", pt, jet);
  model.exp_chart = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXcd X = to_cplx(v);
    Eigen::MatrixXcd XX = X.adjoint() * X;  // k x k hermitian PSD
    Eigen::MatrixXcd top = detail::herm_fun(XX, [](double l) { return std::cos(std::sqrt(std::max(0.0, l))); });
    Eigen::MatrixXcd sinc = detail::herm_fun(XX, [](double l) {
      double s = std::sqrt(std::max(0.0, l));
      return s < 1e-12 ? 1.0 : std::sin(s) / s;
    });
    Eigen::MatrixXcd B(m, k);
    B.topRows(cols) = top;
    B.bottomRows(rows) = X * sinc;
    return detail::span_projector(B);
  };
  model.knc_chart = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXcd X = to_cplx(v);
    Eigen::MatrixXcd B(m, k);
    B.topRows(cols) = Eigen::MatrixXcd::Identity(k, k);
    B.bottomRows(rows) = X;
    return detail::span_projector(B);
  };
  model.k_inv_closed = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXcd X = to_cplx(v);
    Eigen::MatrixXcd f = detail::herm_fun(X.adjoint() * X, [](double l) {
      double s = std::sqrt(std::max(0.0, l));
      require(s < M_PI / 2.0, "grassmann_c: tan out of domain");
      return s < 1e-12 ? 1.0 : std::tan(s) / s;
    });
    return to_real(X * f);
  };
  model.k_closed = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXcd X = to_cplx(v);
    Eigen::MatrixXcd f = detail::herm_fun(X.adjoint() * X, [](double l) {
      double s = std::sqrt(std::max(0.0, l));
      return s < 1e-12 ? 1.0 : std::atan(s) / s;
    });
    return to_real(X * f);
  };
  model.potential_closed = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXcd X = to_cplx(v);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(X.adjoint() * X);
    double acc = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) acc += std::log(1.0 + es.eigenvalues()[i]);
    return acc;
  };
  model.phi_inv_closed = [jet, g = pt.metric()](const Eigen::VectorXd& v) {
    return matfun(jet.jacobi_matrix(v), MatFun::SinhSqrtOverSqrt, g);
  };
  return model;
}

/// Grassmannian of oriented 2-planes in R^n at the plane of the first two
/// coordinates; tangent vectors are (n-2) x 2 real blocks, I is right
/// multiplication by the rotation J with J e1 = -e2 (so the flattening
/// (X_{r,0}, X_{r,1}) carries the standard complex structure). The isotropic
/// line representing the base plane is p = e1 + i e2.
inline Model grassmann_or2(int n, int jet_order = 3) {
  require(n >= 4, "grassmann_or2: need n >= 4");
  int rows = n - 2;
  int n_complex = rows;
  KahlerPoint pt = KahlerPoint::standard(n_complex);
  int dim = pt.dim();

  auto to_block = [rows, dim](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X(rows, 2);
    for (int r = 0; r < rows; ++r) {
      X(r, 0) = v[2 * r];
      X(r, 1) = v[2 * r + 1];
    }
    return X;
  };
  auto to_real = [rows, dim](const Eigen::MatrixXd& X) {
    Eigen::VectorXd v(dim);
    for (int r = 0; r < rows; ++r) {
      v[2 * r] = X(r, 0);
      v[2 * r + 1] = X(r, 1);
    }
    return v;
  };

  CurvatureJet jet(pt, jet_order);
  for (int a = 0; a < dim; ++a) {
    Eigen::MatrixXd U = to_block(Eigen::VectorXd::Unit(dim, a));
    for (int b = 0; b < dim; ++b) {
      Eigen::MatrixXd V = to_block(Eigen::VectorXd::Unit(dim, b));
      for (int c = 0; c < dim; ++c) {
        Eigen::MatrixXd W = to_block(Eigen::VectorXd::Unit(dim, c));
        Eigen::MatrixXd R = U * V.transpose() * W - V * U.transpose() * W -
                            W * U.transpose() * V + W * V.transpose() * U;
        jet.r_entry(0, 0, a, b, c) = to_real(R);
      }
    }
  }

  using Cplx = std::complex<double>;
  auto line = [n](const Eigen::VectorXcd& v) {
    Eigen::MatrixXcd P = v * v.adjoint() / v.squaredNorm();
    return P;
  };
  // p = e1 + i e2 as a vector in C^n; Xp lands in the last n-2 coordinates.
  auto xp = [rows](const Eigen::MatrixXd& X) {
    Eigen::VectorXcd w(rows);
    for (int r = 0; r < rows; ++r) w[r] = Cplx(X(r, 0), X(r, 1));
    return w;
  };

  Model model("grassmann_or2(" + std::to_string(n) + ")", pt, jet);
  model.exp_chart = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = to_block(v);
    Eigen::MatrixXd XX = X.transpose() * X;
    Eigen::MatrixXd cosf = detail::sym_fun(XX, [](double l) { return std::cos(std::sqrt(std::max(0.0, l))); });
    Eigen::MatrixXd sinc = detail::sym_fun(XX, [](double l) {
      double s = std::sqrt(std::max(0.0, l));
      return s < 1e-12 ? 1.0 : std::sin(s) / s;
    });
    Eigen::VectorXcd p(2);
    p << Cplx(1, 0), Cplx(0, 1);
    Eigen::VectorXcd out(n);
    out.head(2) = cosf.cast<Cplx>() * p;
    out.tail(rows) = xp(X * sinc);
    return line(out);
  };
  model.knc_chart = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = to_block(v);
    Eigen::VectorXcd w = xp(X);
    Cplx q = (w.array() * w.array()).sum();  // complex bilinear g(Xp, Xp)
    Eigen::VectorXcd out(n);
    out(0) = Cplx(1, 0) - 0.25 * q * Cplx(1, 0);
    out(1) = Cplx(0, 1) - 0.25 * q * Cplx(0, -1);
    out.tail(rows) = w;
    return line(out);
  };
  model.k_inv_closed = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd Y = to_block(v);
    Eigen::MatrixXd YY = Y.transpose() * Y;
    Eigen::MatrixXd cosf = detail::sym_fun(YY, [](double l) { return std::cos(std::sqrt(std::max(0.0, l))); });
    Eigen::MatrixXd sinc = detail::sym_fun(YY, [](double l) {
      double s = std::sqrt(std::max(0.0, l));
      return s < 1e-12 ? 1.0 : std::sin(s) / s;
    });
    return to_real(Eigen::MatrixXd(2.0 / cosf.trace() * (Y * sinc)));
  };
  model.k_closed = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = to_block(v);
    Eigen::MatrixXd XX = X.transpose() * X;
    double t2 = XX.trace();
    double t4 = (XX * XX).trace();
    double tau2 = 1.0 + 0.5 * t2 + 0.125 * t4 - t2 * t2 / 16.0;
    require(tau2 > 0.0, "grassmann_or2: tau^2 <= 0");
    double tau = std::sqrt(tau2);
    Eigen::MatrixXd arg = XX / tau2;
    Eigen::MatrixXd f = detail::sym_fun(arg, [](double l) {
      double s = std::sqrt(std::max(0.0, l));
      require(s < 1.0, "grassmann_or2: arcsin out of domain");
      return s < 1e-12 ? 1.0 : std::asin(s) / s;
    });
    return to_real(Eigen::MatrixXd(X * f / tau));
  };
  model.potential_closed = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = to_block(v);
    Eigen::MatrixXd XX = X.transpose() * X;
    double t2 = XX.trace();
    double t4 = (XX * XX).trace();
    return 2.0 * std::log(1.0 + 0.5 * t2 + 0.125 * t4 - t2 * t2 / 16.0);
  };
  model.phi_inv_closed = [jet, g = pt.metric()](const Eigen::VectorXd& v) {
    return matfun(jet.jacobi_matrix(v), MatFun::SinhSqrtOverSqrt, g);
  };
  return model;
}

/// Twistor space of orthogonal complex structures on R^{2n} at the standard
/// J0; tangent vectors are skew matrices anticommuting with J0, with the
/// metric g(X,Y) = -tr(XY)/2 and I = right multiplication by J0.
inline Model twistor(int n, int jet_order = 3) {
  require(n >= 2, "twistor: need n >= 2");
  int nv = 2 * n;
  Eigen::MatrixXd J0 = Eigen::MatrixXd::Zero(nv, nv);
  for (int j = 0; j < n; ++j) {
    J0(2 * j + 1, 2 * j) = 1.0;
    J0(2 * j, 2 * j + 1) = -1.0;
  }
  auto ip = [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return -0.5 * (A * B).trace();
  };
  // adapted orthonormal basis of skew matrices anticommuting with J0
  std::vector<Eigen::MatrixXd> basis;
  for (int i = 0; i < nv && static_cast<int>(basis.size()) < n * (n - 1); ++i) {
    for (int j = i + 1; j < nv; ++j) {
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nv, nv);
      S(i, j) = 1.0;
      S(j, i) = -1.0;
      Eigen::MatrixXd C = 0.5 * (S + J0 * S * J0);
      for (const auto& B : basis) C -= ip(B, C) * B;
      double nn = std::sqrt(std::max(0.0, ip(C, C)));
      if (nn < 1e-8) continue;
      C /= nn;
      basis.push_back(C);
      Eigen::MatrixXd CI = C * J0;
      for (const auto& B : basis) CI -= ip(B, CI) * B;
      double nn2 = std::sqrt(std::max(0.0, ip(CI, CI)));
      require(nn2 > 1e-8, "twistor: basis pairing degenerated");
      CI /= nn2;
      basis.push_back(CI);
      if (static_cast<int>(basis.size()) >= n * (n - 1)) break;
    }
  }
  int dim = static_cast<int>(basis.size());
  require(dim == n * (n - 1), "twistor: tangent basis construction failed");
  KahlerPoint pt = KahlerPoint::standard(dim / 2);
  auto to_mat = [basis, nv](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(nv, nv);
    for (size_t i = 0; i < basis.size(); ++i) X += v[i] * basis[i];
    return X;
  };
  auto to_coords = [basis, ip, dim](const Eigen::MatrixXd& X) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = ip(basis[i], X);
    return v;
  };

  CurvatureJet jet(pt, jet_order);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      for (int c = 0; c < dim; ++c) {
        Eigen::MatrixXd R =
            -0.25 * ((basis[a] * basis[b] - basis[b] * basis[a]) * basis[c] -
                     basis[c] * (basis[a] * basis[b] - basis[b] * basis[a]));
        jet.r_entry(0, 0, a, b, c) = to_coords(R);
      }

  Model model("twistor(" + std::to_string(n) + ")", pt, jet);
  model.exp_chart = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = to_mat(v);
    Eigen::MatrixXd X2 = X * X;
    Eigen::MatrixXd coshX = detail::sym_fun(X2, [](double l) {
      double s = std::sqrt(std::abs(l));
      return l < 0 ? std::cos(s) : std::cosh(s);
    });
    Eigen::MatrixXd sinhc = detail::sym_fun(X2, [](double l) {
      double s = std::sqrt(std::abs(l));
      if (s < 1e-12) return 1.0;
      return l < 0 ? std::sin(s) / s : std::sinh(s) / s;
    });
    return Eigen::MatrixXcd((coshX * J0 + sinhc * X).cast<std::complex<double>>());
  };
  model.knc_chart = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = to_mat(v);
    Eigen::MatrixXd X2 = X * X;
    Eigen::MatrixXd den = 4.0 * Eigen::MatrixXd::Identity(nv, nv) - X2;
    Eigen::MatrixXd deninv = den.inverse();
    Eigen::MatrixXd J = (4.0 * Eigen::MatrixXd::Identity(nv, nv) + X2) * deninv * J0 +
                        4.0 * deninv * X;
    return Eigen::MatrixXcd(J.cast<std::complex<double>>());
  };
  model.k_inv_closed = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = to_mat(v);
    Eigen::MatrixXd f = detail::sym_fun(X * X, [](double l) {
      double s = std::sqrt(std::abs(l));
      if (s < 1e-12) return 1.0;
      return l < 0 ? std::tan(s / 2.0) / (s / 2.0) : std::tanh(s / 2.0) / (s / 2.0);
    });
    return to_coords(f * X);  // 2 tanh(X/2)
  };
  model.k_closed = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = to_mat(v);
    Eigen::MatrixXd f = detail::sym_fun(X * X, [](double l) {
      double s = std::sqrt(std::abs(l));
      if (s < 1e-12) return 1.0;
      return l < 0 ? std::atan(s / 2.0) / (s / 2.0) : std::atanh(s / 2.0) / (s / 2.0);
    });
    return to_coords(f * X);  // 2 artanh(X/2)
  };
  model.potential_closed = [=](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X = to_mat(v);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X * X);
    double acc = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      acc += std::log(1.0 - 0.25 * es.eigenvalues()[i]);
    return 2.0 * acc;
  };
  model.phi_inv_closed = [jet, g = pt.metric()](const Eigen::VectorXd& v) {
    return matfun(jet.jacobi_matrix(v), MatFun::SinhSqrtOverSqrt, g);
  };
  return model;
}

/// Flat connection with parallel torsion T(X,Y) = -[X,Y] on a Lie algebra
/// given by structure constants. Supported names: "so3", "sl2r".
inline Model lie_group(const std::string& algebra, int jet_order = 3) {
  int dim = 3;
  std::vector<Eigen::MatrixXd> ad(dim, Eigen::MatrixXd::Zero(dim, dim));
  if (algebra == "so3") {
    // [e_i, e_j] = eps_{ijk} e_k
    auto set = [&](int i, int j, int k, double s) { ad[i](k, j) = s; };
    set(0, 1, 2, 1.0); set(1, 0, 2, -1.0);
    set(1, 2, 0, 1.0); set(2, 1, 0, -1.0);
    set(2, 0, 1, 1.0); set(0, 2, 1, -1.0);
  } else if (algebra == "sl2r") {
    // basis (H, E, F): [H,E] = 2E, [H,F] = -2F, [E,F] = H
    ad[0](1, 1) = 2.0;   // [H, E] = 2E
    ad[0](2, 2) = -2.0;  // [H, F] = -2F
    ad[1](0, 2) = 1.0;   // [E, F] = H
    ad[2](0, 1) = -1.0;  // [F, E] = -H
    ad[1](1, 0) = -2.0;  // [E, H] = -2E
    ad[2](2, 0) = 2.0;   // [F, H] = 2F
  } else {
    throw std::invalid_argument("lie_group: unknown algebra " + algebra);
  }
  KahlerPoint pt = KahlerPoint::affine(dim);
  CurvatureJet jet(pt, 0, JetMode::AffineTorsion);
  jet.ensure_torsion(jet_order);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) jet.t_entry(0, 0, a, b) = -ad[a].col(b);  // T = -[.,.]
  Model model("lie_group(" + algebra + ")", pt, jet);
  model.symmetric = false;
  model.phi_inv_closed = [ad, dim](const Eigen::VectorXd& v) {
    Eigen::MatrixXd adX = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) adX += v[i] * ad[i];
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(dim, dim);
    for (int m = 0; m <= 30; ++m) {
      if (m > 0) p = p * (-adX);
      acc += p / MonomialBasis::factorial(m + 1);
    }
    return acc;
  };
  return model;
}

/// Registry entry point used by the CLI: name in {grassmann_c, grassmann_or2,
/// twistor, lie_group} with integer or string parameters.
inline Model model_zoo(const std::string& name, const std::vector<std::string>& params,
                       int jet_order = 3) {
  auto as_int = [](const std::string& s) { return std::stoi(s); };
  if (name == "grassmann_c") {
    require(params.size() == 2, "grassmann_c needs parameters k,m");
    return grassmann_c(as_int(params[0]), as_int(params[1]), jet_order);
  }
  if (name == "grassmann_or2") {
    require(params.size() == 1, "grassmann_or2 needs parameter n");
    return grassmann_or2(as_int(params[0]), jet_order);
  }
  if (name == "twistor") {
    require(params.size() == 1, "twistor needs parameter n");
    return twistor(as_int(params[0]), jet_order);
  }
  if (name == "lie_group") {
    require(params.size() == 1, "lie_group needs an algebra name");
    return lie_group(params[0], jet_order);
  }
  throw std::invalid_argument("unknown model: " + name);
}

}  // namespace kjet

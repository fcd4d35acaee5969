#pragma once

// Small dense kernels for linear SDEs with additive noise:
//   dX = A X dt + B dW
// whose exact transition over a step dt is X' = e^{A dt} X + xi, xi ~ N(0, C(dt)),
// with C solving C' = A C + C A^T + B B^T, C(0) = 0.

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "mpabc/errors.hpp"
#include "mpabc/types.hpp"

namespace mpabc {

namespace detail {

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& a, const char* what) {
  if (a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << what << ": expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw DimensionError(msg.str());
  }
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& a, const char* what) {
  if (!a.allFinite()) throw DomainError(std::string(what) + ": matrix has non-finite entries");
}

template <typename Derived>
bool is_diagonal(const Eigen::MatrixBase<Derived>& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j && a(i, j) != typename Derived::Scalar(0)) return false;
  return true;
}

template <typename T>
T one_norm(const MatrixX<T>& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Diagonal Pade approximant r_m(a) of degree m in {3, 5, 7, 9, 13}.
template <typename T>
MatrixX<T> pade(const MatrixX<T>& a, int degree) {
  static constexpr double b3[] = {120., 60., 12., 1.};
  static constexpr double b5[] = {30240., 15120., 3360., 420., 30., 1.};
  static constexpr double b7[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  static constexpr double b9[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                  2162160.,     110880.,      3960.,        90.,        1.};
  static constexpr double b13[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                                   1187353796428800.,  129060195264000.,   10559470521600.,
                                   670442572800.,      33522128640.,       1323241920.,
                                   40840800.,          960960.,            16380.,
                                   182.,               1.};
  const Eigen::Index n = a.rows();
  const MatrixX<T> id = MatrixX<T>::Identity(n, n);
  const MatrixX<T> a2 = a * a;
  MatrixX<T> u, v;
  if (degree == 13) {
    const MatrixX<T> a4 = a2 * a2;
    const MatrixX<T> a6 = a4 * a2;
    const auto b = [](int k) { return T(b13[k]); };
    MatrixX<T> inner_u = a6 * (b(13) * a6 + b(11) * a4 + b(9) * a2);
    inner_u += b(7) * a6 + b(5) * a4 + b(3) * a2 + b(1) * id;
    u = a * inner_u;
    v = a6 * (b(12) * a6 + b(10) * a4 + b(8) * a2);
    v += b(6) * a6 + b(4) * a4 + b(2) * a2 + b(0) * id;
  } else {
    const double* b = degree == 3 ? b3 : degree == 5 ? b5 : degree == 7 ? b7 : b9;
    MatrixX<T> power = id;
    MatrixX<T> odd = T(b[1]) * id;
    v = T(b[0]) * id;
    for (int k = 2; k <= degree; k += 2) {
      power = power * a2;
      v += T(b[k]) * power;
      odd += T(b[k + 1]) * power;
    }
    u = a * odd;
  }
  return (v - u).partialPivLu().solve(v + u);
}

} // namespace detail

/// e^{a t} by scaling and squaring with Pade approximants (degree 13 for all
/// but small norms). Diagonal input is exponentiated entrywise.
template <typename Derived>
MatrixX<typename Derived::Scalar> matrix_exp(const Eigen::MatrixBase<Derived>& a,
                                             typename Derived::Scalar t = 1) {
  using T = typename Derived::Scalar;
  using std::exp;
  using std::isfinite;
  detail::require_square(a, "matrix_exp");
  detail::require_finite(a, "matrix_exp");
  if (!isfinite(t)) throw DomainError("matrix_exp: non-finite time");

  const Eigen::Index n = a.rows();
  if (detail::is_diagonal(a)) {
    MatrixX<T> out = MatrixX<T>::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) out(i, i) = exp(a(i, i) * t);
    return out;
  }

  MatrixX<T> scaled = a * t;
  const T norm = detail::one_norm(scaled);
  constexpr double theta[] = {1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
                              2.097847961257068e0};
  constexpr int degrees[] = {3, 5, 7, 9};
  for (int k = 0; k < 4; ++k)
    if (norm <= T(theta[k])) return detail::pade(scaled, degrees[k]);

  constexpr double theta13 = 5.371920351148152;
  int squarings = 0;
  if (norm > T(theta13))
    squarings = static_cast<int>(std::ceil(std::log2(static_cast<double>(norm) / theta13)));
  scaled /= std::ldexp(1.0, squarings);
  MatrixX<T> out = detail::pade(scaled, 13);
  for (int k = 0; k < squarings; ++k) out = (out * out).eval();
  return out;
}

/// Covariance C(dt) of the Gaussian increment of dX = A X dt + B dW over dt.
///
/// Van Loan's block exponential exp([[A, BB'], [0, -A']] h) yields C(h) as
/// F12 * F11'. The block -A' grows like e^{|A| h}, so h is taken as dt / 2^s
/// with |A| h <= 1 and the result is doubled back with
///   C(2h) = C(h) + e^{Ah} C(h) e^{A'h},
/// which only ever adds PSD terms.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> increment_covariance(const Eigen::MatrixBase<DerivedA>& a,
                                                        const Eigen::MatrixBase<DerivedB>& b,
                                                        typename DerivedA::Scalar dt) {
  using T = typename DerivedA::Scalar;
  using std::isfinite;
  detail::require_square(a, "increment_covariance");
  if (b.rows() != a.rows()) {
    std::ostringstream msg;
    msg << "increment_covariance: noise matrix has " << b.rows() << " rows, drift is " << a.rows()
        << "x" << a.cols();
    throw DimensionError(msg.str());
  }
  detail::require_finite(a, "increment_covariance");
  detail::require_finite(b, "increment_covariance");
  if (!(dt > T(0)) || !isfinite(dt)) throw DomainError("increment_covariance: dt must be positive");

  const Eigen::Index n = a.rows();
  const MatrixX<T> q = b * b.transpose();
  const T drift_norm = detail::one_norm(MatrixX<T>(a)) * dt;
  int doublings = 0;
  if (drift_norm > T(1)) doublings = static_cast<int>(std::ceil(std::log2(static_cast<double>(drift_norm))));
  const T h = dt / T(std::ldexp(1.0, doublings));

  MatrixX<T> block = MatrixX<T>::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, n) = q;
  block.bottomRightCorner(n, n) = -a.transpose();
  const MatrixX<T> f = matrix_exp(block, h);

  MatrixX<T> propagator = f.topLeftCorner(n, n);
  MatrixX<T> cov = f.topRightCorner(n, n) * propagator.transpose();
  cov = (T(0.5) * (cov + cov.transpose())).eval();
  for (int k = 0; k < doublings; ++k) {
    cov += propagator * cov * propagator.transpose();
    cov = (T(0.5) * (cov + cov.transpose())).eval();
    propagator = (propagator * propagator).eval();
  }
  return cov;
}

/// Lower-triangular L with L L' = c for symmetric positive semidefinite c.
///
/// A non-positive pivot triggers one retry on c + (1e-14 trace(c)/n) I. Pivots
/// that stay within -1e-10 max|c| of zero are treated as exact zeros (rank
/// deficiency). Anything more negative is reported as indefinite.
template <typename Derived>
MatrixX<typename Derived::Scalar> cholesky_psd(const Eigen::MatrixBase<Derived>& c) {
  using T = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;
  detail::require_square(c, "cholesky_psd");
  detail::require_finite(c, "cholesky_psd");
  const Eigen::Index n = c.rows();
  const T scale = n > 0 ? c.cwiseAbs().maxCoeff() : T(0);
  if (n > 0 && (c - c.transpose()).cwiseAbs().maxCoeff() > T(1e-12) * scale)
    throw DomainError("cholesky_psd: matrix is not symmetric");
  const T zero_tol = T(1e-10) * scale;

  const auto factor = [&](const MatrixX<T>& m, bool allow_zero_pivots, MatrixX<T>& l) {
    l.setZero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const T pivot = m(j, j) - l.row(j).head(j).squaredNorm();
      if (pivot > T(0)) {
        const T root = sqrt(pivot);
        l(j, j) = root;
        for (Eigen::Index i = j + 1; i < n; ++i)
          l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / root;
      } else if (!allow_zero_pivots || pivot < -zero_tol) {
        return false;
      }
    }
    return true;
  };

  MatrixX<T> l;
  if (factor(MatrixX<T>(c), false, l)) return l;
  const T shift = n > 0 ? T(1e-14) * c.trace() / T(n) : T(0);
  MatrixX<T> shifted = c;
  if (shift > T(0)) shifted.diagonal().array() += shift;
  if (factor(shifted, true, l)) return l;

  Eigen::SelfAdjointEigenSolver<MatrixX<T>> eig(MatrixX<T>(c), Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << "cholesky_psd: matrix is indefinite, smallest eigenvalue estimate "
      << static_cast<double>(eig.eigenvalues().minCoeff());
  throw NumericError(msg.str());
}

} // namespace mpabc

#pragma once

// Dense real linear algebra used by the symmetry machinery: subspace
// extraction, rank-one operators, a norm bound and the matrix exponential.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "algadv/errors.hpp"

namespace algadv {

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr double kDefaultExpTol = 1e-15;

/// Orthonormal basis of a subspace of R^n, stored as the columns of `vectors`.
/// A basis with zero columns represents the trivial subspace.
template <class Scalar>
struct SubspaceBasis {
  Matrix<Scalar> vectors;  // ambient_dim x count
  Eigen::Index ambient_dim = 0;
  Scalar tol = Scalar(kDefaultRankTol);

  Eigen::Index count() const { return vectors.cols(); }
  bool empty() const { return vectors.cols() == 0; }
  auto vector(Eigen::Index i) const { return vectors.col(i); }

  /// max_ij |<v_i, v_j> - delta_ij|
  Scalar orthonormality_error() const {
    if (empty()) return Scalar(0);
    const Matrix<Scalar> gram = vectors.transpose() * vectors;
    return (gram - Matrix<Scalar>::Identity(count(), count())).cwiseAbs().maxCoeff();
  }
};

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

namespace detail {

template <class Scalar>
struct RankRevealing {
  Eigen::Index rank = 0;
  Matrix<Scalar> v;  // full right singular basis, n x n
};

// Numerical rank at relative threshold tol * sigma_max.
template <class Scalar>
RankRevealing<Scalar> rank_reveal(const Matrix<Scalar>& w, Scalar tol) {
  require_finite(w, "rank_reveal");
  if (!(tol > Scalar(0))) throw InvalidInput("rank tolerance must be positive");
  const Eigen::Index n = w.cols();
  RankRevealing<Scalar> out;
  if (w.rows() == 0 || n == 0) {
    out.v = Matrix<Scalar>::Identity(n, n);
    return out;
  }
  Eigen::JacobiSVD<Matrix<Scalar>> svd(w, Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  const Scalar smax = sigma.size() ? sigma(0) : Scalar(0);
  if (smax > Scalar(0)) {
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      if (sigma(i) > tol * smax) ++out.rank;
  }
  out.v = svd.matrixV();
  return out;
}

}  // namespace detail

/// Orthonormal basis of the row space of `w`.
template <class Scalar>
SubspaceBasis<Scalar> row_space_basis(const Matrix<Scalar>& w, Scalar tol = Scalar(kDefaultRankTol)) {
  auto rr = detail::rank_reveal(w, tol);
  return {rr.v.leftCols(rr.rank), w.cols(), tol};
}

/// Orthonormal basis of ker(w); its dimension is n - rank(w).
template <class Scalar>
SubspaceBasis<Scalar> kernel_basis(const Matrix<Scalar>& w, Scalar tol = Scalar(kDefaultRankTol)) {
  auto rr = detail::rank_reveal(w, tol);
  return {rr.v.rightCols(w.cols() - rr.rank), w.cols(), tol};
}

template <class Scalar>
Eigen::Index numerical_rank(const Matrix<Scalar>& w, Scalar tol = Scalar(kDefaultRankTol)) {
  return detail::rank_reveal(w, tol).rank;
}

/// Orthonormal basis of the orthogonal complement of span(b) in R^n.
template <class Scalar>
SubspaceBasis<Scalar> orthogonal_complement(const SubspaceBasis<Scalar>& b) {
  const Eigen::Index n = b.ambient_dim;
  require_finite(b.vectors, "orthogonal_complement");
  require_dims(b.vectors.rows() == n, "orthogonal_complement: basis vectors do not match ambient dim");
  if (b.count() > n) throw InvalidInput("orthogonal_complement: more vectors than ambient dimension");
  if (b.orthonormality_error() > std::max(b.tol, Scalar(1e-8)))
    throw InvalidInput("orthogonal_complement: basis is not orthonormal");
  if (b.empty()) return {Matrix<Scalar>::Identity(n, n), n, b.tol};
  Eigen::HouseholderQR<Matrix<Scalar>> qr(b.vectors);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(n, n);
  return {q.rightCols(n - b.count()), n, b.tol};
}

/// The rank-one operator z -> <y, z> x, i.e. x y^t.
template <class DerivedX, class DerivedY>
auto rank_one(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  require_dims(x.size() == y.size(), "rank_one: x and y must share dimension");
  return Matrix<Scalar>(x * y.transpose());
}

/// Frobenius norm; an upper bound on the spectral norm.
template <class Derived>
typename Derived::Scalar operator_norm_upper(const Eigen::MatrixBase<Derived>& a) {
  return a.norm();
}

/// exp(a) by scaling and squaring a truncated Taylor series. The argument is
/// scaled by 2^-s until its Frobenius norm is at most 1/2, the series is summed
/// until the next term is below tol relative to the partial sum, and the result
/// is squared s times.
template <class Scalar>
Matrix<Scalar> matrix_exp(const Matrix<Scalar>& a, Scalar tol = Scalar(kDefaultExpTol)) {
  require_dims(a.rows() == a.cols(), "matrix_exp: matrix must be square");
  require_finite(a, "matrix_exp");
  if (!(tol > Scalar(0))) throw InvalidInput("matrix_exp: tol must be positive");
  const Eigen::Index n = a.rows();
  const Scalar norm = operator_norm_upper(a);
  int squarings = 0;
  if (norm > Scalar(0.5)) squarings = static_cast<int>(std::ceil(std::log2(norm / Scalar(0.5))));
  const Matrix<Scalar> scaled = a / std::ldexp(Scalar(1), squarings);

  Matrix<Scalar> sum = Matrix<Scalar>::Identity(n, n);
  Matrix<Scalar> term = Matrix<Scalar>::Identity(n, n);
  constexpr int kMaxTerms = 200;
  for (int k = 1; k <= kMaxTerms; ++k) {
    term = (term * scaled) / Scalar(k);
    sum += term;
    if (term.norm() <= tol * sum.norm()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = (sum * sum).eval();
  return sum;
}

}  // namespace algadv

#pragma once

// Symmetry groups of x -> f(W x + b): the stabilizer P_W of the row space
// (generated through its Lie algebra), its orthogonal part, and ker(W)
// acting by translation.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "algadv/errors.hpp"
#include "algadv/linalg.hpp"
#include "algadv/network.hpp"

namespace algadv {

enum class AlgebraKind { kFull, kSkew };

/// Generators of the Lie algebra of P_W (kFull) or of P_W intersected with
/// O(n) (kSkew). Every generator annihilates the row space of W.
template <class Scalar>
struct LieAlgebraBasis {
  AlgebraKind kind = AlgebraKind::kFull;
  std::vector<Matrix<Scalar>> generators;
  SubspaceBasis<Scalar> row_space;
  SubspaceBasis<Scalar> w_perp;

  std::size_t count() const { return generators.size(); }
  Eigen::Index ambient_dim() const { return row_space.ambient_dim; }
};

enum class SymmetryKind { kLinear, kTranslation };

template <class Scalar>
struct SymmetryElement {
  SymmetryKind kind = SymmetryKind::kLinear;
  Matrix<Scalar> g;  // linear: n x n
  Vector<Scalar> u;  // translation: n

  // How the element was produced: g = exp(scale * generator) with
  // generator = sum_i coeffs[i] * G_i, or u = scale * (unit direction).
  Matrix<Scalar> generator;
  std::vector<Scalar> coeffs;
  Scalar scale = Scalar(0);
  std::uint64_t seed = 0;

  /// The transformed input: g^t x for linear elements, x - u for translations.
  Vector<Scalar> transform(const Vector<Scalar>& x) const {
    if (kind == SymmetryKind::kLinear) {
      require_dims(g.cols() == x.size(), "symmetry element dimension mismatch");
      return g.transpose() * x;
    }
    require_dims(u.size() == x.size(), "symmetry element dimension mismatch");
    return x - u;
  }

  Eigen::Index dim() const { return kind == SymmetryKind::kLinear ? g.rows() : u.size(); }
};

template <class Scalar>
SymmetryElement<Scalar> identity_element(Eigen::Index n) {
  SymmetryElement<Scalar> e;
  e.g = Matrix<Scalar>::Identity(n, n);
  e.generator = Matrix<Scalar>::Zero(n, n);
  return e;
}

/// Lie algebra of P_W: span of the rank-one operators e_i y^t with y running
/// over an orthonormal basis of the complement of the row space. Generators are
/// ordered complement-vector-major, so there are n (n - r) of them.
template <class Scalar>
OrEmpty<LieAlgebraBasis<Scalar>> lie_algebra_pW(const Matrix<Scalar>& w, Scalar tol = Scalar(kDefaultRankTol)) {
  LieAlgebraBasis<Scalar> basis;
  basis.kind = AlgebraKind::kFull;
  basis.row_space = row_space_basis(w, tol);
  basis.w_perp = orthogonal_complement(basis.row_space);
  const Eigen::Index n = w.cols();
  if (basis.w_perp.empty())
    return EmptyAlgebra{"network has trivial symmetry group (dim W = n = " + std::to_string(n) + ")"};
  for (Eigen::Index j = 0; j < basis.w_perp.count(); ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      basis.generators.push_back(rank_one(Vector<Scalar>::Unit(n, i), basis.w_perp.vector(j)));
  return basis;
}

/// Skew-symmetric generators y_i y_j^t - y_j y_i^t (i < j) over the complement
/// of the row space; their exponentials lie in P_W intersected with O(n).
template <class Scalar>
OrEmpty<LieAlgebraBasis<Scalar>> lie_algebra_pW_skew(const Matrix<Scalar>& w,
                                                      Scalar tol = Scalar(kDefaultRankTol)) {
  LieAlgebraBasis<Scalar> basis;
  basis.kind = AlgebraKind::kSkew;
  basis.row_space = row_space_basis(w, tol);
  basis.w_perp = orthogonal_complement(basis.row_space);
  const Eigen::Index q = basis.w_perp.count();
  if (q < 2)
    return EmptyAlgebra{"rotation symmetry group is trivial (n - r = " + std::to_string(q) + " < 2)"};
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = i + 1; j < q; ++j) {
      const auto yi = basis.w_perp.vector(i);
      const auto yj = basis.w_perp.vector(j);
      basis.generators.push_back(rank_one(yi, yj) - rank_one(yj, yi));
    }
  }
  return basis;
}

template <class Scalar>
Matrix<Scalar> combine_generators(const LieAlgebraBasis<Scalar>& basis, const std::vector<Scalar>& coeffs) {
  require_dims(coeffs.size() == basis.count(), "coefficient count must match generator count");
  const Eigen::Index n = basis.ambient_dim();
  Matrix<Scalar> a = Matrix<Scalar>::Zero(n, n);
  for (std::size_t i = 0; i < coeffs.size(); ++i) a += coeffs[i] * basis.generators[i];
  return a;
}

/// g = exp(scale * sum_i coeffs[i] G_i).
template <class Scalar>
OrEmpty<SymmetryElement<Scalar>> sample_group_element(const LieAlgebraBasis<Scalar>& basis,
                                                       const std::vector<Scalar>& coeffs, Scalar scale) {
  if (basis.generators.empty()) return EmptyAlgebra{"empty Lie algebra basis"};
  SymmetryElement<Scalar> e;
  e.kind = SymmetryKind::kLinear;
  e.generator = combine_generators(basis, coeffs);
  e.coeffs = coeffs;
  e.scale = scale;
  e.g = matrix_exp(Matrix<Scalar>(scale * e.generator));
  return e;
}

/// u = epsilon * (seeded uniformly random unit vector in ker(W)).
template <class Scalar>
OrEmpty<SymmetryElement<Scalar>> sample_kernel_translation(const Matrix<Scalar>& w, std::uint64_t seed,
                                                            Scalar epsilon, Scalar tol = Scalar(kDefaultRankTol)) {
  if (!(epsilon >= Scalar(0))) throw InvalidInput("epsilon must be non-negative");
  const auto kernel = kernel_basis(w, tol);
  if (kernel.empty()) return EmptyAlgebra{"ker(W) is trivial (W has full column rank)"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<Scalar> c(kernel.count());
  do {
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = Scalar(normal(rng));
  } while (c.norm() == Scalar(0));
  Vector<Scalar> direction = kernel.vectors * c;
  direction /= direction.norm();

  SymmetryElement<Scalar> e;
  e.kind = SymmetryKind::kTranslation;
  e.u = epsilon * direction;
  // keep |u| <= epsilon despite rounding in the normalization
  while (e.u.norm() > epsilon) e.u *= Scalar(1) - Scalar(4) * std::numeric_limits<Scalar>::epsilon();
  e.scale = epsilon;
  e.seed = seed;
  e.coeffs.assign(c.data(), c.data() + c.size());
  return e;
}

struct SymmetryCheck {
  double max_residual = 0.0;
  bool passed = true;
};

/// Max over standard-normal inputs of |F(transformed x) - F(x)|.
template <class Scalar>
SymmetryCheck verify_symmetry(const SymmetryElement<Scalar>& elem, const MlpNetwork<Scalar>& net, int n_samples,
                              double tol, std::uint64_t seed = 0) {
  require_dims(elem.dim() == net.input_dim(), "verify_symmetry: element and network dimensions differ");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SymmetryCheck check;
  Vector<Scalar> x(net.input_dim());
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = Scalar(normal(rng));
    const double r = static_cast<double>((forward(net, elem.transform(x)) - forward(net, x)).norm());
    check.max_residual = std::max(check.max_residual, r);
  }
  check.passed = check.max_residual <= tol;
  return check;
}

/// g expressed in the orthonormal basis [row space | complement]. For g in P_W
/// the top-left r x r block is the identity and the bottom-left block is zero.
template <class Scalar>
Matrix<Scalar> adapted_block_form(const Matrix<Scalar>& g, const SubspaceBasis<Scalar>& row_space,
                                  const SubspaceBasis<Scalar>& w_perp) {
  const Eigen::Index n = row_space.ambient_dim;
  require_dims(g.rows() == n && g.cols() == n, "adapted_block_form: g must be n x n");
  Matrix<Scalar> q(n, n);
  q << row_space.vectors, w_perp.vectors;
  return q.transpose() * g * q;
}

}  // namespace algadv

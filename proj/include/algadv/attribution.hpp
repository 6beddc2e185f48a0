#pragma once

// Path attribution methods and integrated gradients with explicit quadrature.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <utility>
#include <variant>
#include <vector>

#include "algadv/errors.hpp"
#include "algadv/linalg.hpp"
#include "algadv/network.hpp"

namespace algadv {

enum class QuadratureScheme { kMidpointRiemann, kTrapezoid, kGaussLegendre };

struct QuadratureSpec {
  QuadratureScheme scheme = QuadratureScheme::kGaussLegendre;
  int steps = 64;
};

/// Nodes and weights on [0, 1].
template <class Scalar>
struct QuadratureRule {
  std::vector<Scalar> nodes;
  std::vector<Scalar> weights;
};

namespace detail {

template <class Scalar>
QuadratureRule<Scalar> gauss_legendre_rule(int n) {
  using std::abs;
  using std::cos;
  const Scalar pi = Scalar(3.14159265358979323846264338327950288L);
  QuadratureRule<Scalar> rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  // Newton iteration on P_n from the Tricomi initial guesses; roots come in
  // symmetric pairs so only half are solved for.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar z = cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = Scalar(0);
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = Scalar(1);
      Scalar p1 = z;
      for (int k = 2; k <= n; ++k) {
        const Scalar pk = ((Scalar(2 * k - 1)) * z * p1 - Scalar(k - 1) * p0) / Scalar(k);
        p0 = p1;
        p1 = pk;
      }
      dp = Scalar(n) * (z * p1 - p0) / (z * z - Scalar(1));
      const Scalar dz = p1 / dp;
      z -= dz;
      if (abs(dz) <= Scalar(4) * std::numeric_limits<Scalar>::epsilon()) break;
    }
    // recompute the derivative at the converged root
    Scalar p0 = Scalar(1);
    Scalar p1 = z;
    for (int k = 2; k <= n; ++k) {
      const Scalar pk = ((Scalar(2 * k - 1)) * z * p1 - Scalar(k - 1) * p0) / Scalar(k);
      p0 = p1;
      p1 = pk;
    }
    dp = Scalar(n) * (z * p1 - p0) / (z * z - Scalar(1));
    const Scalar w = Scalar(2) / ((Scalar(1) - z * z) * dp * dp);
    // map [-1, 1] -> [0, 1]; ascending order
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = (Scalar(1) - z) / Scalar(2);
    rule.nodes[hi] = (Scalar(1) + z) / Scalar(2);
    rule.weights[lo] = w / Scalar(2);
    rule.weights[hi] = w / Scalar(2);
  }
  return rule;
}

}  // namespace detail

template <class Scalar>
QuadratureRule<Scalar> make_quadrature_rule(const QuadratureSpec& spec) {
  if (spec.steps < 1) throw InvalidInput("quadrature steps must be >= 1");
  const int n = spec.steps;
  QuadratureRule<Scalar> rule;
  switch (spec.scheme) {
    case QuadratureScheme::kMidpointRiemann:
      for (int i = 0; i < n; ++i) {
        rule.nodes.push_back((Scalar(i) + Scalar(0.5)) / Scalar(n));
        rule.weights.push_back(Scalar(1) / Scalar(n));
      }
      break;
    case QuadratureScheme::kTrapezoid:
      for (int i = 0; i <= n; ++i) {
        rule.nodes.push_back(Scalar(i) / Scalar(n));
        rule.weights.push_back((i == 0 || i == n ? Scalar(0.5) : Scalar(1)) / Scalar(n));
      }
      break;
    case QuadratureScheme::kGaussLegendre:
      rule = detail::gauss_legendre_rule<Scalar>(n);
      break;
  }
  return rule;
}

/// Memoized rule lookup; rules are immutable once built.
template <class Scalar>
const QuadratureRule<Scalar>& quadrature_rule(const QuadratureSpec& spec) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, QuadratureRule<Scalar>> cache;
  const std::pair<int, int> key{static_cast<int>(spec.scheme), spec.steps};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make_quadrature_rule<Scalar>(spec)).first;
  return it->second;
}

/// gamma(t) = baseline + t (input - baseline), t in [0, 1].
template <class Scalar>
struct StraightPath {
  Vector<Scalar> baseline;
  Vector<Scalar> input;
};

/// A path known only at grid points t_0 < ... < t_k of I = [t_0, t_k],
/// integrated with the trapezoid rule on that grid.
template <class Scalar>
struct SampledPath {
  std::vector<Scalar> grid;
  std::vector<Vector<Scalar>> points;
  std::vector<Vector<Scalar>> derivatives;
};

template <class Scalar>
using PathSpec = std::variant<StraightPath<Scalar>, SampledPath<Scalar>>;

template <class Scalar>
struct AttributionVector {
  Vector<Scalar> values;
  Vector<Scalar> baseline;
  Vector<Scalar> input;
  Eigen::Index out_index = 0;
};

namespace detail {

template <class Scalar>
void validate_path(const StraightPath<Scalar>& p, Eigen::Index n) {
  require_dims(p.baseline.size() == n && p.input.size() == n, "straight path endpoints must match network input");
  require_finite(p.baseline, "path baseline");
  require_finite(p.input, "path input");
}

template <class Scalar>
void validate_path(const SampledPath<Scalar>& p, Eigen::Index n) {
  if (p.grid.size() < 2) throw InvalidInput("sampled path needs at least two grid points");
  require_dims(p.points.size() == p.grid.size() && p.derivatives.size() == p.grid.size(),
               "sampled path points/derivatives must match grid");
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    if (!std::isfinite(static_cast<double>(p.grid[i]))) throw InvalidInput("sampled path grid not finite");
    if (i > 0 && !(p.grid[i] > p.grid[i - 1])) throw InvalidInput("sampled path grid must be strictly increasing");
    require_dims(p.points[i].size() == n && p.derivatives[i].size() == n, "sampled path dimension mismatch");
    require_finite(p.points[i], "sampled path point");
    require_finite(p.derivatives[i], "sampled path derivative");
  }
}

// Visits each (gradient at gamma(t), gamma'(t), weight) triple in a fixed order.
template <class Scalar, class Fn>
void for_each_path_node(const MlpNetwork<Scalar>& net, Eigen::Index out_index, const PathSpec<Scalar>& path,
                        const QuadratureSpec& quad, Fn&& fn) {
  const Eigen::Index n = net.input_dim();
  if (const auto* line = std::get_if<StraightPath<Scalar>>(&path)) {
    validate_path(*line, n);
    const Vector<Scalar> delta = line->input - line->baseline;
    const auto& rule = quadrature_rule<Scalar>(quad);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const Vector<Scalar> point = line->baseline + rule.nodes[j] * delta;
      fn(gradient(net, point, out_index), delta, rule.weights[j]);
    }
    return;
  }
  const auto& sampled = std::get<SampledPath<Scalar>>(path);
  validate_path(sampled, n);
  const std::size_t k = sampled.grid.size();
  for (std::size_t j = 0; j < k; ++j) {
    Scalar w = Scalar(0);
    if (j > 0) w += (sampled.grid[j] - sampled.grid[j - 1]) / Scalar(2);
    if (j + 1 < k) w += (sampled.grid[j + 1] - sampled.grid[j]) / Scalar(2);
    fn(gradient(net, sampled.points[j], out_index), sampled.derivatives[j], w);
  }
}

template <class Scalar>
void require_unit(const Vector<Scalar>& v) {
  using std::abs;
  require_finite(v, "direction");
  if (abs(v.norm() - Scalar(1)) > Scalar(1e-10)) throw InvalidInput("direction v must have unit norm");
}

template <class Scalar>
void require_orthonormal_basis(const Matrix<Scalar>& basis, Eigen::Index n) {
  require_dims(basis.rows() == n && basis.cols() == n, "basis must contain n vectors of dimension n");
  require_finite(basis, "basis");
  const Matrix<Scalar> gram = basis.transpose() * basis;
  if ((gram - Matrix<Scalar>::Identity(n, n)).cwiseAbs().maxCoeff() > Scalar(1e-10))
    throw InvalidInput("basis is not orthonormal");
}

}  // namespace detail

/// Quadrature approximation of the integral of <grad F(gamma(t)), v> <gamma'(t), v>.
template <class Scalar>
Scalar path_attribution_component(const MlpNetwork<Scalar>& net, Eigen::Index out_index, const PathSpec<Scalar>& path,
                                  const Vector<Scalar>& v, const QuadratureSpec& quad = {}) {
  detail::require_unit(v);
  require_dims(v.size() == net.input_dim(), "direction dimension mismatch");
  Scalar total = Scalar(0);
  detail::for_each_path_node(net, out_index, path, quad,
                             [&](const Vector<Scalar>& grad, const Vector<Scalar>& velocity, Scalar w) {
                               total += w * grad.dot(v) * velocity.dot(v);
                             });
  return total;
}

/// Sum over an orthonormal basis {v_i} (columns of `basis`) of A_{v_i} v_i.
template <class Scalar>
AttributionVector<Scalar> path_attribution(const MlpNetwork<Scalar>& net, Eigen::Index out_index,
                                           const PathSpec<Scalar>& path, const Matrix<Scalar>& basis,
                                           const QuadratureSpec& quad = {}) {
  const Eigen::Index n = net.input_dim();
  detail::require_orthonormal_basis(basis, n);
  Vector<Scalar> components = Vector<Scalar>::Zero(n);
  detail::for_each_path_node(net, out_index, path, quad,
                             [&](const Vector<Scalar>& grad, const Vector<Scalar>& velocity, Scalar w) {
                               const Vector<Scalar> gv = basis.transpose() * grad;
                               const Vector<Scalar> dv = basis.transpose() * velocity;
                               components += w * gv.cwiseProduct(dv);
                             });
  AttributionVector<Scalar> out;
  out.values = basis * components;
  out.out_index = out_index;
  if (const auto* line = std::get_if<StraightPath<Scalar>>(&path)) {
    out.baseline = line->baseline;
    out.input = line->input;
  } else {
    const auto& s = std::get<SampledPath<Scalar>>(path);
    out.baseline = s.points.front();
    out.input = s.points.back();
  }
  return out;
}

/// (x - x') Hadamard the quadrature of the integral of grad F(x' + t (x - x')) over [0, 1].
template <class Scalar>
AttributionVector<Scalar> integrated_gradients(const MlpNetwork<Scalar>& net, Eigen::Index out_index,
                                               const Vector<Scalar>& x, const Vector<Scalar>& x_prime,
                                               const QuadratureSpec& quad = {}) {
  const Eigen::Index n = net.input_dim();
  const StraightPath<Scalar> line{x_prime, x};
  detail::validate_path(line, n);
  const Vector<Scalar> delta = x - x_prime;
  const auto& rule = quadrature_rule<Scalar>(quad);
  Vector<Scalar> integral = Vector<Scalar>::Zero(n);
  for (std::size_t j = 0; j < rule.nodes.size(); ++j)
    integral += rule.weights[j] * gradient(net, Vector<Scalar>(x_prime + rule.nodes[j] * delta), out_index);
  return {delta.cwiseProduct(integral), x_prime, x, out_index};
}

struct DivergenceReport {
  double l2_relative = 0.0;
  double cosine = 1.0;
  double topk_jaccard = 1.0;
  int k = 1;
};

inline constexpr double kDivergenceGuard = 1e-12;

namespace detail {

template <class Scalar>
std::vector<Eigen::Index> topk_indices(const Vector<Scalar>& a, int k) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(a.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // ties broken by index so the set is deterministic
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return std::abs(a(i)) > std::abs(a(j)); });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

/// Relative L2 distance, cosine similarity and top-k Jaccard overlap of |values|.
/// Cosine is 1 when both vectors vanish and 0 when exactly one does.
template <class Scalar>
DivergenceReport attribution_distance(const Vector<Scalar>& a, const Vector<Scalar>& b, int k = 3) {
  require_dims(a.size() == b.size(), "attribution_distance: dimension mismatch");
  DivergenceReport r;
  const double na = static_cast<double>(a.norm());
  const double nb = static_cast<double>(b.norm());
  r.l2_relative = static_cast<double>((a - b).norm()) / std::max({na, nb, kDivergenceGuard});
  if (na < kDivergenceGuard && nb < kDivergenceGuard)
    r.cosine = 1.0;
  else if (na < kDivergenceGuard || nb < kDivergenceGuard)
    r.cosine = 0.0;
  else
    r.cosine = static_cast<double>(a.dot(b)) / (na * nb);
  r.k = static_cast<int>(std::clamp<Eigen::Index>(k, 1, std::max<Eigen::Index>(a.size(), 1)));
  if (a.size() == 0) return r;
  const auto ta = detail::topk_indices(a, r.k);
  const auto tb = detail::topk_indices(b, r.k);
  std::vector<Eigen::Index> inter;
  std::vector<Eigen::Index> uni;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(inter));
  std::set_union(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(uni));
  r.topk_jaccard = static_cast<double>(inter.size()) / static_cast<double>(uni.size());
  return r;
}

template <class Scalar>
DivergenceReport attribution_distance(const AttributionVector<Scalar>& a, const AttributionVector<Scalar>& b,
                                      int k = 3) {
  return attribution_distance(a.values, b.values, k);
}

}  // namespace algadv

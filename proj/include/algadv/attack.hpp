#pragma once

// Algebraic adversarial examples against integrated gradients: inputs moved
// along a symmetry of the network (x~ = g^t x or x~ = x - u) so the output is
// unchanged while the attribution moves.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "algadv/attribution.hpp"
#include "algadv/errors.hpp"
#include "algadv/network.hpp"
#include "algadv/symmetry.hpp"

namespace algadv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class BaselineKind { kZero, kMaxDistance, kUniform, kGaussian };

std::string_view to_string(BaselineKind k);
std::optional<BaselineKind> parse_baseline(std::string_view name);

struct BaselineChoice {
  BaselineKind kind = BaselineKind::kZero;
  int p = 2;           // max_distance norm, 1 or 2
  double sigma = 0.5;  // gaussian
  std::uint64_t seed = 0;
};

/// Per-feature valid range of the data.
struct DatasetStats {
  Vec min;
  Vec max;

  static DatasetStats box(Eigen::Index n, double lo, double hi);
  void validate() const;
};

enum class AttackMode { kRotation, kTranslation };

std::string_view to_string(AttackMode m);
std::optional<AttackMode> parse_mode(std::string_view name);

struct AttackSpec {
  AttackMode mode = AttackMode::kTranslation;
  double epsilon = 0.5;
  BaselineChoice baseline;
  QuadratureSpec quad;
  Eigen::Index out_index = 0;
  double divergence_threshold = 0.1;
  double output_tol = 1e-8;
  int max_retries = 16;
  int topk = 3;
  std::uint64_t seed = 0;
  double rank_tol = kDefaultRankTol;
  // Forces the group-element scale instead of the epsilon bound (rotation) or
  // epsilon (translation). Used for degenerate-case checks.
  std::optional<double> scale_override;

  void validate() const;
};

/// Definition-1 conditions for a candidate x~ against a clean x.
struct VerificationReport {
  double distance = 0.0;
  double output_residual = 0.0;
  bool argmax_preserved = true;
  DivergenceReport divergence;
  Vec ig_clean;
  Vec ig_adversarial;
  bool within_epsilon = false;     // condition 1
  bool output_preserved = false;   // condition 2
  bool attribution_changed = false;  // condition 3
  bool success = false;
};

struct AttackResult {
  AttackMode mode = AttackMode::kTranslation;
  Vec x;
  Vec x_tilde;
  Vec baseline;
  SymmetryElement<double> element;
  VerificationReport report;
  int retries_used = 0;

  double distance() const { return report.distance; }
  bool success() const { return report.success; }
};

/// Largest |k| with |exp(kA) x - x| <= epsilon guaranteed, using the Frobenius
/// norm of A: (1 / |A|) log(epsilon / |x| + 1).
double k_bound(const Mat& a, const Vec& x, double epsilon);

Vec make_baseline(const BaselineChoice& choice, const Vec& x, const DatasetStats* stats);

VerificationReport verify_adversarial(const MlpNetworkd& net, const Vec& x, const Vec& x_tilde, const Vec& baseline,
                                      const AttackSpec& spec);

/// Rotation attack over P_W intersected with O(n). Returns EmptyAlgebra when
/// n - rank(W) < 2; throws DegenerateInput for x = 0.
OrEmpty<AttackResult> attack_rotation(const MlpNetworkd& net, const Vec& x, const AttackSpec& spec,
                                      const DatasetStats* stats);

/// Translation attack over ker(W). Returns EmptyAlgebra when ker(W) is trivial.
OrEmpty<AttackResult> attack_translation(const MlpNetworkd& net, const Vec& x, const AttackSpec& spec,
                                         const DatasetStats* stats);

/// Dispatches on spec.mode.
OrEmpty<AttackResult> run_attack(const MlpNetworkd& net, const Vec& x, const AttackSpec& spec,
                                 const DatasetStats* stats);

struct EquivarianceReport {
  double vector_residual = 0.0;     // |IG(gx, gx', g.F) - IG(x, x', F)|
  double component_residual = 0.0;  // |IG_v(gx, gx', g.F) - IG_{g^t v}(x, x', F)|
};

/// Throws InvalidInput if |g^t g - I| > 1e-8 or v is not a unit vector.
EquivarianceReport check_equivariance_orthogonal(const MlpNetworkd& net, Eigen::Index out_index, const Vec& x,
                                                 const Vec& x_prime, const Mat& g, const Vec& v,
                                                 const QuadratureSpec& quad);

/// |IG(x + u, x' + u, u.F) - IG(x, x', F)|.
double check_equivariance_translation(const MlpNetworkd& net, Eigen::Index out_index, const Vec& x,
                                      const Vec& x_prime, const Vec& u, const QuadratureSpec& quad);

nlohmann::json to_json(const DivergenceReport& d);
nlohmann::json to_json(const AttackResult& r);

}  // namespace algadv

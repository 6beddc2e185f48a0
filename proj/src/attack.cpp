#include "algadv/attack.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "algadv/network_io.hpp"

namespace algadv {

std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::kZero: return "zero";
    case BaselineKind::kMaxDistance: return "max";
    case BaselineKind::kUniform: return "uniform";
    case BaselineKind::kGaussian: return "gaussian";
  }
  return "zero";
}

std::optional<BaselineKind> parse_baseline(std::string_view name) {
  if (name == "zero") return BaselineKind::kZero;
  if (name == "max" || name == "max_distance") return BaselineKind::kMaxDistance;
  if (name == "uniform") return BaselineKind::kUniform;
  if (name == "gaussian") return BaselineKind::kGaussian;
  return std::nullopt;
}

std::string_view to_string(AttackMode m) {
  return m == AttackMode::kRotation ? "rotation" : "translation";
}

std::optional<AttackMode> parse_mode(std::string_view name) {
  if (name == "rotation") return AttackMode::kRotation;
  if (name == "translation") return AttackMode::kTranslation;
  return std::nullopt;
}

DatasetStats DatasetStats::box(Eigen::Index n, double lo, double hi) {
  DatasetStats s{Vec::Constant(n, lo), Vec::Constant(n, hi)};
  s.validate();
  return s;
}

void DatasetStats::validate() const {
  require_dims(min.size() == max.size(), "dataset stats min/max dimension mismatch");
  require_finite(min, "dataset min");
  require_finite(max, "dataset max");
  if ((min.array() > max.array()).any()) throw InvalidInput("dataset stats require min <= max componentwise");
}

void AttackSpec::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidInput("epsilon must be finite and non-negative");
  if (max_retries < 1) throw InvalidInput("max_retries must be >= 1");
  if (quad.steps < 1) throw InvalidInput("quadrature steps must be >= 1");
  if (baseline.p != 1 && baseline.p != 2) throw InvalidInput("max-distance baseline needs p in {1, 2}");
  if (baseline.kind == BaselineKind::kGaussian && !(baseline.sigma > 0.0))
    throw InvalidInput("gaussian baseline needs sigma > 0");
}

double k_bound(const Mat& a, const Vec& x, double epsilon) {
  require_finite(a, "k_bound A");
  require_finite(x, "k_bound x");
  if (!(epsilon >= 0.0)) throw InvalidInput("k_bound: epsilon must be non-negative");
  const double norm_a = operator_norm_upper(a);
  const double norm_x = x.norm();
  if (norm_a == 0.0) throw InvalidInput("k_bound: generator is zero");
  if (norm_x == 0.0) throw DegenerateInput("k_bound: x is zero");
  return std::log1p(epsilon / norm_x) / norm_a;
}

Vec make_baseline(const BaselineChoice& choice, const Vec& x, const DatasetStats* stats) {
  const Eigen::Index n = x.size();
  if (choice.kind == BaselineKind::kZero) return Vec::Zero(n);
  if (stats == nullptr) throw InvalidInput(std::string("baseline '") + std::string(to_string(choice.kind)) +
                                           "' requires dataset statistics");
  stats->validate();
  require_dims(stats->min.size() == n, "dataset stats dimension does not match input");
  Vec out(n);
  switch (choice.kind) {
    case BaselineKind::kMaxDistance:
      if (choice.p != 1 && choice.p != 2) throw InvalidInput("max-distance baseline needs p in {1, 2}");
      // the objective separates per coordinate for p in {1, 2}
      for (Eigen::Index i = 0; i < n; ++i)
        out(i) = std::abs(x(i) - stats->min(i)) >= std::abs(stats->max(i) - x(i)) ? stats->min(i) : stats->max(i);
      break;
    case BaselineKind::kUniform: {
      std::mt19937_64 rng(choice.seed);
      for (Eigen::Index i = 0; i < n; ++i) {
        std::uniform_real_distribution<double> u(stats->min(i), stats->max(i));
        out(i) = stats->min(i) == stats->max(i) ? stats->min(i) : u(rng);
      }
      break;
    }
    case BaselineKind::kGaussian: {
      if (!(choice.sigma > 0.0)) throw InvalidInput("gaussian baseline needs sigma > 0");
      std::mt19937_64 rng(choice.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < n; ++i)
        out(i) = std::clamp(choice.sigma * normal(rng) + x(i), stats->min(i), stats->max(i));
      break;
    }
    case BaselineKind::kZero: break;
  }
  return out;
}

namespace {

Eigen::Index argmax(const Vec& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return i;
}

void check_inputs(const MlpNetworkd& net, const Vec& x, const AttackSpec& spec) {
  net.validate();
  spec.validate();
  require_dims(x.size() == net.input_dim(), "attack input dimension does not match network");
  require_finite(x, "attack input");
  if (spec.out_index < 0 || spec.out_index >= net.output_dim()) throw InvalidInput("out_index out of range");
}

bool better(const VerificationReport& candidate, const VerificationReport& best) {
  return candidate.divergence.l2_relative > best.divergence.l2_relative;
}

void assert_epsilon(const AttackResult& r, const AttackSpec& spec) {
  if (!spec.scale_override && r.report.distance > spec.epsilon)
    throw std::logic_error("attack produced a point outside the epsilon ball");
}

}  // namespace

VerificationReport verify_adversarial(const MlpNetworkd& net, const Vec& x, const Vec& x_tilde, const Vec& baseline,
                                      const AttackSpec& spec) {
  require_dims(x.size() == net.input_dim() && x_tilde.size() == x.size() && baseline.size() == x.size(),
               "verify_adversarial: dimension mismatch");
  VerificationReport r;
  r.distance = (x_tilde - x).norm();
  r.within_epsilon = r.distance <= spec.epsilon;

  const Vec y = forward(net, x);
  const Vec y_tilde = forward(net, x_tilde);
  r.output_residual = (y_tilde - y).norm();
  r.argmax_preserved = argmax(y) == argmax(y_tilde);
  r.output_preserved = r.output_residual <= spec.output_tol && r.argmax_preserved;

  r.ig_clean = integrated_gradients(net, spec.out_index, x, baseline, spec.quad).values;
  r.ig_adversarial = integrated_gradients(net, spec.out_index, x_tilde, baseline, spec.quad).values;
  r.divergence = attribution_distance(r.ig_adversarial, r.ig_clean, spec.topk);
  r.attribution_changed = r.divergence.l2_relative >= spec.divergence_threshold;

  r.success = r.within_epsilon && r.output_preserved && r.attribution_changed;
  return r;
}

OrEmpty<AttackResult> attack_rotation(const MlpNetworkd& net, const Vec& x, const AttackSpec& spec,
                                      const DatasetStats* stats) {
  check_inputs(net, x, spec);
  if (x.norm() == 0.0) throw DegenerateInput("rotation attack is undefined at x = 0");
  auto algebra = lie_algebra_pW_skew(net.head_weight, spec.rank_tol);
  if (is_empty(algebra)) return std::get<EmptyAlgebra>(algebra);
  const auto& basis = std::get<LieAlgebraBasis<double>>(algebra);

  AttackResult best;
  best.mode = AttackMode::kRotation;
  best.x = x;
  best.baseline = make_baseline(spec.baseline, x, stats);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  bool have_best = false;
  for (int attempt = 1; attempt <= spec.max_retries; ++attempt) {
    std::vector<double> coeffs(basis.count());
    for (auto& c : coeffs) c = normal(rng);
    const Mat a = combine_generators(basis, coeffs);
    if (a.norm() == 0.0) continue;
    // x~ = g^t x = exp(k A^t) x, so the bound is taken for A^t
    const double k = spec.scale_override ? *spec.scale_override : k_bound(Mat(a.transpose()), x, spec.epsilon);
    auto elem = std::get<SymmetryElement<double>>(sample_group_element(basis, coeffs, k));
    const Vec x_tilde = elem.transform(x);
    auto report = verify_adversarial(net, x, x_tilde, best.baseline, spec);
    if (!have_best || better(report, best.report)) {
      best.x_tilde = x_tilde;
      best.element = std::move(elem);
      best.report = std::move(report);
      have_best = true;
    }
    best.retries_used = attempt;
    if (best.report.success) break;
  }
  if (!have_best) throw std::logic_error("rotation attack drew only zero generators");
  assert_epsilon(best, spec);
  return best;
}

OrEmpty<AttackResult> attack_translation(const MlpNetworkd& net, const Vec& x, const AttackSpec& spec,
                                         const DatasetStats* stats) {
  check_inputs(net, x, spec);
  const double radius = spec.scale_override ? *spec.scale_override : spec.epsilon;

  AttackResult best;
  best.mode = AttackMode::kTranslation;
  best.x = x;
  best.baseline = make_baseline(spec.baseline, x, stats);

  std::mt19937_64 rng(spec.seed);
  bool have_best = false;
  for (int attempt = 1; attempt <= spec.max_retries; ++attempt) {
    auto sampled = sample_kernel_translation(net.head_weight, rng(), radius, spec.rank_tol);
    if (is_empty(sampled)) return std::get<EmptyAlgebra>(sampled);
    auto elem = std::get<SymmetryElement<double>>(std::move(sampled));
    Vec x_tilde = elem.transform(x);
    // x - u can round past the ball even when |u| <= epsilon
    while ((x_tilde - x).norm() > radius) {
      elem.u *= 1.0 - 4.0 * std::numeric_limits<double>::epsilon();
      x_tilde = elem.transform(x);
    }
    auto report = verify_adversarial(net, x, x_tilde, best.baseline, spec);
    if (!have_best || better(report, best.report)) {
      best.x_tilde = x_tilde;
      best.element = std::move(elem);
      best.report = std::move(report);
      have_best = true;
    }
    best.retries_used = attempt;
    if (best.report.success) break;
  }
  assert_epsilon(best, spec);
  return best;
}

OrEmpty<AttackResult> run_attack(const MlpNetworkd& net, const Vec& x, const AttackSpec& spec,
                                 const DatasetStats* stats) {
  return spec.mode == AttackMode::kRotation ? attack_rotation(net, x, spec, stats)
                                            : attack_translation(net, x, spec, stats);
}

EquivarianceReport check_equivariance_orthogonal(const MlpNetworkd& net, Eigen::Index out_index, const Vec& x,
                                                 const Vec& x_prime, const Mat& g, const Vec& v,
                                                 const QuadratureSpec& quad) {
  const Eigen::Index n = net.input_dim();
  require_dims(g.rows() == n && g.cols() == n, "equivariance: g must be n x n");
  require_finite(g, "equivariance g");
  if ((g.transpose() * g - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-8)
    throw InvalidInput("equivariance: g is not orthogonal");

  const auto moved = act_linear(g, net);
  const Vec gx = g * x;
  const Vec gxp = g * x_prime;
  EquivarianceReport r;
  r.vector_residual = (integrated_gradients(moved, out_index, gx, gxp, quad).values -
                       integrated_gradients(net, out_index, x, x_prime, quad).values)
                          .norm();
  const Vec gtv = g.transpose() * v;
  const double lhs = path_attribution_component(moved, out_index, PathSpec<double>{StraightPath<double>{gxp, gx}}, v, quad);
  const double rhs =
      path_attribution_component(net, out_index, PathSpec<double>{StraightPath<double>{x_prime, x}}, gtv, quad);
  r.component_residual = std::abs(lhs - rhs);
  return r;
}

double check_equivariance_translation(const MlpNetworkd& net, Eigen::Index out_index, const Vec& x,
                                      const Vec& x_prime, const Vec& u, const QuadratureSpec& quad) {
  const auto moved = act_translation(u, net);
  return (integrated_gradients(moved, out_index, Vec(x + u), Vec(x_prime + u), quad).values -
          integrated_gradients(net, out_index, x, x_prime, quad).values)
      .norm();
}

nlohmann::json to_json(const DivergenceReport& d) {
  return {{"l2_relative", d.l2_relative}, {"cosine", d.cosine}, {"topk_jaccard", d.topk_jaccard}, {"k", d.k}};
}

nlohmann::json to_json(const AttackResult& r) {
  nlohmann::json elem;
  elem["kind"] = r.element.kind == SymmetryKind::kLinear ? "linear" : "translation";
  if (r.element.kind == SymmetryKind::kLinear) {
    elem["g"] = matrix_to_json(r.element.g);
    elem["generator"] = matrix_to_json(r.element.generator);
  } else {
    elem["u"] = vector_to_json(r.element.u);
    elem["seed"] = r.element.seed;
  }
  elem["coeffs"] = r.element.coeffs;
  elem["scale"] = r.element.scale;

  const auto& rep = r.report;
  return {{"mode", std::string(to_string(r.mode))},
          {"x", vector_to_json(r.x)},
          {"x_tilde", vector_to_json(r.x_tilde)},
          {"baseline", vector_to_json(r.baseline)},
          {"element", elem},
          {"distance", rep.distance},
          {"output_residual", rep.output_residual},
          {"argmax_preserved", rep.argmax_preserved},
          {"divergence", to_json(rep.divergence)},
          {"ig_clean", vector_to_json(rep.ig_clean)},
          {"ig_adversarial", vector_to_json(rep.ig_adversarial)},
          {"conditions",
           {{"within_epsilon", rep.within_epsilon},
            {"output_preserved", rep.output_preserved},
            {"attribution_changed", rep.attribution_changed}}},
          {"success", rep.success},
          {"retries_used", r.retries_used}};
}

}  // namespace algadv

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "algadv/harness.hpp"
#include "algadv/symmetry.hpp"

namespace algadv {

namespace {

struct Sampler {
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};

  explicit Sampler(std::uint64_t seed) : rng(seed) {}

  Mat gaussian(Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < c; ++k) m(i, k) = normal(rng);
    return m;
  }
  Vec gaussian(Eigen::Index n) { return gaussian(n, 1); }
  Vec uniform(Eigen::Index n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
  }
  Vec unit(Eigen::Index n) {
    Vec v = gaussian(n);
    return v / v.norm();
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  // rank-r matrix as a product of Gaussian factors
  Mat low_rank(Eigen::Index rows, Eigen::Index cols, Eigen::Index r) {
    if (r == 0) return Mat::Zero(rows, cols);
    return gaussian(rows, r) * gaussian(r, cols);
  }
  Mat orthogonal(Eigen::Index n) {
    const Mat s = gaussian(n, n);
    return matrix_exp(Mat(s - s.transpose()));
  }
};

NetworkSpec suite_network(std::uint64_t seed, int index, Activation act = Activation::kTanh) {
  NetworkSpec spec;
  spec.input_dim = 6;
  spec.head_dim = 4;
  spec.rank = 1 + index % 3;
  spec.tail = {{8, act}, {3, Activation::kIdentity}};
  spec.seed = mix_seed(seed, static_cast<std::uint64_t>(index));
  return spec;
}

Vec central_difference_gradient(const MlpNetworkd& net, const Vec& x, Eigen::Index out, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (forward(net, xp)(out) - forward(net, xm)(out)) / (2.0 * h);
  }
  return g;
}

Mat taylor_exp(const Mat& a, int terms) {
  Mat sum = Mat::Identity(a.rows(), a.cols());
  Mat term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

class Suite {
 public:
  void add(std::string name, double residual, double tol, std::string note = {}) {
    results_.push_back({std::move(name), residual, tol, residual <= tol, std::move(note)});
  }
  void add_failed(std::string name, double residual, double tol, std::string note) {
    results_.push_back({std::move(name), residual, tol, false, std::move(note)});
  }
  std::vector<InvariantResult> take() { return std::move(results_); }

 private:
  std::vector<InvariantResult> results_;
};

}  // namespace

std::vector<InvariantResult> run_invariant_suite(const ExperimentConfig& cfg) {
  const auto& vc = cfg.verify;
  Sampler s(vc.seed);
  Suite suite;
  const QuadratureSpec quad{QuadratureScheme::kGaussLegendre, vc.quad_steps};

  // core linear algebra
  {
    double ortho = 0.0, nullity = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Eigen::Index n = 1 + t % 8;
      const Eigen::Index d = 1 + (t / 8) % 6;
      const Eigen::Index r = t % (std::min(n, d) + 1);
      const Mat w = s.low_rank(d, n, r);
      const auto row = row_space_basis(w);
      const auto ker = kernel_basis(w);
      ortho = std::max({ortho, row.orthonormality_error(), ker.orthonormality_error()});
      nullity = std::max(nullity, std::abs(static_cast<double>(row.count() + ker.count() - n)));
    }
    suite.add("linalg.orthonormality", ortho, 1e-10);
    suite.add("linalg.rank_nullity", nullity, 0.0);

    double group = 0.0, series = 0.0, kernel = 0.0;
    for (int t = 0; t < 50; ++t) {
      Mat a = s.gaussian(4, 4);
      a /= a.norm();
      const double p = s.uniform(-1, 1), q = s.uniform(-1, 1);
      group = std::max(group, (matrix_exp(Mat(p * a)) * matrix_exp(Mat(q * a)) - matrix_exp(Mat((p + q) * a))).norm());
      const Mat small = 0.1 * s.uniform(0, 1) * a;
      series = std::max(series, (matrix_exp(small) - taylor_exp(small, 20)).norm());
      const Vec x = s.unit(4), y = s.unit(4);
      Vec z = s.gaussian(4);
      z -= z.dot(y) * y;
      kernel = std::max(kernel, (rank_one(x, y) * z).norm());
    }
    suite.add("linalg.exp_group_law", group, 1e-8);
    suite.add("linalg.exp_series_oracle", series, 1e-12);
    suite.add("linalg.rank_one_kernel", kernel, 1e-14);
  }

  // network gradients
  {
    double worst = 0.0;
    const Activation acts[] = {Activation::kIdentity, Activation::kTanh, Activation::kSigmoid, Activation::kSoftplus};
    for (int i = 0; i < vc.nets; ++i) {
      for (auto act : acts) {
        const auto net = make_random_network(suite_network(vc.seed + 17, i, act));
        const Vec x = s.gaussian(net.input_dim());
        for (Eigen::Index out = 0; out < net.output_dim(); ++out) {
          const Vec g = gradient(net, x, out);
          const Vec fd = central_difference_gradient(net, x, out, 1e-5);
          worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() / std::max(fd.lpNorm<Eigen::Infinity>(), 1e-6));
        }
      }
    }
    suite.add("network.gradient_finite_difference", worst, 1e-5);
  }

  // symmetry groups
  double translation_res = 0.0, linear_res = 0.0, block_res = 0.0, skew_res = 0.0, closure_res = 0.0;
  for (int i = 0; i < vc.nets; ++i) {
    const auto net = make_random_network(suite_network(vc.seed, i));
    const Mat& w = net.head_weight;
    const auto full = value_or_throw(lie_algebra_pW(w));
    const auto skew = value_or_throw(lie_algebra_pW_skew(w));
    for (int e = 0; e < 5; ++e) {
      const auto u = value_or_throw(sample_kernel_translation(w, s.rng(), 0.5));
      translation_res = std::max(translation_res, verify_symmetry(u, net, vc.samples, 1e-10, s.rng()).max_residual);

      std::vector<double> c(full.count());
      for (auto& v : c) v = s.normal(s.rng);
      const double k = 1.0 / combine_generators(full, c).norm();
      const auto g = value_or_throw(sample_group_element(full, c, k));
      linear_res = std::max(linear_res, verify_symmetry(g, net, vc.samples, 1e-8, s.rng()).max_residual);

      const Mat blocks = adapted_block_form(g.g, full.row_space, full.w_perp);
      const Eigen::Index r = full.row_space.count();
      const Eigen::Index q = full.w_perp.count();
      block_res = std::max({block_res, (blocks.topLeftCorner(r, r) - Mat::Identity(r, r)).cwiseAbs().maxCoeff(),
                            blocks.bottomLeftCorner(q, r).cwiseAbs().maxCoeff()});

      std::vector<double> cs(skew.count());
      for (auto& v : cs) v = s.normal(s.rng);
      const double ks = s.uniform(0, 10) / combine_generators(skew, cs).norm();
      const auto o = value_or_throw(sample_group_element(skew, cs, ks));
      skew_res = std::max(skew_res, (o.g.transpose() * o.g - Mat::Identity(6, 6)).norm());

      const Mat prod = g.g * o.g;
      closure_res = std::max(closure_res, (prod * full.row_space.vectors - full.row_space.vectors).cwiseAbs().maxCoeff());
    }
  }
  suite.add("symmetry.kernel_translation", translation_res, 1e-10);
  suite.add("symmetry.pW_linear", linear_res, 1e-8);
  suite.add("symmetry.block_structure", block_res, 1e-8);
  suite.add("symmetry.skew_orthogonal", skew_res, 1e-9);
  suite.add("symmetry.closure", closure_res, 1e-7);

  {
    double dim_err = 0.0, indep_err = 0.0;
    for (Eigen::Index n = 1; n <= 8; ++n) {
      for (Eigen::Index r = 0; r <= n; ++r) {
        const Mat w = s.low_rank(n, n, r);
        const auto full = lie_algebra_pW(w);
        const auto skew = lie_algebra_pW_skew(w);
        const Eigen::Index q = n - r;
        const double full_count = is_empty(full) ? 0.0 : static_cast<double>(std::get<0>(full).count());
        const double skew_count = is_empty(skew) ? 0.0 : static_cast<double>(std::get<0>(skew).count());
        dim_err = std::max({dim_err, std::abs(full_count - static_cast<double>(n * q)),
                            std::abs(skew_count - static_cast<double>(q * (q - 1) / 2)),
                            (r == n) != is_empty(full) ? 1.0 : 0.0});
        for (const auto* alg : {&full, &skew}) {
          if (is_empty(*alg)) continue;
          const auto& gens = std::get<0>(*alg).generators;
          Mat vecs(n * n, static_cast<Eigen::Index>(gens.size()));
          for (std::size_t i = 0; i < gens.size(); ++i)
            vecs.col(static_cast<Eigen::Index>(i)) = gens[i].reshaped();
          const Mat gram = vecs.transpose() * vecs;
          indep_err = std::max(indep_err, static_cast<double>(gram.cols() - numerical_rank(gram)));
        }
      }
    }
    suite.add("symmetry.dimension_law", dim_err, 0.0);
    suite.add("symmetry.generator_independence", indep_err, 0.0);
  }

  // step bound
  {
    double worst_ratio = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const Eigen::Index n = 2 + t % 6;
      const Mat a = s.gaussian(n, n) * s.uniform(0.01, 3.0);
      const Vec x = s.gaussian(n) * s.uniform(0.01, 5.0);
      const double eps = std::exp(s.uniform(std::log(1e-4), std::log(10.0)));
      const double k = k_bound(a, x, eps);
      worst_ratio = std::max(worst_ratio, (matrix_exp(Mat(k * a)) * x - x).norm() / eps);
    }
    suite.add("attack.k_bound_epsilon", worst_ratio, 1.0, "max |exp(kA)x - x| / epsilon");
  }

  // attribution and equivariance
  double completeness = 0.0, equivalence = 0.0, trans = 0.0, comp = 0.0, vec = 0.0, ex1 = 0.0, ex2 = 0.0,
         zero_rot = 0.0;
  bool corrupted_rejected = false;
  for (int i = 0; i < vc.nets; ++i) {
    const auto net = make_random_network(suite_network(vc.seed + 31, i));
    const Eigen::Index n = net.input_dim();
    for (int e = 0; e < 4; ++e) {
      const Vec x = s.uniform(n, -1, 1);
      const Vec xp = s.uniform(n, -1, 1);
      const auto ig = integrated_gradients(net, 0, x, xp, quad);
      completeness = std::max(completeness, std::abs(ig.values.sum() - (forward(net, x)(0) - forward(net, xp)(0))));
      const auto pa = path_attribution(net, 0, PathSpec<double>{StraightPath<double>{xp, x}}, Mat(Mat::Identity(n, n)), quad);
      equivalence = std::max(equivalence, (pa.values - ig.values).cwiseAbs().maxCoeff());

      const Vec u = s.gaussian(n);
      trans = std::max(trans, check_equivariance_translation(net, 0, x, xp, u, quad));

      Mat g = s.orthogonal(n);
      if (vc.corrupt_g) g(0, 0) += 1e-3;
      const Vec v = s.unit(n);
      try {
        const auto rep = check_equivariance_orthogonal(net, 0, x, xp, g, v, quad);
        comp = std::max(comp, rep.component_residual);
        vec = std::max(vec, rep.vector_residual);
      } catch (const InvalidInput&) {
        corrupted_rejected = true;
        comp = std::max(comp, (g.transpose() * g - Mat::Identity(n, n)).cwiseAbs().maxCoeff());
      }

      const auto skew = value_or_throw(lie_algebra_pW_skew(net.head_weight));
      std::vector<double> c(skew.count());
      for (auto& cv : c) cv = s.normal(s.rng);
      const auto o = value_or_throw(sample_group_element(skew, c, 1.0 / combine_generators(skew, c).norm()));
      const Vec gtx = o.g.transpose() * x;
      ex1 = std::max(ex1, (integrated_gradients(net, 0, gtx, xp, quad).values -
                           integrated_gradients(net, 0, x, Vec(o.g * xp), quad).values)
                              .cwiseAbs()
                              .maxCoeff());
      const Vec zero = Vec::Zero(n);
      zero_rot = std::max(zero_rot, attribution_distance(integrated_gradients(net, 0, gtx, zero, quad).values,
                                                         integrated_gradients(net, 0, x, zero, quad).values)
                                        .l2_relative);

      const auto ku = value_or_throw(sample_kernel_translation(net.head_weight, s.rng(), 0.5));
      ex2 = std::max(ex2, (integrated_gradients(net, 0, Vec(x - ku.u), xp, quad).values -
                           integrated_gradients(net, 0, x, Vec(xp + ku.u), quad).values)
                              .cwiseAbs()
                              .maxCoeff());
    }
  }
  suite.add("attribution.completeness", completeness, 1e-6,
            fmt::format("gauss_legendre with {} nodes", vc.quad_steps));
  suite.add("attribution.path_equivalence", equivalence, 1e-12);
  suite.add("equivariance.translation", trans, 1e-6);
  if (corrupted_rejected)
    suite.add_failed("equivariance.orthogonal_component", comp, 1e-6, "g is not orthogonal (corrupted)");
  else
    suite.add("equivariance.orthogonal_component", comp, 1e-6);
  suite.add("equivariance.orthogonal_vector", vec, 1e-6,
            "Hadamard-product form of the orthogonal identity; not an identity unless g permutes coordinates");
  suite.add("example.translation_identity", ex2, 1e-6);
  suite.add("example.rotation_identity", ex1, 1e-6,
            "Hadamard-product form; holds only when the row space is coordinate-aligned");
  suite.add("attack.zero_baseline_rotation", zero_rot, 1e-6,
            "l2_relative divergence with baseline 0; IG changes by (g^t x - x) * grad integral");
  return suite.take();
}

nlohmann::json invariant_report_json(const std::vector<InvariantResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  int passed = 0;
  for (const auto& r : results) {
    nlohmann::json j = {{"name", r.name}, {"max_residual", r.max_residual}, {"tolerance", r.tolerance}, {"passed", r.passed}};
    if (!r.note.empty()) j["note"] = r.note;
    arr.push_back(std::move(j));
    passed += r.passed;
  }
  return {{"invariants", arr}, {"passed", passed}, {"total", results.size()}};
}

std::vector<EquivarianceRow> run_equivariance_table(const ExperimentConfig& cfg) {
  const auto& ec = cfg.equivariance;
  Sampler s(ec.seed);
  std::vector<EquivarianceRow> rows;
  for (int i = 0; i < ec.instances; ++i) {
    NetworkSpec spec = cfg.network;
    spec.seed = mix_seed(ec.seed, static_cast<std::uint64_t>(i));
    const auto net = make_random_network(spec);
    const Eigen::Index n = net.input_dim();
    const Vec x = s.uniform(n, -1, 1);
    const Vec xp = s.uniform(n, -1, 1);
    const Mat g = s.orthogonal(n);
    const Vec u = s.gaussian(n);
    const Vec v = s.unit(n);
    for (int steps : ec.steps) {
      const QuadratureSpec quad{QuadratureScheme::kGaussLegendre, steps};
      const auto rep = check_equivariance_orthogonal(net, 0, x, xp, g, v, quad);
      rows.push_back({i, "orthogonal_vector", steps, rep.vector_residual});
      rows.push_back({i, "orthogonal_component", steps, rep.component_residual});
      rows.push_back({i, "translation", steps, check_equivariance_translation(net, 0, x, xp, u, quad)});
      if (i == 0) {
        rows.push_back({i, "orthogonal_identity", steps,
                        check_equivariance_orthogonal(net, 0, x, xp, Mat::Identity(n, n), v, quad).vector_residual});
        rows.push_back({i, "translation_zero", steps, check_equivariance_translation(net, 0, x, xp, Vec::Zero(n), quad)});
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const EquivarianceRow& a, const EquivarianceRow& b) {
    return std::tie(a.kind, a.instance, a.steps) < std::tie(b.kind, b.instance, b.steps);
  });
  return rows;
}

std::string equivariance_csv(const std::vector<EquivarianceRow>& rows) {
  std::string out = "kind,instance,steps,residual\n";
  for (const auto& r : rows) out += fmt::format("{},{},{},{}\n", r.kind, r.instance, r.steps, format_double(r.residual));
  return out;
}

nlohmann::json equivariance_summary(const std::vector<EquivarianceRow>& rows) {
  std::map<std::string, std::map<int, std::vector<double>>> series;
  std::map<std::string, double> worst;
  for (const auto& r : rows) {
    series[r.kind][r.instance].push_back(r.residual);  // rows are sorted by steps within an instance
    worst[r.kind] = std::max(worst[r.kind], r.residual);
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [kind, instances] : series) {
    int monotone = 0;
    for (const auto& [inst, res] : instances) {
      bool ok = true;
      for (std::size_t k = 1; k < res.size(); ++k)
        if (!(res[k] <= res[k - 1] || res[k] <= kResidualFloor)) ok = false;
      monotone += ok;
    }
    out[kind] = {{"instances", instances.size()},
                 {"monotone_fraction", static_cast<double>(monotone) / static_cast<double>(instances.size())},
                 {"max_residual", worst[kind]}};
  }
  return out;
}

}  // namespace algadv

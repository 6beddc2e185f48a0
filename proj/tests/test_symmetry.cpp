#include <doctest.h>

#include "algadv/harness.hpp"
#include "algadv/symmetry.hpp"
#include "oracles.hpp"

using namespace algadv;
using oracle::Mat;
using oracle::Vec;

namespace {

Mat row_e1(int n) { return Vec::Unit(n, 0).transpose(); }

std::vector<double> normal_coeffs(oracle::Rng& rng, std::size_t count) {
  std::vector<double> c(count);
  for (auto& v : c) v = rng.normal(rng.gen);
  return c;
}

MlpNetworkd random_net(std::uint64_t seed, int n, int d, int r) {
  NetworkSpec spec;
  spec.input_dim = n;
  spec.head_dim = d;
  spec.rank = r;
  spec.seed = seed;
  return make_random_network(spec);
}

double gram_rank_deficit(const std::vector<Mat>& gens) {
  const Eigen::Index n = gens.front().rows();
  Mat vecs(n * n, static_cast<Eigen::Index>(gens.size()));
  for (std::size_t i = 0; i < gens.size(); ++i) vecs.col(static_cast<Eigen::Index>(i)) = gens[i].reshaped();
  const Mat gram = vecs.transpose() * vecs;
  return static_cast<double>(gram.cols() - oracle::gaussian_elimination_rank(gram, 1e-10));
}

}  // namespace

TEST_CASE("lie_algebra_pW") {
  SUBCASE("W = [1 0] gives e1 e2^t and e2 e2^t") {
    const auto alg = value_or_throw(lie_algebra_pW(row_e1(2)));
    REQUIRE(alg.count() == 2);
    // complement basis vector may carry either sign; compare up to sign
    Mat a = alg.generators[0], b = alg.generators[1];
    CHECK((a.cwiseAbs() - (Mat(2, 2) << 0, 1, 0, 0).finished()).norm() < 1e-14);
    CHECK((b.cwiseAbs() - (Mat(2, 2) << 0, 0, 0, 1).finished()).norm() < 1e-14);
  }
  SUBCASE("full-rank square W has the trivial group") {
    oracle::Rng rng(1);
    const auto alg = lie_algebra_pW(Mat(rng.gaussian(4, 4)));
    REQUIRE(is_empty(alg));
    CHECK(std::get<EmptyAlgebra>(alg).reason.find("trivial") != std::string::npos);
  }
  SUBCASE("random 2x4 rank-2 W gives 8 annihilating generators") {
    oracle::Rng rng(2);
    const Mat w = rng.gaussian(2, 4);
    const auto alg = value_or_throw(lie_algebra_pW(w));
    REQUIRE(alg.count() == 8);
    for (const auto& g : alg.generators)
      for (Eigen::Index i = 0; i < w.rows(); ++i) CHECK((g * w.row(i).transpose()).norm() <= 1e-10 * w.row(i).norm());
  }
}

TEST_CASE("lie_algebra_pW_skew") {
  SUBCASE("W = [1 0 0] gives the single rotation generator of the e2 e3 plane") {
    const auto alg = value_or_throw(lie_algebra_pW_skew(row_e1(3)));
    REQUIRE(alg.count() == 1);
    const Mat& g = alg.generators[0];
    CHECK(g.transpose() == -g);
    CHECK(g.col(0).isZero(1e-15));
    CHECK(g.row(0).isZero(1e-15));
    CHECK(std::abs(std::abs(g(1, 2)) - 1.0) < 1e-14);
  }
  SUBCASE("one-dimensional complement is empty") {
    CHECK(is_empty(lie_algebra_pW_skew(Mat(Mat::Identity(2, 3)))));
  }
  SUBCASE("exponentials of generators are orthogonal") {
    oracle::Rng rng(3);
    const auto alg = value_or_throw(lie_algebra_pW_skew(Mat(rng.gaussian(2, 6))));
    for (const auto& g : alg.generators) {
      const Mat e = matrix_exp(Mat(2.5 * g));
      CHECK((e.transpose() * e - Mat::Identity(6, 6)).norm() <= 1e-10);
    }
  }
}

TEST_CASE("dimension laws for every rank up to n = 8") {
  oracle::Rng rng(4);
  for (int n = 1; n <= 8; ++n) {
    for (int r = 0; r <= n; ++r) {
      const Mat w = rng.low_rank(n, n, r);
      const auto full = lie_algebra_pW(w);
      const auto skew = lie_algebra_pW_skew(w);
      const int q = n - r;
      CAPTURE(n);
      CAPTURE(r);
      CHECK(is_empty(full) == (r == n));
      if (!is_empty(full)) {
        CHECK(std::get<0>(full).count() == static_cast<std::size_t>(n * q));
        CHECK(gram_rank_deficit(std::get<0>(full).generators) == 0.0);
      }
      CHECK(is_empty(skew) == (q < 2));
      if (!is_empty(skew)) {
        CHECK(std::get<0>(skew).count() == static_cast<std::size_t>(q * (q - 1) / 2));
        CHECK(gram_rank_deficit(std::get<0>(skew).generators) == 0.0);
        for (const auto& g : std::get<0>(skew).generators) CHECK(g.transpose() == -g);
      }
    }
  }
}

TEST_CASE("sample_group_element") {
  SUBCASE("zero coefficients give the identity") {
    const auto alg = value_or_throw(lie_algebra_pW(row_e1(3)));
    const auto e = value_or_throw(sample_group_element(alg, std::vector<double>(alg.count(), 0.0), 3.0));
    CHECK(e.g == Mat::Identity(3, 3));
  }
  SUBCASE("skew element with k = pi/2 rotates the e2 e3 plane and fixes e1") {
    const auto alg = value_or_throw(lie_algebra_pW_skew(row_e1(3)));
    const auto e = value_or_throw(sample_group_element(alg, {1.0}, M_PI / 2));
    CHECK((e.g * Vec::Unit(3, 0) - Vec::Unit(3, 0)).norm() < 1e-15);
    CHECK(std::abs(e.g(1, 1)) < 1e-14);
    CHECK(std::abs(e.g(2, 2)) < 1e-14);
    CHECK(std::abs(std::abs(e.g(1, 2)) - 1.0) < 1e-14);
    CHECK(e.g(1, 2) == doctest::Approx(-e.g(2, 1)));
    CHECK(e.scale == M_PI / 2);
  }
  SUBCASE("coefficient count must match") {
    const auto alg = value_or_throw(lie_algebra_pW(row_e1(3)));
    CHECK_THROWS_AS(sample_group_element(alg, {1.0}, 1.0), DimensionMismatch);
  }
  SUBCASE("empty basis is a typed signal") {
    CHECK(is_empty(sample_group_element(LieAlgebraBasis<double>{}, {}, 1.0)));
  }
  SUBCASE("random elements are symmetries of the network") {
    oracle::Rng rng(5);
    for (int i = 0; i < 5; ++i) {
      const auto net = random_net(40 + i, 6, 4, 1 + i % 3);
      const auto alg = value_or_throw(lie_algebra_pW(net.head_weight));
      const auto c = normal_coeffs(rng, alg.count());
      const auto e = value_or_throw(sample_group_element(alg, c, 1.0 / combine_generators(alg, c).norm()));
      CHECK(e.g.determinant() > 0.0);
      CHECK((e.g * alg.row_space.vectors - alg.row_space.vectors).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK(verify_symmetry(e, net, 100, 1e-8, 7).passed);
    }
  }
}

TEST_CASE("group structure of sampled elements") {
  oracle::Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const int n = 3 + i % 6;
    const int r = i % (n - 1);
    const Mat w = rng.low_rank(4, n, std::min(r, 4));
    const auto full = value_or_throw(lie_algebra_pW(w));
    const Eigen::Index rr = full.row_space.count();
    const Eigen::Index q = full.w_perp.count();

    const auto c1 = normal_coeffs(rng, full.count());
    const auto c2 = normal_coeffs(rng, full.count());
    const auto g1 = value_or_throw(sample_group_element(full, c1, rng.uniform(0.1, 2.0) / combine_generators(full, c1).norm()));
    const auto g2 = value_or_throw(sample_group_element(full, c2, rng.uniform(0.1, 2.0) / combine_generators(full, c2).norm()));

    const Mat blocks = adapted_block_form(g1.g, full.row_space, full.w_perp);
    if (rr > 0) {
      CHECK((blocks.topLeftCorner(rr, rr) - Mat::Identity(rr, rr)).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK(blocks.bottomLeftCorner(q, rr).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK(((g1.g * g2.g) * full.row_space.vectors - full.row_space.vectors).cwiseAbs().maxCoeff() <= 1e-7);
    }
    CHECK(blocks.bottomRightCorner(q, q).determinant() > 0.0);

    if (q >= 2) {
      const auto skew = value_or_throw(lie_algebra_pW_skew(w));
      const auto cs = normal_coeffs(rng, skew.count());
      const auto o = value_or_throw(sample_group_element(skew, cs, rng.uniform(0.0, 10.0) / combine_generators(skew, cs).norm()));
      CHECK((o.g.transpose() * o.g - Mat::Identity(n, n)).norm() <= 1e-9);
    }
  }
}

TEST_CASE("sample_kernel_translation") {
  SUBCASE("W = [1 0 0], epsilon 0.1") {
    const auto e = value_or_throw(sample_kernel_translation(row_e1(3), 42, 0.1));
    CHECK(e.kind == SymmetryKind::kTranslation);
    CHECK(std::abs(e.u(0)) < 1e-16);
    CHECK(e.u.norm() == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(e.u.norm() <= 0.1);
  }
  SUBCASE("deterministic for a fixed seed") {
    const auto a = value_or_throw(sample_kernel_translation(row_e1(4), 9, 0.3));
    const auto b = value_or_throw(sample_kernel_translation(row_e1(4), 9, 0.3));
    const auto c = value_or_throw(sample_kernel_translation(row_e1(4), 10, 0.3));
    CHECK(a.u == b.u);
    CHECK(a.u != c.u);
  }
  SUBCASE("full column rank has no translations") {
    CHECK(is_empty(sample_kernel_translation(Mat(Mat::Identity(3, 3)), 1, 0.1)));
  }
  SUBCASE("zero radius gives zero translation") {
    CHECK(value_or_throw(sample_kernel_translation(row_e1(3), 1, 0.0)).u.isZero(0.0));
  }
  SUBCASE("residual W u stays at rounding level") {
    oracle::Rng rng(8);
    for (int t = 0; t < 50; ++t) {
      const Mat w = rng.low_rank(4, 7, 1 + t % 4);
      const auto e = value_or_throw(sample_kernel_translation(w, static_cast<std::uint64_t>(t), rng.uniform(0.01, 2.0)));
      CHECK((w * e.u).norm() <= 1e-10 * w.norm());
    }
  }
}

TEST_CASE("verify_symmetry") {
  const auto net = random_net(77, 6, 4, 2);
  SUBCASE("identity has zero residual") {
    const auto check = verify_symmetry(identity_element<double>(6), net, 50, 0.0);
    CHECK(check.max_residual == 0.0);
    CHECK(check.passed);
  }
  SUBCASE("kernel translation is exact up to rounding") {
    const auto e = value_or_throw(sample_kernel_translation(net.head_weight, 3, 1.0));
    CHECK(verify_symmetry(e, net, 100, 1e-12).passed);
  }
  SUBCASE("a generic rotation is not a symmetry") {
    oracle::Rng rng(12);
    const Mat s = rng.gaussian(6, 6);
    auto e = identity_element<double>(6);
    e.g = matrix_exp(Mat(s - s.transpose()));
    const auto check = verify_symmetry(e, net, 100, 1e-8);
    CHECK_FALSE(check.passed);
    CHECK(check.max_residual > 1e-3);
  }
}

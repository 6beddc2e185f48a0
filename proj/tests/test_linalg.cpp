#include <doctest.h>

#include <cmath>

#include "algadv/linalg.hpp"
#include "oracles.hpp"

using namespace algadv;
using oracle::Mat;
using oracle::Vec;

namespace {

Mat rows(std::initializer_list<std::initializer_list<double>> init) {
  Mat m(static_cast<Eigen::Index>(init.size()), static_cast<Eigen::Index>(init.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : init) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// |P_a - P_b| for the orthogonal projectors onto two bases
double projector_distance(const Mat& a, const Mat& b) {
  return (a * a.transpose() - b * b.transpose()).norm();
}

}  // namespace

TEST_CASE("row_space_basis of a single unit row") {
  const auto b = row_space_basis<double>(rows({{1, 0, 0}}), 1e-10);
  REQUIRE(b.count() == 1);
  CHECK(std::abs(std::abs(b.vector(0)(0)) - 1.0) < 1e-14);
  CHECK(b.ambient_dim == 3);
}

TEST_CASE("row_space_basis collapses dependent rows") {
  const auto b = row_space_basis<double>(rows({{1, 0}, {2, 0}}));
  REQUIRE(b.count() == 1);
  CHECK(projector_distance(b.vectors, Vec::Unit(2, 0)) < 1e-12);
}

TEST_CASE("row_space_basis rank matches Gaussian elimination on low-rank products") {
  oracle::Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const Mat w = rng.gaussian(3, 2) * rng.gaussian(2, 5);
    const auto b = row_space_basis(w);
    CHECK(b.count() == oracle::gaussian_elimination_rank(w));
    CHECK(b.count() == 2);
  }
}

TEST_CASE("row_space_basis rejects non-finite input") {
  Mat w = rows({{1, 0}, {0, 1}});
  w(1, 1) = std::nan("");
  CHECK_THROWS_AS(row_space_basis(w), InvalidInput);
  CHECK_THROWS_AS(kernel_basis(w), InvalidInput);
}

TEST_CASE("orthogonal_complement") {
  SUBCASE("of e1 in R3 has dimension 2") {
    SubspaceBasis<double> b{Vec::Unit(3, 0), 3, 1e-10};
    const auto c = orthogonal_complement(b);
    REQUIRE(c.count() == 2);
    CHECK((c.vectors.transpose() * b.vectors).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(projector_distance(c.vectors, rows({{0, 0}, {1, 0}, {0, 1}})) < 1e-12);
  }
  SUBCASE("of a full basis is empty") {
    SubspaceBasis<double> b{Mat::Identity(2, 2), 2, 1e-10};
    CHECK(orthogonal_complement(b).empty());
  }
  SUBCASE("of (1,1,0)/sqrt2 is orthogonal to it") {
    SubspaceBasis<double> b{Vec(Eigen::Vector3d(1, 1, 0) / std::sqrt(2.0)), 3, 1e-10};
    const auto c = orthogonal_complement(b);
    REQUIRE(c.count() == 2);
    CHECK((c.vectors.transpose() * b.vectors).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(c.orthonormality_error() < 1e-14);
  }
  SUBCASE("rejects non-orthonormal input") {
    SubspaceBasis<double> b{Vec(Eigen::Vector3d(1, 1, 0)), 3, 1e-10};
    CHECK_THROWS_AS(orthogonal_complement(b), InvalidInput);
  }
}

TEST_CASE("kernel_basis") {
  SUBCASE("of [1 0 0]") {
    const auto k = kernel_basis<double>(rows({{1, 0, 0}}));
    REQUIRE(k.count() == 2);
    CHECK(projector_distance(k.vectors, rows({{0, 0}, {1, 0}, {0, 1}})) < 1e-12);
  }
  SUBCASE("full column rank gives empty basis") {
    CHECK(kernel_basis<double>(rows({{1, 0}, {0, 1}, {1, 1}})).empty());
  }
  SUBCASE("of [[1 1],[2 2]] is (1,-1)/sqrt2") {
    const auto k = kernel_basis<double>(rows({{1, 1}, {2, 2}}));
    REQUIRE(k.count() == 1);
    CHECK(projector_distance(k.vectors, Vec(Eigen::Vector2d(1, -1) / std::sqrt(2.0))) < 1e-12);
  }
}

TEST_CASE("subspace properties over random rank-deficient matrices") {
  oracle::Rng rng(2024);
  for (int t = 0; t < 120; ++t) {
    const Eigen::Index n = 1 + t % 9;
    const Eigen::Index d = 1 + (t / 9) % 7;
    const Eigen::Index r = t % (std::min(n, d) + 1);
    const Mat w = rng.low_rank(d, n, r);
    const auto row = row_space_basis(w);
    const auto ker = kernel_basis(w);
    CAPTURE(n);
    CAPTURE(d);
    CAPTURE(r);
    CHECK(row.count() == r);
    CHECK(row.count() + ker.count() == n);
    CHECK(row.orthonormality_error() <= 1e-10);
    CHECK(ker.orthonormality_error() <= 1e-10);
    if (!ker.empty()) CHECK((w * ker.vectors).norm() <= 1e-10 * std::max(w.norm(), 1.0));
    const auto comp = orthogonal_complement(row);
    CHECK(comp.count() == ker.count());
    CHECK(comp.orthonormality_error() <= 1e-10);
  }
}

TEST_CASE("rank_one") {
  CHECK(rank_one(Vec::Unit(2, 0), Vec::Unit(2, 1)) == rows({{0, 1}, {0, 0}}));
  CHECK(rank_one(Vec(Eigen::Vector2d(1, 2)), Vec::Zero(2)).isZero(0.0));
  CHECK(rank_one(Vec(Eigen::Vector2d(1, 2)), Vec(Eigen::Vector2d(3, 4))) == rows({{3, 4}, {6, 8}}));
  CHECK_THROWS_AS(rank_one(Vec::Zero(2), Vec::Zero(3)), DimensionMismatch);

  oracle::Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const Vec x = rng.gaussian(5), y = rng.gaussian(5), z = rng.gaussian(5);
    CHECK((rank_one(x, y) * z - y.dot(z) * x).norm() <= 1e-12 * (1 + x.norm() * y.norm() * z.norm()));
    const Vec yu = y / y.norm();
    const Vec zp = z - z.dot(yu) * yu;
    CHECK((rank_one(Vec(x / x.norm()), yu) * (zp / zp.norm())).norm() <= 1e-14);
  }
}

TEST_CASE("matrix_exp") {
  SUBCASE("of zero is identity") {
    CHECK(matrix_exp(Mat(Mat::Zero(3, 3))) == Mat::Identity(3, 3));
  }
  SUBCASE("nilpotent rank one truncates to I + A") {
    const Vec x(Eigen::Vector3d(1, 2, 0));
    const Vec y(Eigen::Vector3d(0, 0, 3));
    const Mat a = rank_one(x, y);
    CHECK((matrix_exp(a) - (Mat::Identity(3, 3) + a)).norm() < 1e-14);
  }
  SUBCASE("planar rotation by pi/2") {
    const double th = M_PI / 2;
    const Mat a = rows({{0, -th}, {th, 0}});
    CHECK((matrix_exp(a) - rows({{0, -1}, {1, 0}})).norm() < 1e-14);
  }
  SUBCASE("rejects non-square") {
    CHECK_THROWS_AS(matrix_exp(Mat(Mat::Zero(2, 3))), DimensionMismatch);
  }
  SUBCASE("agrees with a 20-term series for small arguments") {
    oracle::Rng rng(9);
    for (int t = 0; t < 200; ++t) {
      Mat a = rng.gaussian(5, 5);
      a *= rng.uniform(0.0, 0.1) / a.norm();
      CHECK((matrix_exp(a) - oracle::series_exp(a, 20)).norm() <= 1e-12);
    }
  }
  SUBCASE("group law on commuting arguments") {
    oracle::Rng rng(10);
    for (int t = 0; t < 200; ++t) {
      Mat a = rng.gaussian(4, 4);
      a *= rng.uniform(0.0, 1.0) / a.norm();
      const double s = rng.uniform(-1, 1), u = rng.uniform(-1, 1);
      CHECK((matrix_exp(Mat(s * a)) * matrix_exp(Mat(u * a)) - matrix_exp(Mat((s + u) * a))).norm() <= 1e-8);
    }
  }
  SUBCASE("large arguments go through squaring") {
    const Mat a = rows({{0, -10}, {10, 0}});
    const Mat expected = rows({{std::cos(10.0), -std::sin(10.0)}, {std::sin(10.0), std::cos(10.0)}});
    CHECK((matrix_exp(a) - expected).norm() < 1e-12);
  }
}

TEST_CASE("operator_norm_upper is Frobenius and bounds the spectral norm") {
  CHECK(operator_norm_upper(Mat(Mat::Identity(2, 2))) == doctest::Approx(std::sqrt(2.0)));
  CHECK(operator_norm_upper(Mat(Mat::Zero(3, 3))) == 0.0);
  CHECK(operator_norm_upper(rows({{3, 0}, {0, 4}})) == doctest::Approx(5.0));
  oracle::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Mat a = rng.gaussian(4, 6);
    Eigen::JacobiSVD<Mat> svd(a);
    CHECK(operator_norm_upper(a) >= svd.singularValues()(0));
  }
}

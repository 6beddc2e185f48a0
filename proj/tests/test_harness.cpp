#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "algadv/harness.hpp"
#include "algadv/symmetry.hpp"
#include "oracles.hpp"

using namespace algadv;
using oracle::Mat;
using oracle::Vec;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("algadv_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("empty document gives defaults") {
    const auto c = config_from_json(nlohmann::json::object());
    CHECK(c.network.input_dim == 6);
    CHECK(c.attack.epsilon == 0.5);
    CHECK(c.attack.modes.size() == 2);
    CHECK(c.attack.baselines.size() == 4);
  }
  SUBCASE("explicit fields are honoured") {
    const auto j = nlohmann::json::parse(R"({
      "network": {"input_dim": 5, "head_dim": 3, "rank": 1, "seed": 9,
                  "tail": [{"size": 4, "activation": "softplus"}, {"size": 2, "activation": "identity"}]},
      "dataset": {"count": 7, "low": 0, "high": 2, "seed": 11},
      "attack": {"modes": ["translation"], "baselines": ["max", "gaussian"], "epsilon": 0.25,
                 "quadrature": {"scheme": "trapezoid", "steps": 32}},
      "paths": {"out": "results"}
    })");
    const auto c = config_from_json(j);
    CHECK(c.network.input_dim == 5);
    CHECK(c.network.rank == 1);
    REQUIRE(c.network.tail.size() == 2);
    CHECK(c.network.tail[0].activation == Activation::kSoftplus);
    CHECK(c.dataset.count == 7);
    CHECK(c.attack.modes == std::vector<AttackMode>{AttackMode::kTranslation});
    CHECK(c.attack.baselines == std::vector<BaselineKind>{BaselineKind::kMaxDistance, BaselineKind::kGaussian});
    CHECK(c.attack.quad.scheme == QuadratureScheme::kTrapezoid);
    CHECK(c.attack.quad.steps == 32);
    CHECK(c.network_path() == std::filesystem::path("results") / "network.json");
  }
  SUBCASE("round trip through JSON") {
    auto c = config_from_json(nlohmann::json::object());
    c.attack.epsilon = 0.125;
    c.network.seed = 77;
    const auto back = config_from_json(config_to_json(c));
    CHECK(back.attack.epsilon == 0.125);
    CHECK(back.network.seed == 77);
    CHECK(config_to_json(back) == config_to_json(c));
  }
  SUBCASE("bad values are rejected") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"attack": {"modes": ["spin"]}})")), InvalidInput);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"attack": {"baselines": ["mean"]}})")), InvalidInput);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"network": {"input_dim": "six"}})")), InvalidInput);
  }
}

TEST_CASE("make_random_network") {
  SUBCASE("head weight has the requested rank") {
    for (int r = 0; r <= 4; ++r) {
      NetworkSpec spec;
      spec.rank = r;
      spec.seed = 100 + static_cast<std::uint64_t>(r);
      const auto net = make_random_network(spec);
      CHECK(net.head_weight.rows() == 4);
      CHECK(net.head_weight.cols() == 6);
      CHECK(oracle::gaussian_elimination_rank(net.head_weight, 1e-9) == r);
    }
  }
  SUBCASE("rank larger than min(d, n) is rejected") {
    NetworkSpec spec;
    spec.rank = 5;
    CHECK_THROWS_AS(make_random_network(spec), InvalidInput);
  }
  SUBCASE("full rank n has no rotation symmetries") {
    NetworkSpec spec;
    spec.input_dim = 4;
    spec.head_dim = 4;
    spec.rank = 4;
    CHECK(is_empty(lie_algebra_pW(make_random_network(spec).head_weight)));
  }
  SUBCASE("same seed gives the same network") {
    NetworkSpec spec;
    const auto a = make_random_network(spec), b = make_random_network(spec);
    CHECK(a.head_weight == b.head_weight);
    CHECK(a.tail[0].weight == b.tail[0].weight);
    spec.seed = 2;
    CHECK(make_random_network(spec).head_weight != a.head_weight);
  }
}

TEST_CASE("datasets") {
  DatasetSpec spec;
  spec.count = 9;
  spec.low = -2.0;
  spec.high = 3.0;
  const auto ds = make_dataset(spec, 4);
  CHECK(ds.points.rows() == 9);
  CHECK(ds.points.cols() == 4);
  CHECK(ds.points.minCoeff() >= -2.0);
  CHECK(ds.points.maxCoeff() <= 3.0);
  CHECK(ds.stats.min == Vec::Constant(4, -2.0));
  CHECK(ds.stats.max == Vec::Constant(4, 3.0));

  SUBCASE("CSV round trip is exact") {
    const auto dir = scratch_dir("csv");
    save_dataset_csv(ds.points, dir / "d.csv");
    CHECK(load_dataset_csv(dir / "d.csv") == ds.points);
  }
  SUBCASE("malformed CSV is rejected") {
    const auto dir = scratch_dir("badcsv");
    write_text(dir / "bad.csv", "0,1\n1.0,abc\n");
    CHECK_THROWS_AS(load_dataset_csv(dir / "bad.csv"), InvalidInput);
    write_text(dir / "ragged.csv", "0,1\n1.0\n");
    CHECK_THROWS_AS(load_dataset_csv(dir / "ragged.csv"), InvalidInput);
    CHECK_THROWS_AS(load_dataset_csv(dir / "missing.csv"), InvalidInput);
  }
  SUBCASE("format_double round-trips") {
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("attack sweep") {
  auto cfg = config_from_json(nlohmann::json::object());
  DatasetSpec dspec;
  dspec.count = 4;
  const auto net = make_random_network(cfg.network);
  const auto ds = make_dataset(dspec, 6);
  cfg.attack.quad.steps = 32;

  SUBCASE("one row per input, mode and baseline with a filled summary") {
    const auto report = run_attack_sweep(net, ds.points, ds.stats, cfg.attack);
    CHECK(report.rows.size() == 4 * 2 * 4);
    for (const auto& row : report.rows) {
      REQUIRE(row.result.has_value());
      CHECK(row.result->distance() <= cfg.attack.epsilon);
      CHECK(row.result->report.output_residual <= cfg.attack.output_tol);
    }
    CHECK(report.summary["translation"]["zero"]["trials"] == 4);
    CHECK(report.summary["rotation"]["max"]["errors"] == 0);
    const auto csv = attack_report_csv(report);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 32);
    CHECK(csv.rfind("input_index,mode,baseline,epsilon,distance", 0) == 0);
  }
  SUBCASE("trivial groups become error rows, not aborts") {
    NetworkSpec full;
    full.rank = 4;
    full.head_dim = 6;
    const auto full_net = make_random_network(full);
    const auto report = run_attack_sweep(full_net, ds.points, ds.stats, cfg.attack);
    CHECK(report.rows.size() == 32);
    for (const auto& row : report.rows) {
      if (row.mode == AttackMode::kTranslation) {
        CHECK(row.result.has_value());
      }
    }
    NetworkSpec square;
    square.rank = 6;
    square.head_dim = 6;
    const auto square_net = make_random_network(square);
    const auto r2 = run_attack_sweep(square_net, ds.points, ds.stats, cfg.attack);
    for (const auto& row : r2.rows) {
      CHECK_FALSE(row.result.has_value());
      CHECK(row.status.find("trivial symmetry group") == 0);
    }
    CHECK(r2.summary["rotation"]["zero"]["errors"] == 4);
  }
  SUBCASE("byte-identical reruns") {
    const auto a = run_attack_sweep(net, ds.points, ds.stats, cfg.attack);
    const auto b = run_attack_sweep(net, ds.points, ds.stats, cfg.attack);
    CHECK(attack_report_csv(a) == attack_report_csv(b));
    CHECK(attack_report_json(a).dump() == attack_report_json(b).dump());
  }
}

TEST_CASE("equivariance table and summary") {
  auto cfg = config_from_json(nlohmann::json::object());
  cfg.equivariance.instances = 3;
  const auto rows = run_equivariance_table(cfg);
  CHECK_FALSE(rows.empty());
  for (const auto& row : rows) CHECK(row.residual >= 0.0);
  const auto csv = equivariance_csv(rows);
  CHECK(csv.rfind("kind,instance,steps,residual", 0) == 0);
  const auto summary = equivariance_summary(rows);
  CHECK(summary.contains("translation"));
  CHECK(summary["translation"]["monotone_fraction"].get<double>() >= 0.0);

  SUBCASE("summary counts non-increasing sequences") {
    std::vector<EquivarianceRow> fake{{0, "k", 16, 1e-3}, {0, "k", 64, 1e-5}, {0, "k", 256, 1e-7},
                                      {1, "k", 16, 1e-3}, {1, "k", 64, 1e-2}, {1, "k", 256, 1e-7},
                                      {2, "k", 16, 1e-14}, {2, "k", 64, 3e-14}, {2, "k", 256, 1e-15}};
    CHECK(equivariance_summary(fake)["k"]["monotone_fraction"].get<double>() == doctest::Approx(2.0 / 3.0));
  }
}

TEST_CASE("mix_seed") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) != 0);
}

TEST_CASE("write_text creates parent directories") {
  const auto dir = scratch_dir("write");
  write_text(dir / "a" / "b" / "c.txt", "hello\n");
  CHECK(slurp(dir / "a" / "b" / "c.txt") == "hello\n");
}

#pragma once

// Reproducible experiment harness behind the CLI: config parsing, synthetic
// networks and datasets, attack sweeps, the invariant suite and the
// equivariance table.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "algadv/attack.hpp"
#include "algadv/network.hpp"

namespace algadv {

struct LayerSpec {
  int size = 8;
  Activation activation = Activation::kTanh;
};

struct NetworkSpec {
  int input_dim = 6;
  int head_dim = 4;
  int rank = 2;
  std::vector<LayerSpec> tail{{8, Activation::kTanh}, {3, Activation::kIdentity}};
  std::uint64_t seed = 1;

  void validate() const;
};

struct DatasetSpec {
  int count = 20;
  double low = -1.0;
  double high = 1.0;
  std::uint64_t seed = 2;
};

struct AttackConfig {
  std::vector<AttackMode> modes{AttackMode::kRotation, AttackMode::kTranslation};
  std::vector<BaselineKind> baselines{BaselineKind::kZero, BaselineKind::kMaxDistance, BaselineKind::kUniform,
                                      BaselineKind::kGaussian};
  double epsilon = 0.5;
  int p = 2;
  double sigma = 0.5;
  QuadratureSpec quad{QuadratureScheme::kGaussLegendre, 64};
  int out_index = 0;
  double divergence_threshold = 0.1;
  double output_tol = 1e-8;
  int max_retries = 16;
  int topk = 3;
  std::uint64_t seed = 3;
};

struct VerifyConfig {
  int nets = 5;
  int samples = 100;
  int quad_steps = 256;
  bool corrupt_g = false;
  std::uint64_t seed = 4;
};

struct EquivarianceConfig {
  int instances = 10;
  std::vector<int> steps{16, 64, 256};
  std::uint64_t seed = 5;
};

struct ExperimentConfig {
  NetworkSpec network;
  DatasetSpec dataset;
  AttackConfig attack;
  VerifyConfig verify;
  EquivarianceConfig equivariance;
  std::string network_file = "network.json";
  std::string dataset_file = "dataset.csv";
  std::filesystem::path out_dir = "out";

  std::filesystem::path network_path() const;
  std::filesystem::path dataset_path() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Stateless 64-bit mixer used to derive per-site seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Random network whose head weight has rank exactly spec.rank (product of
/// d x r and r x n Gaussian factors).
MlpNetworkd make_random_network(const NetworkSpec& spec);

struct Dataset {
  Mat points;  // count x n
  DatasetStats stats;
};

Dataset make_dataset(const DatasetSpec& spec, Eigen::Index n);
void save_dataset_csv(const Mat& points, const std::filesystem::path& path);
Mat load_dataset_csv(const std::filesystem::path& path);

std::string format_double(double v);

struct ReportRow {
  int input_index = 0;
  AttackMode mode = AttackMode::kTranslation;
  BaselineKind baseline = BaselineKind::kZero;
  double epsilon = 0.0;
  std::optional<AttackResult> result;  // empty for error rows
  std::string status = "ok";
};

struct AttackReport {
  std::vector<ReportRow> rows;
  nlohmann::json summary;
};

AttackReport run_attack_sweep(const MlpNetworkd& net, const Mat& points, const DatasetStats& stats,
                              const AttackConfig& cfg);
std::string attack_report_csv(const AttackReport& report);
nlohmann::json attack_report_json(const AttackReport& report);

struct InvariantResult {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

std::vector<InvariantResult> run_invariant_suite(const ExperimentConfig& cfg);
nlohmann::json invariant_report_json(const std::vector<InvariantResult>& results);

struct EquivarianceRow {
  int instance = 0;
  std::string kind;
  int steps = 0;
  double residual = 0.0;
};

std::vector<EquivarianceRow> run_equivariance_table(const ExperimentConfig& cfg);
std::string equivariance_csv(const std::vector<EquivarianceRow>& rows);
/// Fraction of instances of each kind whose residual is non-increasing across
/// the configured steps (residuals below 1e-12 count as converged).
nlohmann::json equivariance_summary(const std::vector<EquivarianceRow>& rows);

inline constexpr double kResidualFloor = 1e-12;

/// Writes text to path, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace algadv

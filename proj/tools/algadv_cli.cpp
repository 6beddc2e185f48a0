// algadv: generate toy networks and datasets, run algebraic attacks against
// integrated gradients, and verify the symmetry invariants.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "algadv/harness.hpp"
#include "algadv/network_io.hpp"

namespace {

using namespace algadv;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> quad_steps;
  std::optional<double> epsilon;
  std::optional<std::string> baseline;
  std::optional<std::string> mode;
  bool corrupt_g = false;
};

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig cfg = f.config.empty() ? config_from_json(nlohmann::json::object()) : load_config(f.config);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.epsilon) cfg.attack.epsilon = *f.epsilon;
  if (f.quad_steps) cfg.attack.quad.steps = *f.quad_steps;
  if (f.baseline) {
    auto kind = parse_baseline(*f.baseline);
    if (!kind) throw InvalidInput("unknown baseline '" + *f.baseline + "'");
    cfg.attack.baselines = {*kind};
  }
  if (f.mode) {
    auto mode = parse_mode(*f.mode);
    if (!mode) throw InvalidInput("unknown mode '" + *f.mode + "'");
    cfg.attack.modes = {*mode};
  }
  return cfg;
}

int cmd_gen_net(ExperimentConfig cfg, const Flags& f) {
  if (f.seed) cfg.network.seed = *f.seed;
  const auto net = make_random_network(cfg.network);
  const auto path = cfg.network_path();
  write_text(path, dump_json(network_to_json(net)));
  std::cout << fmt::format("wrote {} (n={}, d={}, rank={})\n", path.string(), net.input_dim(), net.head_dim(),
                           numerical_rank(net.head_weight));
  return 0;
}

int cmd_gen_data(ExperimentConfig cfg, const Flags& f) {
  if (f.seed) cfg.dataset.seed = *f.seed;
  const auto data = make_dataset(cfg.dataset, cfg.network.input_dim);
  const auto path = cfg.dataset_path();
  save_dataset_csv(data.points, path);
  std::cout << fmt::format("wrote {} ({} points)\n", path.string(), data.points.rows());
  return 0;
}

int cmd_attack(ExperimentConfig cfg, const Flags& f) {
  if (f.seed) cfg.attack.seed = *f.seed;
  const auto net = load_network(cfg.network_path());
  const Mat points = load_dataset_csv(cfg.dataset_path());
  const auto stats = DatasetStats::box(net.input_dim(), cfg.dataset.low, cfg.dataset.high);
  const auto report = run_attack_sweep(net, points, stats, cfg.attack);
  write_text(cfg.out_dir / "attack_report.csv", attack_report_csv(report));
  auto j = attack_report_json(report);
  j["config"] = config_to_json(cfg);
  write_text(cfg.out_dir / "attack_report.json", dump_json(j));
  std::cout << fmt::format("wrote {} rows to {}\n", report.rows.size(), (cfg.out_dir / "attack_report.csv").string());
  return 0;
}

int cmd_verify(ExperimentConfig cfg, const Flags& f) {
  if (f.seed) cfg.verify.seed = *f.seed;
  if (f.quad_steps) cfg.verify.quad_steps = *f.quad_steps;
  if (f.corrupt_g) cfg.verify.corrupt_g = true;
  const auto results = run_invariant_suite(cfg);
  write_text(cfg.out_dir / "verify_report.json", dump_json(invariant_report_json(results)));
  for (const auto& r : results)
    std::cout << fmt::format("{:<40} {:>4}  max_residual={:.3e} tol={:.1e}{}\n", r.name, r.passed ? "PASS" : "FAIL",
                             r.max_residual, r.tolerance, r.note.empty() ? "" : "  (" + r.note + ")");
  return 0;
}

int cmd_equivariance(ExperimentConfig cfg, const Flags& f) {
  if (f.seed) cfg.equivariance.seed = *f.seed;
  if (f.quad_steps) cfg.equivariance.steps = {*f.quad_steps};
  const auto rows = run_equivariance_table(cfg);
  write_text(cfg.out_dir / "equivariance.csv", equivariance_csv(rows));
  const auto summary = equivariance_summary(rows);
  write_text(cfg.out_dir / "equivariance_summary.json", dump_json(summary));
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_report(const ExperimentConfig& cfg) {
  const auto path = cfg.out_dir / "attack_report.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open report '" + path.string() + "'; run 'attack' first");
  nlohmann::json j;
  in >> j;
  std::string md = "| mode | baseline | trials | errors | success rate | cond. 1 | cond. 2 | median l2 |\n"
                   "|---|---|---|---|---|---|---|---|\n";
  for (const auto& [mode, cells] : j.at("summary").items()) {
    for (const auto& [baseline, c] : cells.items()) {
      md += fmt::format("| {} | {} | {} | {} | {:.3f} | {:.3f} | {:.3f} | {:.4f} |\n", mode, baseline,
                        c.at("trials").get<int>(), c.at("errors").get<int>(), c.at("success_rate").get<double>(),
                        c.at("condition1_rate").get<double>(), c.at("condition2_rate").get<double>(),
                        c.at("median_l2_relative").get<double>());
    }
  }
  write_text(cfg.out_dir / "summary.md", md);
  std::cout << md;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Algebraic adversarial examples against integrated gradients"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "experiment config (JSON)");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--seed", f.seed, "override the seed of the stage being run");
  app.add_option("--quad-steps", f.quad_steps, "quadrature steps");
  app.add_option("--epsilon", f.epsilon, "perturbation budget");
  app.add_option("--baseline", f.baseline, "baseline kind")->check(CLI::IsMember({"zero", "max", "uniform", "gaussian"}));
  app.add_option("--mode", f.mode, "attack mode")->check(CLI::IsMember({"rotation", "translation"}));

  auto* gen_net = app.add_subcommand("gen-net", "write a random network with controlled head rank");
  auto* gen_data = app.add_subcommand("gen-data", "write a synthetic dataset sampled in the config box");
  auto* attack = app.add_subcommand("attack", "run attacks over the dataset and write CSV/JSON reports");
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  verify->add_flag("--corrupt-g", f.corrupt_g, "break orthogonality of g (negative control)");
  auto* equiv = app.add_subcommand("equivariance", "tabulate equivariance residuals against quadrature steps");
  auto* report = app.add_subcommand("report", "summarize an attack report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto cfg = resolve(f);
    if (*gen_net) return cmd_gen_net(cfg, f);
    if (*gen_data) return cmd_gen_data(cfg, f);
    if (*attack) return cmd_attack(cfg, f);
    if (*verify) return cmd_verify(cfg, f);
    if (*equiv) return cmd_equivariance(cfg, f);
    if (*report) return cmd_report(cfg);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 1;
}

#include "algadv/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "algadv/network_io.hpp"

namespace algadv {

namespace {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

QuadratureScheme parse_scheme(const std::string& s) {
  if (s == "gauss_legendre") return QuadratureScheme::kGaussLegendre;
  if (s == "midpoint" || s == "midpoint_riemann") return QuadratureScheme::kMidpointRiemann;
  if (s == "trapezoid") return QuadratureScheme::kTrapezoid;
  throw InvalidInput("unknown quadrature scheme '" + s + "'");
}

std::string scheme_name(QuadratureScheme s) {
  switch (s) {
    case QuadratureScheme::kGaussLegendre: return "gauss_legendre";
    case QuadratureScheme::kMidpointRiemann: return "midpoint_riemann";
    case QuadratureScheme::kTrapezoid: return "trapezoid";
  }
  return "gauss_legendre";
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

void NetworkSpec::validate() const {
  if (input_dim <= 0 || head_dim <= 0) throw InvalidInput("network dims must be positive");
  if (rank < 0 || rank > std::min(input_dim, head_dim))
    throw InvalidInput("rank r=" + std::to_string(rank) + " exceeds min(d, n)=" +
                       std::to_string(std::min(input_dim, head_dim)));
  for (const auto& l : tail)
    if (l.size <= 0) throw InvalidInput("tail layer sizes must be positive");
}

std::filesystem::path ExperimentConfig::network_path() const {
  std::filesystem::path p(network_file);
  return p.is_absolute() ? p : out_dir / p;
}

std::filesystem::path ExperimentConfig::dataset_path() const {
  std::filesystem::path p(dataset_file);
  return p.is_absolute() ? p : out_dir / p;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("network")) {
      const auto& nj = j.at("network");
      read_opt(nj, "input_dim", c.network.input_dim);
      read_opt(nj, "head_dim", c.network.head_dim);
      read_opt(nj, "rank", c.network.rank);
      read_opt(nj, "seed", c.network.seed);
      if (nj.contains("tail")) {
        c.network.tail.clear();
        for (const auto& lj : nj.at("tail")) {
          LayerSpec l;
          l.size = lj.at("size").get<int>();
          const auto name = lj.value("activation", std::string("tanh"));
          auto act = parse_activation(name);
          if (!act) throw InvalidInput("unknown activation '" + name + "'");
          l.activation = *act;
          c.network.tail.push_back(l);
        }
      }
    }
    if (j.contains("dataset")) {
      const auto& dj = j.at("dataset");
      read_opt(dj, "count", c.dataset.count);
      read_opt(dj, "low", c.dataset.low);
      read_opt(dj, "high", c.dataset.high);
      read_opt(dj, "seed", c.dataset.seed);
    }
    if (j.contains("attack")) {
      const auto& aj = j.at("attack");
      if (aj.contains("modes")) {
        c.attack.modes.clear();
        for (const auto& m : aj.at("modes")) {
          auto mode = parse_mode(m.get<std::string>());
          if (!mode) throw InvalidInput("unknown attack mode '" + m.get<std::string>() + "'");
          c.attack.modes.push_back(*mode);
        }
      }
      if (aj.contains("baselines")) {
        c.attack.baselines.clear();
        for (const auto& b : aj.at("baselines")) {
          auto kind = parse_baseline(b.get<std::string>());
          if (!kind) throw InvalidInput("unknown baseline '" + b.get<std::string>() + "'");
          c.attack.baselines.push_back(*kind);
        }
      }
      read_opt(aj, "epsilon", c.attack.epsilon);
      read_opt(aj, "p", c.attack.p);
      read_opt(aj, "sigma", c.attack.sigma);
      if (aj.contains("quadrature")) {
        const auto& qj = aj.at("quadrature");
        if (qj.contains("scheme")) c.attack.quad.scheme = parse_scheme(qj.at("scheme").get<std::string>());
        read_opt(qj, "steps", c.attack.quad.steps);
      }
      read_opt(aj, "out_index", c.attack.out_index);
      read_opt(aj, "divergence_threshold", c.attack.divergence_threshold);
      read_opt(aj, "output_tol", c.attack.output_tol);
      read_opt(aj, "max_retries", c.attack.max_retries);
      read_opt(aj, "topk", c.attack.topk);
      read_opt(aj, "seed", c.attack.seed);
    }
    if (j.contains("verify")) {
      const auto& vj = j.at("verify");
      read_opt(vj, "nets", c.verify.nets);
      read_opt(vj, "samples", c.verify.samples);
      read_opt(vj, "quad_steps", c.verify.quad_steps);
      read_opt(vj, "corrupt_g", c.verify.corrupt_g);
      read_opt(vj, "seed", c.verify.seed);
    }
    if (j.contains("equivariance")) {
      const auto& ej = j.at("equivariance");
      read_opt(ej, "instances", c.equivariance.instances);
      read_opt(ej, "steps", c.equivariance.steps);
      read_opt(ej, "seed", c.equivariance.seed);
    }
    if (j.contains("paths")) {
      const auto& pj = j.at("paths");
      read_opt(pj, "network", c.network_file);
      read_opt(pj, "dataset", c.dataset_file);
      if (pj.contains("out")) c.out_dir = pj.at("out").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  c.network.validate();
  if (c.dataset.count < 1) throw InvalidInput("dataset count must be >= 1");
  if (!(c.dataset.low < c.dataset.high)) throw InvalidInput("dataset box requires low < high");
  if (c.equivariance.steps.empty()) throw InvalidInput("equivariance steps must be non-empty");
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json tail = nlohmann::json::array();
  for (const auto& l : c.network.tail) tail.push_back({{"size", l.size}, {"activation", std::string(to_string(l.activation))}});
  nlohmann::json modes = nlohmann::json::array();
  for (auto m : c.attack.modes) modes.push_back(std::string(to_string(m)));
  nlohmann::json baselines = nlohmann::json::array();
  for (auto b : c.attack.baselines) baselines.push_back(std::string(to_string(b)));
  return {
      {"network",
       {{"input_dim", c.network.input_dim},
        {"head_dim", c.network.head_dim},
        {"rank", c.network.rank},
        {"tail", tail},
        {"seed", c.network.seed}}},
      {"dataset", {{"count", c.dataset.count}, {"low", c.dataset.low}, {"high", c.dataset.high}, {"seed", c.dataset.seed}}},
      {"attack",
       {{"modes", modes},
        {"baselines", baselines},
        {"epsilon", c.attack.epsilon},
        {"p", c.attack.p},
        {"sigma", c.attack.sigma},
        {"quadrature", {{"scheme", scheme_name(c.attack.quad.scheme)}, {"steps", c.attack.quad.steps}}},
        {"out_index", c.attack.out_index},
        {"divergence_threshold", c.attack.divergence_threshold},
        {"output_tol", c.attack.output_tol},
        {"max_retries", c.attack.max_retries},
        {"topk", c.attack.topk},
        {"seed", c.attack.seed}}},
      {"verify",
       {{"nets", c.verify.nets},
        {"samples", c.verify.samples},
        {"quad_steps", c.verify.quad_steps},
        {"corrupt_g", c.verify.corrupt_g},
        {"seed", c.verify.seed}}},
      {"equivariance", {{"instances", c.equivariance.instances}, {"steps", c.equivariance.steps}, {"seed", c.equivariance.seed}}},
      {"paths", {{"network", c.network_file}, {"dataset", c.dataset_file}, {"out", c.out_dir.string()}}}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined state
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MlpNetworkd make_random_network(const NetworkSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Eigen::Index r, Eigen::Index c, double scale) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < c; ++k) m(i, k) = scale * normal(rng);
    return m;
  };
  const Eigen::Index n = spec.input_dim;
  const Eigen::Index d = spec.head_dim;
  const Eigen::Index r = spec.rank;

  MlpNetworkd net;
  if (r == 0) {
    net.head_weight = Mat::Zero(d, n);
  } else {
    const Mat left = gaussian(d, r, 1.0);
    const Mat right = gaussian(r, n, 1.0 / std::sqrt(static_cast<double>(n)));
    net.head_weight = left * right;
  }
  net.head_bias = gaussian(d, 1, 0.5);
  Eigen::Index width = d;
  for (const auto& l : spec.tail) {
    TailLayerd layer;
    layer.weight = gaussian(l.size, width, 1.0 / std::sqrt(static_cast<double>(width)));
    layer.bias = gaussian(l.size, 1, 0.1);
    layer.activation = l.activation;
    net.tail.push_back(std::move(layer));
    width = l.size;
  }
  return net;
}

Dataset make_dataset(const DatasetSpec& spec, Eigen::Index n) {
  if (spec.count < 1) throw InvalidInput("dataset count must be >= 1");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(spec.low, spec.high);
  Dataset d;
  d.points.resize(spec.count, n);
  for (Eigen::Index i = 0; i < d.points.rows(); ++i)
    for (Eigen::Index k = 0; k < n; ++k) d.points(i, k) = u(rng);
  d.stats = DatasetStats::box(n, spec.low, spec.high);
  return d;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  out << text;
}

void save_dataset_csv(const Mat& points, const std::filesystem::path& path) {
  std::string text;
  for (Eigen::Index k = 0; k < points.cols(); ++k) text += (k ? "," : "") + std::to_string(k);
  text += "\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index k = 0; k < points.cols(); ++k) text += (k ? "," : "") + format_double(points(i, k));
    text += "\n";
  }
  write_text(path, text);
}

Mat load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("dataset '" + path.string() + "' is empty");
  const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidInput("dataset '" + path.string() + "': bad number '" + cell + "'");
      }
    }
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw DimensionMismatch("dataset '" + path.string() + "': row width differs from header");
    rows.push_back(std::move(row));
  }
  Mat m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
  return m;
}

AttackReport run_attack_sweep(const MlpNetworkd& net, const Mat& points, const DatasetStats& stats,
                              const AttackConfig& cfg) {
  require_dims(points.cols() == net.input_dim(), "dataset width " + std::to_string(points.cols()) +
                                                     " does not match network input " +
                                                     std::to_string(net.input_dim()));
  AttackReport report;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vec x = points.row(i).transpose();
    for (auto mode : cfg.modes) {
      for (auto kind : cfg.baselines) {
        AttackSpec spec;
        spec.mode = mode;
        spec.epsilon = cfg.epsilon;
        spec.baseline.kind = kind;
        spec.baseline.p = cfg.p;
        spec.baseline.sigma = cfg.sigma;
        spec.quad = cfg.quad;
        spec.out_index = cfg.out_index;
        spec.divergence_threshold = cfg.divergence_threshold;
        spec.output_tol = cfg.output_tol;
        spec.max_retries = cfg.max_retries;
        spec.topk = cfg.topk;
        spec.seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(i)),
                             static_cast<std::uint64_t>(mode) * 16 + static_cast<std::uint64_t>(kind));
        spec.baseline.seed = mix_seed(spec.seed, 0xBA5E);

        ReportRow row;
        row.input_index = static_cast<int>(i);
        row.mode = mode;
        row.baseline = kind;
        row.epsilon = cfg.epsilon;
        try {
          auto out = run_attack(net, x, spec, &stats);
          if (auto* e = std::get_if<EmptyAlgebra>(&out))
            row.status = "trivial symmetry group: " + e->reason;
          else
            row.result = std::get<AttackResult>(std::move(out));
        } catch (const DegenerateInput& e) {
          row.status = std::string("degenerate input: ") + e.what();
        }
        report.rows.push_back(std::move(row));
      }
    }
  }

  // summary per (mode, baseline) cell
  nlohmann::json summary = nlohmann::json::object();
  for (auto mode : cfg.modes) {
    for (auto kind : cfg.baselines) {
      int trials = 0, errors = 0, successes = 0, cond1 = 0, cond2 = 0;
      double max_distance = 0.0, max_residual = 0.0;
      std::vector<double> l2;
      for (const auto& row : report.rows) {
        if (row.mode != mode || row.baseline != kind) continue;
        ++trials;
        if (!row.result) {
          ++errors;
          continue;
        }
        const auto& rep = row.result->report;
        successes += rep.success;
        cond1 += rep.within_epsilon;
        cond2 += rep.output_preserved;
        max_distance = std::max(max_distance, rep.distance);
        max_residual = std::max(max_residual, rep.output_residual);
        l2.push_back(rep.divergence.l2_relative);
      }
      const int ok = trials - errors;
      auto rate = [&](int k) { return ok > 0 ? static_cast<double>(k) / ok : 0.0; };
      summary[std::string(to_string(mode))][std::string(to_string(kind))] = {
          {"trials", trials},
          {"errors", errors},
          {"successes", successes},
          {"success_rate", rate(successes)},
          {"condition1_rate", rate(cond1)},
          {"condition2_rate", rate(cond2)},
          {"median_l2_relative", median(l2)},
          {"max_distance", max_distance},
          {"max_output_residual", max_residual}};
    }
  }
  report.summary = std::move(summary);
  return report;
}

std::string attack_report_csv(const AttackReport& report) {
  std::string out =
      "input_index,mode,baseline,epsilon,distance,output_residual,argmax_preserved,l2_relative,cosine,"
      "topk_jaccard,within_epsilon,output_preserved,attribution_changed,success,retries,status\n";
  for (const auto& row : report.rows) {
    out += fmt::format("{},{},{},{},", row.input_index, to_string(row.mode), to_string(row.baseline),
                       format_double(row.epsilon));
    if (row.result) {
      const auto& r = row.result->report;
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},", format_double(r.distance),
                         format_double(r.output_residual), int(r.argmax_preserved),
                         format_double(r.divergence.l2_relative), format_double(r.divergence.cosine),
                         format_double(r.divergence.topk_jaccard), int(r.within_epsilon), int(r.output_preserved),
                         int(r.attribution_changed), int(r.success), row.result->retries_used);
    } else {
      out += ",,,,,,,,,0,0,";
    }
    // status never contains commas or quotes from our own messages, but guard anyway
    std::string status = row.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out += status + "\n";
  }
  return out;
}

nlohmann::json attack_report_json(const AttackReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json j = {{"input_index", row.input_index},
                        {"mode", std::string(to_string(row.mode))},
                        {"baseline", std::string(to_string(row.baseline))},
                        {"epsilon", row.epsilon},
                        {"status", row.status}};
    if (row.result) j["result"] = to_json(*row.result);
    rows.push_back(std::move(j));
  }
  return {{"rows", rows}, {"summary", report.summary}};
}

}  // namespace algadv

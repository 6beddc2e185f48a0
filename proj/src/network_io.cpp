#include "algadv/network_io.hpp"

#include <fstream>
#include <sstream>

namespace algadv {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftplus: return "softplus";
  }
  return "identity";
}

std::optional<Activation> parse_activation(std::string_view name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "softplus") return Activation::kSoftplus;
  return std::nullopt;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index cols_hint) {
  if (!j.is_array()) throw InvalidInput("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : std::max<Eigen::Index>(cols_hint, 0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InvalidInput("matrix rows must be arrays of equal length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& e = row[static_cast<std::size_t>(c)];
      if (!e.is_number()) throw InvalidInput("matrix entries must be numbers");
      m(i, c) = e.get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidInput("vector must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput("vector entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

nlohmann::json network_to_json(const MlpNetworkd& net) {
  nlohmann::json j;
  j["input_dim"] = net.input_dim();
  j["head_weight"] = matrix_to_json(net.head_weight);
  j["head_bias"] = vector_to_json(net.head_bias);
  j["tail"] = nlohmann::json::array();
  for (const auto& layer : net.tail) {
    j["tail"].push_back({{"weight", matrix_to_json(layer.weight)},
                         {"bias", vector_to_json(layer.bias)},
                         {"activation", std::string(to_string(layer.activation))}});
  }
  return j;
}

MlpNetworkd network_from_json(const nlohmann::json& j) {
  try {
    MlpNetworkd net;
    const auto n = j.at("input_dim").get<Eigen::Index>();
    if (n <= 0) throw InvalidInput("input_dim must be positive");
    net.head_weight = matrix_from_json(j.at("head_weight"), n);
    require_dims(net.head_weight.cols() == n, "head_weight columns do not match input_dim");
    net.head_bias = vector_from_json(j.at("head_bias"));
    for (const auto& lj : j.at("tail")) {
      TailLayerd layer;
      layer.weight = matrix_from_json(lj.at("weight"));
      layer.bias = vector_from_json(lj.at("bias"));
      const auto name = lj.at("activation").get<std::string>();
      auto act = parse_activation(name);
      if (!act) throw InvalidInput("unknown activation '" + name + "'");
      layer.activation = *act;
      net.tail.push_back(std::move(layer));
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("network json: ") + e.what());
  }
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void save_network(const MlpNetworkd& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  out << dump_json(network_to_json(net));
}

MlpNetworkd load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open network file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("network file '" + path.string() + "': " + e.what());
  }
  return network_from_json(j);
}

}  // namespace algadv

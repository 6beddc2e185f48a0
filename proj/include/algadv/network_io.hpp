#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "algadv/network.hpp"

namespace algadv {

// Schema:
//   {"input_dim": n,
//    "head_weight": [[...], ...],   row-major, d rows of n
//    "head_bias": [...],
//    "tail": [{"weight": [[...]], "bias": [...], "activation": "tanh"}, ...]}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index cols_hint = -1);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json network_to_json(const MlpNetworkd& net);
/// Parses and validates a network document. Throws InvalidInput on schema errors.
MlpNetworkd network_from_json(const nlohmann::json& j);

std::string dump_json(const nlohmann::json& j);
void save_network(const MlpNetworkd& net, const std::filesystem::path& path);
MlpNetworkd load_network(const std::filesystem::path& path);

}  // namespace algadv

#pragma once

// Feed-forward networks of the form x -> f(W x + b). The leading affine map
// (W, b) is kept separate from the smooth tail f because the symmetry groups
// only depend on W.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "algadv/errors.hpp"
#include "algadv/linalg.hpp"

namespace algadv {

enum class Activation { kIdentity, kTanh, kSigmoid, kSoftplus };

std::string_view to_string(Activation a);
std::optional<Activation> parse_activation(std::string_view name);

template <class Scalar>
Scalar activate(Activation a, Scalar z) {
  using std::exp;
  using std::log1p;
  using std::tanh;
  switch (a) {
    case Activation::kIdentity: return z;
    case Activation::kTanh: return tanh(z);
    case Activation::kSigmoid: return Scalar(1) / (Scalar(1) + exp(-z));
    case Activation::kSoftplus:
      // log(1 + e^z) without overflow for large z
      return z > Scalar(0) ? z + log1p(exp(-z)) : log1p(exp(z));
  }
  return z;
}

template <class Scalar>
Scalar activate_derivative(Activation a, Scalar z) {
  using std::exp;
  using std::tanh;
  switch (a) {
    case Activation::kIdentity: return Scalar(1);
    case Activation::kTanh: {
      const Scalar t = tanh(z);
      return Scalar(1) - t * t;
    }
    case Activation::kSigmoid:
    case Activation::kSoftplus: {
      // softplus' is the sigmoid
      const Scalar s = Scalar(1) / (Scalar(1) + exp(-z));
      return a == Activation::kSigmoid ? s * (Scalar(1) - s) : s;
    }
  }
  return Scalar(1);
}

template <class Scalar>
struct TailLayer {
  Matrix<Scalar> weight;
  Vector<Scalar> bias;
  Activation activation = Activation::kIdentity;
};

template <class Scalar>
struct MlpNetwork {
  Matrix<Scalar> head_weight;  // W, d x n
  Vector<Scalar> head_bias;    // b, d
  std::vector<TailLayer<Scalar>> tail;

  Eigen::Index input_dim() const { return head_weight.cols(); }
  Eigen::Index head_dim() const { return head_weight.rows(); }
  Eigen::Index output_dim() const { return tail.empty() ? head_dim() : tail.back().weight.rows(); }

  /// Checks that layer dimensions chain n -> d -> ... -> m and all
  /// parameters are finite. Throws DimensionMismatch / InvalidInput.
  void validate() const {
    require_dims(head_bias.size() == head_weight.rows(), "head bias does not match head weight rows");
    require_finite(head_weight, "head_weight");
    require_finite(head_bias, "head_bias");
    Eigen::Index width = head_weight.rows();
    for (std::size_t i = 0; i < tail.size(); ++i) {
      const auto& layer = tail[i];
      require_dims(layer.weight.cols() == width,
                   "tail layer " + std::to_string(i) + " input width does not chain");
      require_dims(layer.bias.size() == layer.weight.rows(),
                   "tail layer " + std::to_string(i) + " bias does not match weight rows");
      require_finite(layer.weight, "tail weight");
      require_finite(layer.bias, "tail bias");
      width = layer.weight.rows();
    }
  }
};

using MlpNetworkd = MlpNetwork<double>;
using TailLayerd = TailLayer<double>;

template <class Scalar>
Vector<Scalar> forward(const MlpNetwork<Scalar>& net, const Vector<Scalar>& x) {
  require_dims(x.size() == net.input_dim(), "forward: input dimension mismatch");
  Vector<Scalar> z = net.head_weight * x + net.head_bias;
  for (const auto& layer : net.tail) {
    Vector<Scalar> pre = layer.weight * z + layer.bias;
    z = pre.unaryExpr([&](Scalar v) { return activate(layer.activation, v); });
  }
  return z;
}

/// Gradient of output component `out_index` with respect to the input,
/// by reverse-mode accumulation through the tail and the head.
template <class Scalar>
Vector<Scalar> gradient(const MlpNetwork<Scalar>& net, const Vector<Scalar>& x, Eigen::Index out_index) {
  require_dims(x.size() == net.input_dim(), "gradient: input dimension mismatch");
  if (out_index < 0 || out_index >= net.output_dim())
    throw InvalidInput("gradient: output index " + std::to_string(out_index) + " out of range");

  std::vector<Vector<Scalar>> pre;
  pre.reserve(net.tail.size());
  Vector<Scalar> z = net.head_weight * x + net.head_bias;
  for (const auto& layer : net.tail) {
    pre.push_back(layer.weight * z + layer.bias);
    z = pre.back().unaryExpr([&](Scalar v) { return activate(layer.activation, v); });
  }

  Vector<Scalar> delta = Vector<Scalar>::Unit(net.output_dim(), out_index);
  for (std::size_t i = net.tail.size(); i-- > 0;) {
    const auto& layer = net.tail[i];
    delta = delta.cwiseProduct(pre[i].unaryExpr([&](Scalar v) { return activate_derivative(layer.activation, v); }));
    delta = layer.weight.transpose() * delta;
  }
  return net.head_weight.transpose() * delta;
}

/// g . F with (g . F)(x) = F(g^t x): replaces W by W g^t.
template <class Scalar>
MlpNetwork<Scalar> act_linear(const Matrix<Scalar>& g, MlpNetwork<Scalar> net) {
  require_dims(g.rows() == net.input_dim() && g.cols() == net.input_dim(), "act_linear: g must be n x n");
  net.head_weight = (net.head_weight * g.transpose()).eval();
  return net;
}

/// u . F with (u . F)(x) = F(x - u), folded into the bias: b -> b - W u.
template <class Scalar>
MlpNetwork<Scalar> act_translation(const Vector<Scalar>& u, MlpNetwork<Scalar> net) {
  require_dims(u.size() == net.input_dim(), "act_translation: u must have input dimension");
  net.head_bias = (net.head_bias - net.head_weight * u).eval();
  return net;
}

}  // namespace algadv

#pragma once

#include <stdexcept>
#include <string>
#include <variant>

namespace algadv {

/// Thrown when an argument violates a documented precondition
/// (non-finite entries, non-unit direction, non-orthonormal basis, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// The input is a degenerate point for the requested construction (e.g. x = 0
/// for the rotation attack, where the step bound divides by |x|).
class DegenerateInput : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Typed signal for a trivial symmetry group. Not an exception: callers are
/// expected to branch on it and report it.
struct EmptyAlgebra {
  std::string reason;
};

template <class T>
using OrEmpty = std::variant<T, EmptyAlgebra>;

template <class T>
bool is_empty(const OrEmpty<T>& r) {
  return std::holds_alternative<EmptyAlgebra>(r);
}

/// Unwraps a value, throwing InvalidInput with the EmptyAlgebra reason otherwise.
template <class T>
const T& value_or_throw(const OrEmpty<T>& r) {
  if (auto* e = std::get_if<EmptyAlgebra>(&r)) throw InvalidInput(e->reason);
  return std::get<T>(r);
}

template <class T>
T&& value_or_throw(OrEmpty<T>&& r) {
  if (auto* e = std::get_if<EmptyAlgebra>(&r)) throw InvalidInput(e->reason);
  return std::get<T>(std::move(r));
}

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace algadv

#pragma once

#include <stdexcept>
#include <string>

namespace adobo {

/// Shapes or lengths of the inputs do not agree.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine could not produce a finite or converged answer.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A rollout left the finite range.
class DivergenceError : public NumericalError {
 public:
  explicit DivergenceError(const std::string& what) : NumericalError(what) {}
};

}  // namespace adobo

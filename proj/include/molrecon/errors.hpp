#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace molrecon {

/// Argument outside the mathematical or physical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Quadrature or solver failed to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The objective has more than one local minimum inside the search bracket.
class AmbiguityError : public std::runtime_error {
 public:
  AmbiguityError(const std::string& what, std::vector<double> candidates)
      : std::runtime_error(what), candidates_(std::move(candidates)) {}

  const std::vector<double>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<double> candidates_;
};

/// The objective is flat over the bracket, so no minimum can be located.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) throw DomainError(message);
}

}  // namespace detail

}  // namespace molrecon

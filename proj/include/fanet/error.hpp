#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fanet {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or violated preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Evaluation outside a function's domain (zero distance, barrier boundary).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Some UAVs cannot reach the ground station over admissible links.
class DisconnectedError : public Error {
 public:
  explicit DisconnectedError(std::vector<std::size_t> stranded_ids)
      : Error(describe(stranded_ids)), stranded_(std::move(stranded_ids)) {}

  // Node ids (1-based) of the unreachable UAVs.
  const std::vector<std::size_t>& stranded() const noexcept { return stranded_; }

 private:
  static std::string describe(const std::vector<std::size_t>& ids) {
    std::ostringstream os;
    os << "topology is disconnected from the ground station; stranded UAV ids:";
    for (auto id : ids) os << ' ' << id;
    return os.str();
  }

  std::vector<std::size_t> stranded_;
};

// Scenario sampling ran out of retries.
class PlacementError : public Error {
 public:
  using Error::Error;
};

// The equality constraint admits no strictly interior point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Newton iteration limit exceeded.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_decrement)
      : Error(what), last_decrement_(last_decrement) {}

  double last_decrement() const noexcept { return last_decrement_; }

 private:
  double last_decrement_;
};

}  // namespace fanet

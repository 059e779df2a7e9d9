#pragma once

#include <stdexcept>
#include <string>

namespace astg {

// Bad hyperparameters, scenario specs, or config files.
class InvalidConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Incompatible tensor shapes. The message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An API called out of contract (stepping a finished episode, backward on a
// non-scalar, empty history, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint or record file that cannot be read or does not match the
// configured architecture.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metric requested on a record set where it is undefined.
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace astg

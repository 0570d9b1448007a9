#pragma once

#include <stdexcept>
#include <string>

namespace trajprune {

// Invalid input data: non-finite coordinates, empty trajectories, duplicate
// or unknown ids, malformed records.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters: ratios outside (0, 1), sizes inconsistent with the
// dataset, bad flag combinations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system failures. The message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trajprune

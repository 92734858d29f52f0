#pragma once

#include <stdexcept>
#include <string>

namespace confplan {

// All library failures surface as this type; the message names the
// violated condition (e.g. "infeasible action").
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration / schema problems; the CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace confplan

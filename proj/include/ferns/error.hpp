#pragma once

#include <stdexcept>
#include <string>

namespace ferns {

/// Thrown for all data, configuration and model-format errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ferns

#pragma once

#include <stdexcept>
#include <string>

namespace cet {

// Malformed external input: files, CSV rows, configs, CLI-supplied values.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A computation left its supported numerical range (non-convergence,
// degenerate geometry, exhausted rejection sampling).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cet

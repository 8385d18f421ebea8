#pragma once

#include <stdexcept>
#include <string>

namespace rangelab {

/// Bad arguments, malformed configs, incompatible merges.  CLI exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Failures while running (step cap exceeded, solver breakdown).  Exit code 3.
struct SimulationError : std::runtime_error {
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rangelab

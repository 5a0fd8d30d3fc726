#pragma once

#include <stdexcept>
#include <string>

namespace cnotsim {

// Malformed or degenerate input data (bad CSV rows, empty count groups,
// scans with no fringe). Maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solver hit its iteration cap. Maps to CLI exit code 4.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cnotsim

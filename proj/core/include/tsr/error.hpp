#pragma once

#include <stdexcept>
#include <string>

namespace tsr {

/// Malformed argument or file content (exit code 1 at the CLI boundary).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tensor or feature-map extents that violate a module's shape contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Corner grid built from separators is not monotone.
class GridInconsistency : public std::runtime_error {
 public:
  GridInconsistency(int row, int col, const std::string& what)
      : std::runtime_error(what), row_(row), col_(col) {}

  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }

 private:
  int row_;
  int col_;
};

/// Warp moved a separator out of the image; the generator redraws the warp.
class WarpRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss during optimization.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tsr

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcp {

// Bad arguments: dimension mismatches, out-of-range indices, malformed files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cholesky hit a non-positive pivot.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : std::runtime_error("matrix is not positive definite (pivot " +
                           std::to_string(pivot) + ")"),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

// A Schur complement fell at or below the clamp floor during an incremental
// update. The caller is expected to rebuild the cache from scratch.
class NumericalDegeneracy : public std::runtime_error {
 public:
  explicit NumericalDegeneracy(double schur)
      : std::runtime_error("Schur complement " + std::to_string(schur) +
                           " below degeneracy floor"),
        schur_(schur) {}

  double schur_complement() const noexcept { return schur_; }

 private:
  double schur_;
};

}  // namespace dcp

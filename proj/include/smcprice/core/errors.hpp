#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smcprice {

/// Every particle carries zero weight; the run cannot continue.
class DegenerateCloudError : public std::runtime_error {
 public:
  explicit DegenerateCloudError(std::size_t step)
      : std::runtime_error("degenerate particle cloud at step " + std::to_string(step)),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// An argument lies outside the support of a density or formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace smcprice

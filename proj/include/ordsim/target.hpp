#pragma once

#include <cstddef>

namespace ordsim {

// Differentiable unnormalized log density, the interface the sampler drives.
// Implementations may keep internal scratch, so one instance must not be
// shared between concurrently running chains.
class GradTarget {
 public:
  virtual ~GradTarget() = default;

  virtual std::size_t dim() const = 0;

  // Writes the gradient into grad (dim() entries) and returns the log
  // density.  A return of -inf means the state is invalid; the gradient is
  // zeroed in that case.
  virtual double logp_grad(const double* x, double* grad) = 0;
};

}  // namespace ordsim

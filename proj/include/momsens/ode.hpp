// Explicit adaptive Runge-Kutta integration on a prescribed output grid.
#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace momsens {

using RhsFunction = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct IntegratorOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  std::size_t max_steps = 5'000'000;
};

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

/// States on an output grid, stored row-major (one row per time).
struct Trajectory {
  std::vector<double> times;
  std::size_t dim = 0;
  std::vector<double> values;
  StepStats stats;
  // Set by the moment layer when a diagonal covariance entry goes negative.
  bool negative_variance = false;
  double first_negative_variance_time = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return times.size(); }
  std::span<const double> state(std::size_t i) const { return {values.data() + i * dim, dim}; }
  double at(std::size_t i, std::size_t component) const { return values[i * dim + component]; }
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(double time, const std::string& message);
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Dormand-Prince 5(4) with step-size control on the mixed error norm
///     sqrt(mean((err_i / (abs_tol + rel_tol * max(|y_i|, |y_new_i|)))^2)) <= 1.
/// Steps are shortened to land on every grid time exactly, so no interpolation
/// enters the reported states. The grid must start at 0 and be strictly
/// increasing. Throws IntegrationError on step-size underflow or a non-finite
/// derivative, and std::invalid_argument on bad inputs.
Trajectory integrate(const RhsFunction& rhs, std::span<const double> initial,
                     std::span<const double> grid, const IntegratorOptions& options = {});

/// `points` equally spaced times on [0, t_end].
std::vector<double> uniform_grid(double t_end, std::size_t points);

}  // namespace momsens

// One-at-a-time perturbations and forward-difference sensitivity functions.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "momsens/model.hpp"
#include "momsens/moments.hpp"
#include "momsens/ode.hpp"

namespace momsens {

/// An integration failure annotated with the parameter being varied.
class SensitivityError : public std::runtime_error {
 public:
  SensitivityError(std::string parameter, const std::string& message);
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

struct SweepResult {
  double factor = 0.0;
  Trajectory nominal;
  std::vector<ParameterPoint> points;  // perturbed point per parameter
  std::vector<Trajectory> perturbed;   // one per parameter
};

/// Nominal trajectory plus one trajectory per parameter with
/// theta_i <- theta_i * (1 + factor), others fixed. `threads` <= 0 uses the
/// OpenMP default; results do not depend on it.
SweepResult perturbation_sweep(const MomentSystem& system, const ParameterPoint& point, double factor,
                               std::span<const double> grid, const IntegratorOptions& options = {},
                               int threads = 0);

struct FdOptions {
  double h_rel = 1e-8;
  double h_abs = 1e-12;  // used when a nominal value is exactly zero
  IntegratorOptions integrator{1e-10, 1e-12};
  int threads = 0;
};

/// Step used for parameter value `theta`.
double fd_step(double theta, double h_rel, double h_abs);

/// Table indexed [time][parameter][output].
struct SensitivityTable {
  std::vector<double> times;
  std::vector<std::string> parameters;
  std::vector<std::string> outputs;
  std::vector<double> values;

  double at(std::size_t t, std::size_t p, std::size_t o) const {
    return values[(t * parameters.size() + p) * outputs.size() + o];
  }
  double& at(std::size_t t, std::size_t p, std::size_t o) {
    return values[(t * parameters.size() + p) * outputs.size() + o];
  }
};

/// S_i(t) = [y(theta + h e_i, t) - y(theta, t)] / h with h = h_rel * theta_i,
/// for every output of the moment system.
SensitivityTable fd_sensitivity(const MomentSystem& system, const ParameterPoint& point,
                                std::span<const double> grid, const FdOptions& options = {});

struct LocalSensitivityReport {
  SensitivityTable raw;
  SensitivityTable normalized;
  std::vector<double> omega_theta;
  std::vector<double> omega_y;
};

/// normalized = raw * omega_theta[p] / omega_y[o]. Throws
/// std::invalid_argument on a non-positive or mis-sized scale.
LocalSensitivityReport normalize(const SensitivityTable& raw, std::span<const double> omega_theta,
                                 std::span<const double> omega_y);

/// Nominal parameter values as parameter scales and unit output scales.
LocalSensitivityReport normalize_default(const SensitivityTable& raw, const ParameterPoint& point);

}  // namespace momsens

#include "momsens/local_sens.hpp"

#include <cmath>
#include <exception>

#include <omp.h>

namespace momsens {

namespace {

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

// Runs body(i) for i in [0, count) across threads and rethrows the first
// failure by index, so the reported error does not depend on scheduling.
template <typename Body>
void parallel_for_each(std::size_t count, int threads, Body body) {
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Trajectory run_named(const MomentSystem& system, const ParameterPoint& point, std::span<const double> grid,
                     const IntegratorOptions& options, const std::string& label) {
  try {
    return simulate_moments(system, point, grid, options);
  } catch (const IntegrationError& e) {
    throw SensitivityError(label, e.what());
  }
}

}  // namespace

SensitivityError::SensitivityError(std::string parameter, const std::string& message)
    : std::runtime_error("integration failed while varying '" + parameter + "': " + message),
      parameter_(std::move(parameter)) {}

SweepResult perturbation_sweep(const MomentSystem& system, const ParameterPoint& point, double factor,
                               std::span<const double> grid, const IntegratorOptions& options, int threads) {
  if (!(factor > -1.0) || !std::isfinite(factor)) throw std::invalid_argument("perturbation factor must exceed -1");
  const auto params = system.network().parameters();

  SweepResult out;
  out.factor = factor;
  for (std::size_t i = 0; i < params.size(); ++i) out.points.push_back(point.with(i, point[i] * (1.0 + factor)));
  out.perturbed.resize(params.size());

  // Slot 0 is the nominal run.
  parallel_for_each(params.size() + 1, threads, [&](std::size_t job) {
    if (job == 0)
      out.nominal = run_named(system, point, grid, options, "nominal");
    else
      out.perturbed[job - 1] = run_named(system, out.points[job - 1], grid, options, params[job - 1].name);
  });
  return out;
}

double fd_step(double theta, double h_rel, double h_abs) { return theta == 0.0 ? h_abs : h_rel * theta; }

SensitivityTable fd_sensitivity(const MomentSystem& system, const ParameterPoint& point,
                                std::span<const double> grid, const FdOptions& options) {
  if (!(options.h_rel > 0.0) || !(options.h_abs > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const auto params = system.network().parameters();
  const auto outputs = system.outputs();

  std::vector<double> steps;
  std::vector<ParameterPoint> shifted;
  for (std::size_t i = 0; i < params.size(); ++i) {
    steps.push_back(fd_step(point[i], options.h_rel, options.h_abs));
    shifted.push_back(point.with(i, point[i] + steps.back()));
  }

  Trajectory nominal;
  std::vector<Trajectory> runs(params.size());
  parallel_for_each(params.size() + 1, options.threads, [&](std::size_t job) {
    if (job == 0)
      nominal = run_named(system, point, grid, options.integrator, "nominal");
    else
      runs[job - 1] = run_named(system, shifted[job - 1], grid, options.integrator, params[job - 1].name);
  });

  SensitivityTable table;
  table.times.assign(grid.begin(), grid.end());
  for (const auto& p : params) table.parameters.push_back(p.name);
  for (const auto& o : outputs) table.outputs.push_back(o.name);
  table.values.assign(grid.size() * params.size() * outputs.size(), 0.0);
  for (std::size_t t = 0; t < grid.size(); ++t)
    for (std::size_t p = 0; p < params.size(); ++p)
      for (std::size_t o = 0; o < outputs.size(); ++o) {
        const auto c = outputs[o].state_index;
        table.at(t, p, o) = (runs[p].at(t, c) - nominal.at(t, c)) / steps[p];
      }
  return table;
}

LocalSensitivityReport normalize(const SensitivityTable& raw, std::span<const double> omega_theta,
                                 std::span<const double> omega_y) {
  if (omega_theta.size() != raw.parameters.size() || omega_y.size() != raw.outputs.size())
    throw std::invalid_argument("scaling vector length mismatch");
  for (double w : omega_theta)
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("parameter scales must be positive");
  for (double w : omega_y)
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("output scales must be positive");

  LocalSensitivityReport report;
  report.raw = raw;
  report.normalized = raw;
  report.omega_theta.assign(omega_theta.begin(), omega_theta.end());
  report.omega_y.assign(omega_y.begin(), omega_y.end());
  for (std::size_t t = 0; t < raw.times.size(); ++t)
    for (std::size_t p = 0; p < raw.parameters.size(); ++p)
      for (std::size_t o = 0; o < raw.outputs.size(); ++o)
        report.normalized.at(t, p, o) = raw.at(t, p, o) * omega_theta[p] / omega_y[o];
  return report;
}

LocalSensitivityReport normalize_default(const SensitivityTable& raw, const ParameterPoint& point) {
  std::vector<double> omega_y(raw.outputs.size(), 1.0);
  return normalize(raw, point.values(), omega_y);
}

}  // namespace momsens

#include "momsens/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace momsens {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Difference between the 5th and embedded 4th order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double error_norm(std::span<const double> err, std::span<const double> y, std::span<const double> y_new,
                  const IntegratorOptions& o) {
  double sum = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double scale = o.abs_tol + o.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
    const double r = err[i] / scale;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

}  // namespace

IntegrationError::IntegrationError(double time, const std::string& message)
    : std::runtime_error(message + " at t=" + std::to_string(time)), time_(time) {}

std::vector<double> uniform_grid(double t_end, std::size_t points) {
  if (points < 2) throw std::invalid_argument("a time grid needs at least two points");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be positive");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = t_end * static_cast<double>(i) / static_cast<double>(points - 1);
  grid.back() = t_end;
  return grid;
}

Trajectory integrate(const RhsFunction& rhs, std::span<const double> initial, std::span<const double> grid,
                     const IntegratorOptions& options) {
  if (grid.empty() || grid.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
  if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0))
    throw std::invalid_argument("integration tolerances must be positive");
  if (initial.empty()) throw std::invalid_argument("empty initial state");

  const std::size_t n = initial.size();
  Trajectory traj;
  traj.times.assign(grid.begin(), grid.end());
  traj.dim = n;
  traj.values.reserve(grid.size() * n);
  traj.values.insert(traj.values.end(), initial.begin(), initial.end());

  std::vector<double> y(initial.begin(), initial.end());
  std::vector<double> y_new(n), err(n), tmp(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

  auto eval = [&](double t, std::span<const double> state, std::vector<double>& out) {
    rhs(t, state, out);
    ++traj.stats.rhs_evals;
    if (!all_finite(out)) throw IntegrationError(t, "non-finite right-hand side");
  };

  double t = 0.0;
  eval(t, y, k1);

  // Initial step from the usual two-derivative heuristic.
  double h;
  {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = options.abs_tol + options.rel_tol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / n);
    d1 = std::sqrt(d1 / n);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, grid.back());
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h0 * k1[i];
    eval(t + h0, tmp, k2);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = options.abs_tol + options.rel_tol * std::abs(y[i]);
      d2 += ((k2[i] - k1[i]) / sc) * ((k2[i] - k1[i]) / sc);
    }
    d2 = std::sqrt(d2 / n) / h0;
    const double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
    h = std::min(100.0 * h0, h1);
  }

  std::size_t steps = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double target = grid[g];
    while (t < target) {
      if (++steps > options.max_steps) throw IntegrationError(t, "maximum number of steps exceeded");
      bool last = false;
      double step = h;
      if (t + step >= target) {
        step = target - t;
        last = true;
      }
      const double min_step = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
      if (step < min_step && !last) throw IntegrationError(t, "step size underflow");

      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * a21 * k1[i];
      eval(t + c2 * step, tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (a31 * k1[i] + a32 * k2[i]);
      eval(t + c3 * step, tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      eval(t + c4 * step, tmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + step * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      eval(t + c5 * step, tmp, k5);
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + step * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      eval(t + step, tmp, k6);
      for (std::size_t i = 0; i < n; ++i)
        y_new[i] = y[i] + step * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      eval(t + step, y_new, k7);
      for (std::size_t i = 0; i < n; ++i)
        err[i] = step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

      const double norm = error_norm(err, y, y_new, options);
      if (!std::isfinite(norm)) throw IntegrationError(t, "non-finite error estimate");

      if (norm <= 1.0) {
        ++traj.stats.accepted;
        t = last ? target : t + step;
        y.swap(y_new);
        k1.swap(k7);  // first-same-as-last
        const double factor = norm == 0.0 ? kMaxFactor
                                          : std::clamp(kSafety * std::pow(norm, -0.2), kMinFactor, kMaxFactor);
        // A step clipped to the grid says little about the natural step size.
        if (!last || step * factor > h) h = step * factor;
      } else {
        ++traj.stats.rejected;
        h = step * std::max(kMinFactor, kSafety * std::pow(norm, -0.2));
        if (h < min_step) throw IntegrationError(t, "step size underflow");
      }
    }
    traj.values.insert(traj.values.end(), y.begin(), y.end());
  }
  return traj;
}

}  // namespace momsens

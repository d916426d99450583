#include "momsens/global_sens.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <omp.h>

namespace momsens {

ParameterBox::ParameterBox(std::vector<Bounds> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw std::invalid_argument("parameter box is empty");
  for (const auto& b : bounds_)
    if (!(b.lower < b.upper) || !std::isfinite(b.lower) || !std::isfinite(b.upper))
      throw std::invalid_argument("parameter box needs lower < upper in every dimension");
}

ParameterBox ParameterBox::from_network(const ReactionNetwork& network) {
  std::vector<Bounds> bounds;
  for (const auto& p : network.parameters()) {
    if (!p.bounds) throw std::invalid_argument("parameter '" + p.name + "' has no bounds for sampling");
    bounds.push_back(*p.bounds);
  }
  return ParameterBox(std::move(bounds));
}

PickFreezeDesign::PickFreezeDesign(std::size_t n, std::size_t k, std::uint64_t seed, std::vector<double> a,
                                   std::vector<double> b)
    : n_(n), k_(k), seed_(seed), a_(std::move(a)), b_(std::move(b)) {
  if (a_.size() != n * k || b_.size() != n * k) throw std::invalid_argument("design matrix size mismatch");
}

double PickFreezeDesign::value(std::size_t matrix, std::size_t sample, std::size_t param) const {
  const std::size_t at = sample * k_ + param;
  if (matrix == kA) return a_[at];
  if (matrix == kB) return b_[at];
  return (matrix - 2 == param) ? b_[at] : a_[at];
}

std::vector<double> PickFreezeDesign::row(std::size_t matrix, std::size_t sample) const {
  std::vector<double> r(k_);
  for (std::size_t p = 0; p < k_; ++p) r[p] = value(matrix, sample, p);
  return r;
}

PickFreezeDesign sample_design(const ParameterBox& box, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("a pick-freeze design needs at least two samples");
  const std::size_t k = box.size();
  std::vector<double> a(n * k), b(n * k);
  auto uniform = [](std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;  // [0, 1)
  };
  for (std::size_t r = 0; r < n; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(std::uint64_t{r} >> 32)};
    std::mt19937_64 engine(seq);
    for (std::size_t p = 0; p < k; ++p) a[r * k + p] = box[p].lower + uniform(engine) * (box[p].upper - box[p].lower);
    for (std::size_t p = 0; p < k; ++p) b[r * k + p] = box[p].lower + uniform(engine) * (box[p].upper - box[p].lower);
  }
  return PickFreezeDesign(n, k, seed, std::move(a), std::move(b));
}

DesignOutputs::DesignOutputs(std::size_t n, std::size_t k, std::uint64_t seed, std::vector<double> times,
                             std::vector<std::string> parameters, std::vector<std::string> outputs)
    : n_(n),
      k_(k),
      seed_(seed),
      times_(std::move(times)),
      parameters_(std::move(parameters)),
      outputs_(std::move(outputs)) {
  if (parameters_.size() != k) throw std::invalid_argument("parameter name count mismatch");
  y_.assign((k + 2) * times_.size() * outputs_.size() * n, 0.0);
  failed_.assign((k + 2) * n, 0);
}

std::span<const double> DesignOutputs::series(std::size_t matrix, std::size_t time, std::size_t output) const {
  return {y_.data() + ((matrix * times_.size() + time) * outputs_.size() + output) * n_, n_};
}

double& DesignOutputs::at(std::size_t matrix, std::size_t time, std::size_t output, std::size_t sample) {
  return y_[((matrix * times_.size() + time) * outputs_.size() + output) * n_ + sample];
}

std::size_t DesignOutputs::failed_count() const {
  return static_cast<std::size_t>(std::count(failed_.begin(), failed_.end(), std::uint8_t{1}));
}

namespace {

struct RowFailure {
  std::size_t matrix = 0, sample = 0;
  std::string message;
};

// Evaluates rows [0, jobs) where job = matrix * n + sample. `parallel`
// selects the OpenMP kernel; each job writes only its own slots.
DesignOutputs run_design(const PickFreezeDesign& design, const DesignModel& model, std::vector<double> times,
                         std::vector<std::string> parameters, std::vector<std::string> outputs,
                         const EvaluationOptions& options, bool parallel) {
  const std::size_t n = design.samples();
  DesignOutputs y(n, design.parameters(), design.seed(), std::move(times), std::move(parameters),
                  std::move(outputs));
  const std::size_t n_times = y.times().size();
  const std::size_t n_out = y.output_names().size();
  const std::size_t jobs = design.matrices() * n;
  std::vector<std::string> errors(jobs);
  std::vector<std::uint8_t> failed(jobs, 0);

  auto job_body = [&](std::size_t job, std::vector<double>& buffer) {
    const std::size_t matrix = job / n;
    const std::size_t sample = job % n;
    const auto theta = design.row(matrix, sample);
    bool ok = false;
    try {
      ok = model(theta, buffer);
      if (!ok) errors[job] = "model evaluation failed";
    } catch (const std::exception& e) {
      errors[job] = e.what();
    }
    if (!ok) {
      failed[job] = 1;
      return;
    }
    for (std::size_t t = 0; t < n_times; ++t)
      for (std::size_t o = 0; o < n_out; ++o) y.at(matrix, t, o, sample) = buffer[t * n_out + o];
  };

  if (parallel) {
    const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
    const auto njobs = static_cast<std::ptrdiff_t>(jobs);
#pragma omp parallel num_threads(threads)
    {
      std::vector<double> buffer(n_times * n_out);
#pragma omp for schedule(dynamic, 16)
      for (std::ptrdiff_t job = 0; job < njobs; ++job) job_body(static_cast<std::size_t>(job), buffer);
    }
  } else {
    std::vector<double> buffer(n_times * n_out);
    for (std::size_t job = 0; job < jobs; ++job) job_body(job, buffer);
  }

  std::vector<RowFailure> failures;
  for (std::size_t job = 0; job < jobs; ++job)
    if (failed[job]) {
      y.mark_failed(job / n, job % n);
      failures.push_back({job / n, job % n, errors[job]});
    }
  if (static_cast<double>(failures.size()) > options.max_failure_fraction * static_cast<double>(jobs)) {
    std::ostringstream msg;
    msg << failures.size() << " of " << jobs << " design evaluations failed";
    for (std::size_t i = 0; i < std::min<std::size_t>(failures.size(), 5); ++i) {
      msg << "; matrix " << failures[i].matrix << " row " << failures[i].sample << ": (";
      const auto row = design.row(failures[i].matrix, failures[i].sample);
      for (std::size_t p = 0; p < row.size(); ++p) msg << (p ? ", " : "") << row[p];
      msg << ") " << failures[i].message;
    }
    throw std::runtime_error(msg.str());
  }
  return y;
}

DesignModel moment_model(const MomentSystem& system, std::span<const double> grid, const IntegratorOptions& options) {
  const auto outputs = system.outputs();
  return [&system, grid, options, outputs](std::span<const double> theta, std::span<double> out) {
    const auto traj =
        simulate_moments(system, ParameterPoint(std::vector<double>(theta.begin(), theta.end())), grid, options);
    for (std::size_t t = 0; t < traj.size(); ++t)
      for (std::size_t o = 0; o < outputs.size(); ++o) out[t * outputs.size() + o] = traj.at(t, outputs[o].state_index);
    return true;
  };
}

std::vector<std::string> parameter_names(const MomentSystem& system) {
  std::vector<std::string> names;
  for (const auto& p : system.network().parameters()) names.push_back(p.name);
  return names;
}

std::vector<std::string> output_names(const MomentSystem& system) {
  std::vector<std::string> names;
  for (const auto& o : system.outputs()) names.push_back(o.name);
  return names;
}

}  // namespace

DesignOutputs evaluate_design(const PickFreezeDesign& design, const MomentSystem& system,
                              std::span<const double> grid, const EvaluationOptions& options) {
  if (design.parameters() != system.network().parameter_count())
    throw std::invalid_argument("design dimension does not match the network parameters");
  return run_design(design, moment_model(system, grid, options.integrator),
                    std::vector<double>(grid.begin(), grid.end()), parameter_names(system), output_names(system),
                    options, true);
}

DesignOutputs evaluate_design_serial(const PickFreezeDesign& design, const MomentSystem& system,
                                     std::span<const double> grid, const EvaluationOptions& options) {
  if (design.parameters() != system.network().parameter_count())
    throw std::invalid_argument("design dimension does not match the network parameters");
  return run_design(design, moment_model(system, grid, options.integrator),
                    std::vector<double>(grid.begin(), grid.end()), parameter_names(system), output_names(system),
                    options, false);
}

DesignOutputs evaluate_design(const PickFreezeDesign& design, const DesignModel& model, std::vector<double> times,
                              std::vector<std::string> parameters, std::vector<std::string> outputs,
                              const EvaluationOptions& options) {
  return run_design(design, model, std::move(times), std::move(parameters), std::move(outputs), options, true);
}

std::string to_string(Estimator e) { return e == Estimator::martinez ? "martinez" : "jansen"; }

Estimator parse_estimator(const std::string& name) {
  if (name == "martinez") return Estimator::martinez;
  if (name == "jansen") return Estimator::jansen;
  throw std::invalid_argument("unknown estimator '" + name + "' (expected martinez or jansen)");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// A sum of squared deviations is treated as zero when the spread is below
// round-off relative to the magnitude of the data.
bool degenerate(double sum_sq, std::size_t count, double max_abs) {
  const double var = sum_sq / static_cast<double>(count);
  const double floor = 1e-13 * max_abs;
  return !(var > floor * floor) || var == 0.0;
}

struct Gathered {
  std::vector<double> a, b, c;  // y_A, y_B, y_AB(i) over valid samples
  double max_abs = 0.0;
};

SobolReport estimate(const DesignOutputs& y, Estimator estimator) {
  const std::size_t n = y.samples();
  const std::size_t k = y.parameters();
  const std::size_t n_times = y.times().size();
  const std::size_t n_out = y.output_names().size();

  SobolReport r;
  r.estimator = estimator;
  r.n = n;
  r.seed = y.seed();
  r.times = y.times();
  r.parameters = y.parameter_names();
  r.outputs = y.output_names();
  r.first.assign(n_times * n_out * k, kNaN);
  r.total.assign(n_times * n_out * k, kNaN);
  r.excluded.assign(k, 0);

  std::vector<std::vector<std::size_t>> valid(k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t s = 0; s < n; ++s)
      if (!y.failed(PickFreezeDesign::kA, s) && !y.failed(PickFreezeDesign::kB, s) &&
          !y.failed(PickFreezeDesign::ab(p), s))
        valid[p].push_back(s);
    r.excluded[p] = n - valid[p].size();
  }

  Gathered g;
  for (std::size_t t = 0; t < n_times; ++t)
    for (std::size_t o = 0; o < n_out; ++o) {
      const auto ya = y.series(PickFreezeDesign::kA, t, o);
      const auto yb = y.series(PickFreezeDesign::kB, t, o);
      for (std::size_t p = 0; p < k; ++p) {
        const auto& idx = valid[p];
        const std::size_t m = idx.size();
        if (m < 2) continue;
        const auto yc = y.series(PickFreezeDesign::ab(p), t, o);
        g.a.resize(m);
        g.b.resize(m);
        g.c.resize(m);
        g.max_abs = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          g.a[j] = ya[idx[j]];
          g.b[j] = yb[idx[j]];
          g.c[j] = yc[idx[j]];
          g.max_abs = std::max({g.max_abs, std::abs(g.a[j]), std::abs(g.b[j]), std::abs(g.c[j])});
        }
        const double md = static_cast<double>(m);

        if (estimator == Estimator::martinez) {
          double mean_a = 0, mean_b = 0, mean_c = 0;
          for (std::size_t j = 0; j < m; ++j) {
            mean_a += g.a[j];
            mean_b += g.b[j];
            mean_c += g.c[j];
          }
          mean_a /= md;
          mean_b /= md;
          mean_c /= md;
          double saa = 0, sbb = 0, scc = 0, sac = 0, sbc = 0;
          for (std::size_t j = 0; j < m; ++j) {
            const double da = g.a[j] - mean_a, db = g.b[j] - mean_b, dc = g.c[j] - mean_c;
            saa += da * da;
            sbb += db * db;
            scc += dc * dc;
            sac += da * dc;
            sbc += db * dc;
          }
          const bool dc = degenerate(scc, m, g.max_abs);
          if (!dc && !degenerate(sbb, m, g.max_abs)) r.first[r.index(t, o, p)] = sbc / std::sqrt(sbb * scc);
          if (!dc && !degenerate(saa, m, g.max_abs)) r.total[r.index(t, o, p)] = 1.0 - sac / std::sqrt(saa * scc);
        } else {
          double mean = 0;
          for (std::size_t j = 0; j < m; ++j) mean += g.a[j] + g.b[j];
          mean /= 2.0 * md;
          double ss = 0, d_total = 0, d_first = 0;
          for (std::size_t j = 0; j < m; ++j) {
            ss += (g.a[j] - mean) * (g.a[j] - mean) + (g.b[j] - mean) * (g.b[j] - mean);
            d_total += (g.a[j] - g.c[j]) * (g.a[j] - g.c[j]);
            d_first += (g.b[j] - g.c[j]) * (g.b[j] - g.c[j]);
          }
          if (degenerate(ss, 2 * m, g.max_abs)) continue;
          const double var = ss / (2.0 * md);
          r.total[r.index(t, o, p)] = d_total / (2.0 * md) / var;
          r.first[r.index(t, o, p)] = 1.0 - d_first / (2.0 * md) / var;
        }
      }
    }
  return r;
}

}  // namespace

SobolReport martinez_indices(const DesignOutputs& y) { return estimate(y, Estimator::martinez); }
SobolReport jansen_indices(const DesignOutputs& y) { return estimate(y, Estimator::jansen); }
SobolReport sobol_indices(const DesignOutputs& y, Estimator estimator) { return estimate(y, estimator); }

}  // namespace momsens

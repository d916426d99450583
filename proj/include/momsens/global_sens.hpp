// Variance-based global sensitivity with a pick-and-freeze design.
//
// Two independent n x k sample matrices A and B are drawn uniformly from the
// parameter box; AB(i) is A with column i taken from B. Every row of every
// matrix is one model evaluation, n (k + 2) in total. First-order and total
// Sobol' indices are then estimated per time point and output with either
//
//   Martinez:  S_i = corr(y_B, y_AB(i)),       S_Ti = 1 - corr(y_A, y_AB(i))
//   Jansen:    S_i = 1 - mean((y_B - y_AB(i))^2) / (2 V),
//              S_Ti = mean((y_A - y_AB(i))^2) / (2 V)
//
// where V is the variance of the pooled y_A, y_B samples. Indices with zero
// output variance are undefined and reported as NaN.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "momsens/model.hpp"
#include "momsens/moments.hpp"
#include "momsens/ode.hpp"

namespace momsens {

/// Independent uniform marginals.
class ParameterBox {
 public:
  /// Throws std::invalid_argument unless lower < upper for every entry.
  explicit ParameterBox(std::vector<Bounds> bounds);

  /// Bounds declared in the model file; throws when any parameter has none.
  static ParameterBox from_network(const ReactionNetwork& network);

  std::size_t size() const { return bounds_.size(); }
  const Bounds& operator[](std::size_t i) const { return bounds_[i]; }

 private:
  std::vector<Bounds> bounds_;
};

class PickFreezeDesign {
 public:
  PickFreezeDesign(std::size_t n, std::size_t k, std::uint64_t seed, std::vector<double> a, std::vector<double> b);

  std::size_t samples() const { return n_; }
  std::size_t parameters() const { return k_; }
  std::uint64_t seed() const { return seed_; }

  /// Matrices are numbered A = 0, B = 1, AB(i) = 2 + i.
  std::size_t matrices() const { return k_ + 2; }
  static constexpr std::size_t kA = 0;
  static constexpr std::size_t kB = 1;
  static constexpr std::size_t ab(std::size_t i) { return 2 + i; }

  double value(std::size_t matrix, std::size_t sample, std::size_t param) const;
  std::vector<double> row(std::size_t matrix, std::size_t sample) const;

 private:
  std::size_t n_, k_;
  std::uint64_t seed_;
  std::vector<double> a_, b_;  // n x k row-major
};

/// Row r of A and B is drawn from a Mersenne Twister seeded by (seed, r), so
/// the design does not depend on how rows are later distributed to workers.
/// Throws std::invalid_argument for n < 2.
PickFreezeDesign sample_design(const ParameterBox& box, std::size_t n, std::uint64_t seed);

/// Model outputs for every design row, indexed [matrix][time][output][sample].
class DesignOutputs {
 public:
  DesignOutputs(std::size_t n, std::size_t k, std::uint64_t seed, std::vector<double> times,
                std::vector<std::string> parameters, std::vector<std::string> outputs);

  std::size_t samples() const { return n_; }
  std::size_t parameters() const { return k_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<std::string>& parameter_names() const { return parameters_; }
  const std::vector<std::string>& output_names() const { return outputs_; }

  std::span<const double> series(std::size_t matrix, std::size_t time, std::size_t output) const;
  double& at(std::size_t matrix, std::size_t time, std::size_t output, std::size_t sample);

  bool failed(std::size_t matrix, std::size_t sample) const { return failed_[matrix * n_ + sample] != 0; }
  void mark_failed(std::size_t matrix, std::size_t sample) { failed_[matrix * n_ + sample] = 1; }
  std::size_t failed_count() const;

  const std::vector<double>& data() const { return y_; }

 private:
  std::size_t n_, k_;
  std::uint64_t seed_;
  std::vector<double> times_;
  std::vector<std::string> parameters_, outputs_;
  std::vector<double> y_;
  std::vector<std::uint8_t> failed_;
};

struct EvaluationOptions {
  IntegratorOptions integrator;
  int threads = 0;                      // <= 0: OpenMP default
  double max_failure_fraction = 0.01;   // above this evaluation aborts
};

/// Writes outputs for one parameter row into `out` (times x outputs,
/// row-major). Returns false when the evaluation failed.
using DesignModel = std::function<bool(std::span<const double> theta, std::span<double> out)>;

/// Evaluates every design row with the moment system, in parallel over rows.
DesignOutputs evaluate_design(const PickFreezeDesign& design, const MomentSystem& system,
                              std::span<const double> grid, const EvaluationOptions& options = {});

/// Single-threaded reference; produces bit-identical results.
DesignOutputs evaluate_design_serial(const PickFreezeDesign& design, const MomentSystem& system,
                                     std::span<const double> grid, const EvaluationOptions& options = {});

/// Same as evaluate_design for an arbitrary model.
DesignOutputs evaluate_design(const PickFreezeDesign& design, const DesignModel& model, std::vector<double> times,
                              std::vector<std::string> parameters, std::vector<std::string> outputs,
                              const EvaluationOptions& options = {});

enum class Estimator { martinez, jansen };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

/// Indices indexed [time][output][parameter]; NaN marks an undefined index.
struct SobolReport {
  Estimator estimator = Estimator::martinez;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<std::string> parameters;
  std::vector<std::string> outputs;
  std::vector<double> first;
  std::vector<double> total;
  std::vector<std::size_t> excluded;  // samples dropped per parameter

  std::size_t index(std::size_t t, std::size_t o, std::size_t p) const {
    return (t * outputs.size() + o) * parameters.size() + p;
  }
  double first_at(std::size_t t, std::size_t o, std::size_t p) const { return first[index(t, o, p)]; }
  double total_at(std::size_t t, std::size_t o, std::size_t p) const { return total[index(t, o, p)]; }
  static bool missing(double v) { return std::isnan(v); }
};

SobolReport martinez_indices(const DesignOutputs& y);
SobolReport jansen_indices(const DesignOutputs& y);
SobolReport sobol_indices(const DesignOutputs& y, Estimator estimator);

}  // namespace momsens

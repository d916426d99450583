// Truncated chemical master equation used as ground truth for the closure.
//
// The reachable state space is enumerated inside a per-species box, the
// transition rate matrix A is assembled (column j holds the rates out of
// state j), and p(t) = exp(tA) p(0) is evaluated by uniformization.
// Transitions that would leave the box are dropped from the off-diagonal
// part but kept on the diagonal, so probability leaks out and the leak is
// reported as residual mass instead of being redistributed.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "momsens/model.hpp"
#include "momsens/moments.hpp"
#include "momsens/ode.hpp"

namespace momsens {

class StateSpace {
 public:
  StateSpace(std::size_t species, std::vector<std::int64_t> states, std::size_t truncated_transitions);

  std::size_t species() const { return species_; }
  std::size_t size() const { return species_ == 0 ? 0 : states_.size() / species_; }
  std::span<const std::int64_t> state(std::size_t j) const { return {states_.data() + j * species_, species_}; }
  std::optional<std::size_t> find(std::span<const std::int64_t> x) const;

  /// Number of (state, reaction) pairs whose target lies outside the box.
  std::size_t truncated_transitions() const { return truncated_; }

 private:
  std::size_t species_;
  std::vector<std::int64_t> states_;  // lexicographically sorted, row-major
  std::size_t truncated_;
};

inline constexpr std::size_t kDefaultStateCap = 2'000'000;

/// Breadth-first reachable set from the initial state within 0 <= x_i <= bound_i.
/// Throws std::invalid_argument when a bound is below the initial count and
/// std::length_error when more than `max_states` states are reachable.
StateSpace enumerate_states(const ReactionNetwork& network, std::span<const std::int64_t> bound,
                            std::size_t max_states = kDefaultStateCap);

/// Eight times the largest initial count, applied to every species.
std::vector<std::int64_t> default_bound(const ReactionNetwork& network);

/// Off-diagonal part in compressed rows; the diagonal is held separately.
struct Generator {
  std::size_t n = 0;
  std::vector<std::size_t> row_start;  // n + 1 entries
  std::vector<std::size_t> column;
  std::vector<double> rate;
  std::vector<double> diagonal;  // -(total exit rate) per state
  std::vector<double> outflow;   // exit rate into states outside the box

  /// Sum of column j, equal to -outflow[j] up to rounding.
  double column_sum(std::size_t j) const;
  double max_exit_rate() const;
};

Generator build_generator(const StateSpace& space, const ReactionNetwork& network, const ParameterPoint& point);

/// y = A x. The parallel kernel partitions rows across OpenMP threads; each
/// row is summed in the same order, so both kernels give identical results.
void multiply_serial(const Generator& gen, std::span<const double> x, std::span<double> y);
void multiply_parallel(const Generator& gen, std::span<const double> x, std::span<double> y);

struct EvolveOptions {
  double tail_tolerance = 1e-12;  // total Poisson truncation bound
  bool parallel = true;
};

struct EvolveResult {
  std::vector<double> probabilities;
  double residual_mass = 0.0;  // 1 - sum(p)
  double tail_bound = 0.0;     // guaranteed bound on the truncated series mass
  std::size_t terms = 0;       // matrix-vector products used
};

/// p(t) = exp(tA) p0. p0 must be non-negative with total mass <= 1.
/// Throws std::invalid_argument for t < 0 or an invalid p0.
EvolveResult evolve(std::span<const double> p0, const Generator& gen, double t, const EvolveOptions& options = {});

struct DistributionMoments {
  MomentState moments;
  double total_mass = 0.0;
  double residual_mass = 0.0;
  bool mass_warning = false;  // |1 - total mass| > 1e-6
};

/// Raw sums mu_i = sum_x x_i p(x), sigma_ij = sum_x (x_i - mu_i)(x_j - mu_j) p(x).
DistributionMoments moments_from_distribution(std::span<const double> p, const StateSpace& space);

struct OracleTrajectory {
  Trajectory moments;  // same flat layout as the moment system
  std::vector<double> residual_mass;
  std::size_t states = 0;
  std::size_t truncated_transitions = 0;
};

/// Exact moments on a time grid, starting from the point mass at the
/// network's initial state.
OracleTrajectory oracle_moments(const ReactionNetwork& network, const ParameterPoint& point,
                                std::span<const double> grid, std::span<const std::int64_t> bound,
                                const EvolveOptions& options = {});

}  // namespace momsens

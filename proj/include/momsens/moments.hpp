// Zero-closure moment equations for mass-action networks.
//
// For first moments mu and central second moments sigma the closed system is
//
//   dmu_i/dt     = sum_k nu_ki (a_k(mu) + 1/2 sum_lm d2a_k/dx_l dx_m sigma_lm)
//   dsigma_ij/dt = sum_k [ nu_ki sum_l da_k/dx_l sigma_jl
//                        + nu_kj sum_l da_k/dx_l sigma_il
//                        + nu_ki nu_kj (a_k(mu) + 1/2 sum_lm d2a_k/dx_l dx_m sigma_lm) ]
//
// with every third central moment set to zero. Since propensities have degree
// at most two the Taylor terms above are exact, and the right-hand side is a
// polynomial in (mu, sigma) that is linear in the rate constants. The builder
// expands it once into explicit terms.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "momsens/model.hpp"
#include "momsens/ode.hpp"

namespace momsens {

struct MomentState {
  std::vector<double> mu;     // length N
  std::vector<double> sigma;  // N x N row-major, symmetric

  std::size_t dim() const { return mu.size(); }
  double cov(std::size_t i, std::size_t j) const { return sigma[i * mu.size() + j]; }
  double& cov(std::size_t i, std::size_t j) { return sigma[i * mu.size() + j]; }
};

/// Flat state vector: mu_0..mu_{N-1} followed by the upper triangle of sigma
/// in row-major order (sigma_00, sigma_01, ..., sigma_11, ...).
class MomentLayout {
 public:
  explicit MomentLayout(std::size_t species) : n_(species) {}

  std::size_t species() const { return n_; }
  std::size_t size() const { return n_ + n_ * (n_ + 1) / 2; }
  std::size_t mu_index(std::size_t i) const { return i; }
  std::size_t sigma_index(std::size_t i, std::size_t j) const;

  std::vector<double> pack(const MomentState& state) const;
  MomentState unpack(std::span<const double> flat) const;

 private:
  std::size_t n_;
};

/// Sum of coefficient * theta[rate] * prod(y[vars]).
class Polynomial {
 public:
  struct Term {
    double coefficient = 0.0;
    std::size_t rate = 0;
    std::uint8_t degree = 0;
    std::array<std::uint32_t, 3> vars{};
  };

  /// Adds a term, merging with an existing one of the same (rate, monomial).
  void add(double coefficient, std::size_t rate, std::span<const std::uint32_t> vars);
  /// Drops terms whose coefficients cancelled to exactly zero.
  void prune();

  std::span<const Term> terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double evaluate(std::span<const double> y, std::span<const double> theta) const;

 private:
  std::vector<Term> terms_;
};

/// A named scalar output (a mean or a covariance entry) of the moment state.
struct MomentOutput {
  std::string name;
  std::size_t state_index = 0;
};

class MomentSystem {
 public:
  MomentSystem(ReactionNetwork network, bool diagonal_covariance);

  const ReactionNetwork& network() const { return network_; }
  bool diagonal_covariance() const { return diagonal_; }
  const MomentLayout& layout() const { return layout_; }
  std::size_t dimension() const { return layout_.size(); }

  /// Right-hand side polynomial of each flat state component.
  std::span<const Polynomial> rhs() const { return rhs_; }

  /// Flat-state derivative. `theta` must have the network's parameter count.
  void derivative(std::span<const double> y, std::span<double> dydt, std::span<const double> theta) const;

  /// mu = initial counts, sigma = 0.
  std::vector<double> initial_state() const;

  /// Observed means followed by covariances between observed species.
  std::vector<MomentOutput> outputs() const;

  /// Name of a flat state component, e.g. "mu_X" or "sigma_X_Y".
  std::string component_name(std::size_t index) const;

  /// Human-readable equations, one per line.
  std::string describe() const;

 private:
  ReactionNetwork network_;
  bool diagonal_;
  MomentLayout layout_;
  std::vector<Polynomial> rhs_;
};

MomentSystem build_moment_system(const ReactionNetwork& network, bool diagonal_covariance = false);

/// Evaluates the closed right-hand side. Throws std::invalid_argument on
/// dimension mismatch.
MomentState rhs_eval(const MomentSystem& system, const MomentState& state, const ParameterPoint& point);

/// Integrates the moment equations from the network's initial condition and
/// flags negative variances in the trajectory metadata (never clamps them).
Trajectory simulate_moments(const MomentSystem& system, const ParameterPoint& point,
                            std::span<const double> grid, const IntegratorOptions& options = {});

}  // namespace momsens

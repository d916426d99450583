// Mass-action reaction networks: declaration, parsing and propensities.
//
// A network is a list of species with initial molecule counts, a list of
// reactions with integer stoichiometry, and a list of named rate constants.
// Propensities follow the combinatorial mass-action convention
//
//     alpha_k(x) = c_k * prod_i binom(x_i, a_ik)
//
// so a dimerization 2X -> Y fires at c * x (x - 1) / 2. Reactions of total
// reactant order above two are rejected: the moment closure relies on
// propensities being polynomials of degree at most two.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace momsens {

struct Species {
  std::string name;
  std::uint64_t initial_count = 0;

  friend bool operator==(const Species&, const Species&) = default;
};

struct StoichTerm {
  std::size_t species = 0;
  unsigned coefficient = 1;

  friend bool operator==(const StoichTerm&, const StoichTerm&) = default;
};

struct Reaction {
  std::string name;
  std::vector<StoichTerm> reactants;  // a_ik, one entry per distinct species
  std::vector<StoichTerm> products;   // b_ik
  std::size_t rate = 0;               // index into ReactionNetwork::parameters()
  std::vector<int> net_change;        // nu_k, dense, one entry per species

  unsigned order() const;

  friend bool operator==(const Reaction&, const Reaction&) = default;
};

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct Parameter {
  std::string name;
  double nominal = 0.0;  // per second
  std::optional<Bounds> bounds;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Thrown for any malformed or inconsistent model. `line()` is 1-based, or
/// zero when the problem is not tied to a source line.
class ModelError : public std::runtime_error {
 public:
  ModelError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Validated, immutable reaction network. Species and parameter order is the
/// declaration order of the model file.
class ReactionNetwork {
 public:
  /// Validates every invariant and throws ModelError on violation.
  ReactionNetwork(std::vector<Species> species, std::vector<Reaction> reactions,
                  std::vector<Parameter> parameters,
                  std::vector<std::size_t> observed = {});

  std::span<const Species> species() const { return species_; }
  std::span<const Reaction> reactions() const { return reactions_; }
  std::span<const Parameter> parameters() const { return parameters_; }

  /// Species reported as outputs. Defaults to every species.
  std::span<const std::size_t> observed() const { return observed_; }

  std::size_t species_count() const { return species_.size(); }
  std::size_t reaction_count() const { return reactions_.size(); }
  std::size_t parameter_count() const { return parameters_.size(); }

  std::optional<std::size_t> find_species(std::string_view name) const;
  std::optional<std::size_t> find_parameter(std::string_view name) const;

  std::vector<std::uint64_t> initial_state() const;

  friend bool operator==(const ReactionNetwork&, const ReactionNetwork&) = default;

 private:
  std::vector<Species> species_;
  std::vector<Reaction> reactions_;
  std::vector<Parameter> parameters_;
  std::vector<std::size_t> observed_;
};

/// Rate-constant vector aligned with a network's parameter order.
class ParameterPoint {
 public:
  /// Throws std::invalid_argument unless every entry is finite and > 0.
  explicit ParameterPoint(std::vector<double> values);

  static ParameterPoint nominal(const ReactionNetwork& network);

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  /// Copy with entry `i` replaced.
  ParameterPoint with(std::size_t i, double value) const;

  friend bool operator==(const ParameterPoint&, const ParameterPoint&) = default;

 private:
  std::vector<double> values_;
};

ReactionNetwork parse_model(std::string_view text);

/// Reads and parses a model file. Throws std::runtime_error with
/// "file not found" when the path cannot be opened.
ReactionNetwork load_model(const std::string& path);

/// Canonical model-file text; parse_model(render_model(n)) == n.
std::string render_model(const ReactionNetwork& network);

/// Mass-action propensities at an integer state, one per reaction.
std::vector<double> propensity_eval(const ReactionNetwork& network,
                                    std::span<const std::int64_t> state,
                                    const ParameterPoint& point);

/// A propensity written as rate * q(x) with
///     q(x) = constant + sum_l linear[l] x_l + 1/2 sum_lm hessian[l,m] x_l x_m.
/// The rate constant is kept symbolic (by index) so the same polynomial
/// serves every parameter point.
struct PropensityPolynomial {
  std::size_t rate = 0;
  std::size_t dim = 0;
  double constant = 0.0;
  std::vector<double> linear;   // length dim
  std::vector<double> hessian;  // dim x dim, row-major, symmetric

  double hess(std::size_t l, std::size_t m) const { return hessian[l * dim + m]; }

  /// q(x), without the rate constant.
  double value(std::span<const double> x) const;
  /// dq/dx_l, without the rate constant.
  double gradient(std::span<const double> x, std::size_t l) const;
};

std::vector<PropensityPolynomial> propensity_polynomials(const ReactionNetwork& network);

}  // namespace momsens

#include "momsens/moments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace momsens {

std::size_t MomentLayout::sigma_index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  // Rows 0..i-1 of the upper triangle hold n + (n-1) + ... + (n-i+1) entries.
  return n_ + i * n_ - i * (i - 1) / 2 + (j - i);
}

std::vector<double> MomentLayout::pack(const MomentState& state) const {
  if (state.mu.size() != n_ || state.sigma.size() != n_ * n_)
    throw std::invalid_argument("moment state dimension mismatch");
  std::vector<double> flat(size());
  for (std::size_t i = 0; i < n_; ++i) flat[mu_index(i)] = state.mu[i];
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i; j < n_; ++j) flat[sigma_index(i, j)] = state.cov(i, j);
  return flat;
}

MomentState MomentLayout::unpack(std::span<const double> flat) const {
  if (flat.size() != size()) throw std::invalid_argument("flat moment vector dimension mismatch");
  MomentState s;
  s.mu.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(n_));
  s.sigma.assign(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i; j < n_; ++j) {
      s.cov(i, j) = flat[sigma_index(i, j)];
      s.cov(j, i) = flat[sigma_index(i, j)];
    }
  return s;
}

void Polynomial::add(double coefficient, std::size_t rate, std::span<const std::uint32_t> vars) {
  if (coefficient == 0.0) return;
  if (vars.size() > 3) throw std::logic_error("moment polynomial degree exceeds 3");
  Term t;
  t.coefficient = coefficient;
  t.rate = rate;
  t.degree = static_cast<std::uint8_t>(vars.size());
  std::copy(vars.begin(), vars.end(), t.vars.begin());
  std::sort(t.vars.begin(), t.vars.begin() + t.degree);

  for (auto& existing : terms_) {
    if (existing.rate == t.rate && existing.degree == t.degree && existing.vars == t.vars) {
      existing.coefficient += t.coefficient;
      return;
    }
  }
  terms_.push_back(t);
}

void Polynomial::prune() {
  std::erase_if(terms_, [](const Term& t) { return t.coefficient == 0.0; });
}

double Polynomial::evaluate(std::span<const double> y, std::span<const double> theta) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coefficient * theta[t.rate];
    for (std::uint8_t d = 0; d < t.degree; ++d) v *= y[t.vars[d]];
    sum += v;
  }
  return sum;
}

namespace {

struct Monomial {
  double coefficient;
  std::vector<std::uint32_t> vars;
};

}  // namespace

MomentSystem::MomentSystem(ReactionNetwork network, bool diagonal_covariance)
    : network_(std::move(network)), diagonal_(diagonal_covariance), layout_(network_.species_count()) {
  const std::size_t n = network_.species_count();
  const auto polys = propensity_polynomials(network_);
  rhs_.assign(layout_.size(), Polynomial{});

  auto mu = [&](std::size_t i) { return static_cast<std::uint32_t>(layout_.mu_index(i)); };
  auto sig = [&](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(layout_.sigma_index(i, j)); };
  auto tracked = [&](std::size_t i, std::size_t j) { return !diagonal_ || i == j; };

  for (std::size_t k = 0; k < network_.reaction_count(); ++k) {
    const auto& p = polys[k];
    const auto& nu = network_.reactions()[k].net_change;

    // a_k(mu) + 1/2 sum_lm H_lm sigma_lm, without the rate constant.
    std::vector<Monomial> drift;
    if (p.constant != 0.0) drift.push_back({p.constant, {}});
    for (std::size_t l = 0; l < n; ++l) {
      if (p.linear[l] != 0.0) drift.push_back({p.linear[l], {mu(l)}});
      for (std::size_t m = 0; m < n; ++m) {
        if (p.hess(l, m) == 0.0) continue;
        drift.push_back({0.5 * p.hess(l, m), {mu(l), mu(m)}});
        if (tracked(l, m)) drift.push_back({0.5 * p.hess(l, m), {sig(l, m)}});
      }
    }

    // da_k/dx_l at mu, one list per l.
    std::vector<std::vector<Monomial>> grad(n);
    for (std::size_t l = 0; l < n; ++l) {
      if (p.linear[l] != 0.0) grad[l].push_back({p.linear[l], {}});
      for (std::size_t m = 0; m < n; ++m)
        if (p.hess(l, m) != 0.0) grad[l].push_back({p.hess(l, m), {mu(m)}});
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (nu[i] == 0) continue;
      for (const auto& t : drift) rhs_[mu(i)].add(nu[i] * t.coefficient, p.rate, t.vars);
    }

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        if (!tracked(i, j)) continue;
        auto& eq = rhs_[sig(i, j)];
        // nu_ki * sum_l grad_l sigma_jl + nu_kj * sum_l grad_l sigma_il
        for (auto [outer, inner] : {std::pair{i, j}, std::pair{j, i}}) {
          if (nu[outer] == 0) continue;
          for (std::size_t l = 0; l < n; ++l) {
            if (!tracked(inner, l)) continue;
            for (const auto& t : grad[l]) {
              auto vars = t.vars;
              vars.push_back(sig(inner, l));
              eq.add(nu[outer] * t.coefficient, p.rate, vars);
            }
          }
        }
        const int nunu = nu[i] * nu[j];
        if (nunu != 0)
          for (const auto& t : drift) eq.add(nunu * t.coefficient, p.rate, t.vars);
      }
    }
  }
  for (auto& eq : rhs_) eq.prune();
}

void MomentSystem::derivative(std::span<const double> y, std::span<double> dydt,
                              std::span<const double> theta) const {
  for (std::size_t c = 0; c < rhs_.size(); ++c) dydt[c] = rhs_[c].evaluate(y, theta);
}

std::vector<double> MomentSystem::initial_state() const {
  std::vector<double> y(layout_.size(), 0.0);
  for (std::size_t i = 0; i < network_.species_count(); ++i)
    y[layout_.mu_index(i)] = static_cast<double>(network_.species()[i].initial_count);
  return y;
}

std::vector<MomentOutput> MomentSystem::outputs() const {
  std::vector<MomentOutput> out;
  const auto observed = network_.observed();
  for (auto i : observed) out.push_back({component_name(layout_.mu_index(i)), layout_.mu_index(i)});
  for (std::size_t a = 0; a < observed.size(); ++a)
    for (std::size_t b = a; b < observed.size(); ++b) {
      const auto i = std::min(observed[a], observed[b]);
      const auto j = std::max(observed[a], observed[b]);
      if (diagonal_ && i != j) continue;
      out.push_back({component_name(layout_.sigma_index(i, j)), layout_.sigma_index(i, j)});
    }
  return out;
}

std::string MomentSystem::component_name(std::size_t index) const {
  const std::size_t n = network_.species_count();
  const auto species = network_.species();
  if (index < n) return "mu_" + species[index].name;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      if (layout_.sigma_index(i, j) == index) return "sigma_" + species[i].name + "_" + species[j].name;
  throw std::out_of_range("moment component index out of range");
}

std::string MomentSystem::describe() const {
  std::ostringstream out;
  for (std::size_t c = 0; c < rhs_.size(); ++c) {
    out << "d" << component_name(c) << "/dt =";
    if (rhs_[c].empty()) out << " 0";
    for (const auto& t : rhs_[c].terms()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", std::abs(t.coefficient));
      out << (t.coefficient < 0 ? " - " : " + ") << buf << "*" << network_.parameters()[t.rate].name;
      for (std::uint8_t d = 0; d < t.degree; ++d) out << "*" << component_name(t.vars[d]);
    }
    out << '\n';
  }
  return out.str();
}

MomentSystem build_moment_system(const ReactionNetwork& network, bool diagonal_covariance) {
  return MomentSystem(network, diagonal_covariance);
}

MomentState rhs_eval(const MomentSystem& system, const MomentState& state, const ParameterPoint& point) {
  const auto& layout = system.layout();
  if (state.mu.size() != layout.species() || state.sigma.size() != layout.species() * layout.species())
    throw std::invalid_argument("moment state dimension does not match the system");
  if (point.size() != system.network().parameter_count())
    throw std::invalid_argument("parameter point dimension does not match the system");
  auto y = layout.pack(state);
  if (system.diagonal_covariance())
    for (std::size_t i = 0; i < layout.species(); ++i)
      for (std::size_t j = i + 1; j < layout.species(); ++j) y[layout.sigma_index(i, j)] = 0.0;
  std::vector<double> dydt(y.size());
  system.derivative(y, dydt, point.values());
  return layout.unpack(dydt);
}

Trajectory simulate_moments(const MomentSystem& system, const ParameterPoint& point,
                            std::span<const double> grid, const IntegratorOptions& options) {
  if (point.size() != system.network().parameter_count())
    throw std::invalid_argument("parameter point dimension does not match the system");
  const auto theta = point.values();
  auto rhs = [&](double, std::span<const double> y, std::span<double> dydt) {
    system.derivative(y, dydt, theta);
  };
  auto traj = integrate(rhs, system.initial_state(), grid, options);

  const auto& layout = system.layout();
  for (std::size_t t = 0; t < traj.size() && !traj.negative_variance; ++t)
    for (std::size_t i = 0; i < layout.species(); ++i)
      if (traj.at(t, layout.sigma_index(i, i)) < 0.0) {
        traj.negative_variance = true;
        traj.first_negative_variance_time = traj.times[t];
        break;
      }
  return traj;
}

}  // namespace momsens

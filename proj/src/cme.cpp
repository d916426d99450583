#include "momsens/cme.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_set>

namespace momsens {

namespace {

struct VectorHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto x : v) {
      h ^= static_cast<std::size_t>(x);
      h *= 1099511628211ull;
    }
    return h;
  }
};

bool fires(const Reaction& r, std::span<const std::int64_t> x) {
  for (const auto& t : r.reactants)
    if (x[t.species] < static_cast<std::int64_t>(t.coefficient)) return false;
  return true;
}

bool inside(std::span<const std::int64_t> x, std::span<const std::int64_t> bound) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < 0 || x[i] > bound[i]) return false;
  return true;
}

}  // namespace

StateSpace::StateSpace(std::size_t species, std::vector<std::int64_t> states, std::size_t truncated_transitions)
    : species_(species), states_(std::move(states)), truncated_(truncated_transitions) {}

std::optional<std::size_t> StateSpace::find(std::span<const std::int64_t> x) const {
  if (x.size() != species_) return std::nullopt;
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    auto s = state(mid);
    if (std::lexicographical_compare(s.begin(), s.end(), x.begin(), x.end()))
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < size() && std::equal(x.begin(), x.end(), state(lo).begin())) return lo;
  return std::nullopt;
}

std::vector<std::int64_t> default_bound(const ReactionNetwork& network) {
  std::uint64_t largest = 0;
  for (const auto& s : network.species()) largest = std::max(largest, s.initial_count);
  const auto b = static_cast<std::int64_t>(std::max<std::uint64_t>(8 * largest, 1));
  return std::vector<std::int64_t>(network.species_count(), b);
}

StateSpace enumerate_states(const ReactionNetwork& network, std::span<const std::int64_t> bound,
                            std::size_t max_states) {
  const std::size_t n = network.species_count();
  if (bound.size() != n) throw std::invalid_argument("truncation bound needs one entry per species");
  std::vector<std::int64_t> x0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto init = static_cast<std::int64_t>(network.species()[i].initial_count);
    if (bound[i] < init)
      throw std::invalid_argument("truncation bound for species '" + network.species()[i].name +
                                  "' is below its initial count");
    x0.push_back(init);
  }

  std::unordered_set<std::vector<std::int64_t>, VectorHash> seen{x0};
  std::deque<std::vector<std::int64_t>> queue{x0};
  std::size_t truncated = 0;
  while (!queue.empty()) {
    auto x = std::move(queue.front());
    queue.pop_front();
    for (const auto& r : network.reactions()) {
      if (!fires(r, x)) continue;
      auto y = x;
      for (std::size_t i = 0; i < n; ++i) y[i] += r.net_change[i];
      if (!inside(y, bound)) {
        ++truncated;
        continue;
      }
      if (seen.insert(y).second) {
        if (seen.size() > max_states)
          throw std::length_error("reachable state count exceeds the cap of " + std::to_string(max_states));
        queue.push_back(std::move(y));
      }
    }
  }

  std::vector<std::vector<std::int64_t>> sorted(seen.begin(), seen.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int64_t> flat;
  flat.reserve(sorted.size() * n);
  for (const auto& s : sorted) flat.insert(flat.end(), s.begin(), s.end());
  return StateSpace(n, std::move(flat), truncated);
}

double Generator::column_sum(std::size_t j) const {
  double sum = diagonal[j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = row_start[i]; e < row_start[i + 1]; ++e)
      if (column[e] == j) sum += rate[e];
  return sum;
}

double Generator::max_exit_rate() const {
  double m = 0.0;
  for (double d : diagonal) m = std::max(m, -d);
  return m;
}

Generator build_generator(const StateSpace& space, const ReactionNetwork& network, const ParameterPoint& point) {
  const std::size_t n = space.size();
  Generator gen;
  gen.n = n;
  gen.diagonal.assign(n, 0.0);
  gen.outflow.assign(n, 0.0);

  struct Entry {
    std::size_t row, col;
    double rate;
  };
  std::vector<Entry> entries;
  std::vector<std::int64_t> y(space.species());
  for (std::size_t j = 0; j < n; ++j) {
    auto x = space.state(j);
    const auto alpha = propensity_eval(network, x, point);
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      if (alpha[k] == 0.0) continue;
      gen.diagonal[j] -= alpha[k];
      const auto& nu = network.reactions()[k].net_change;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + nu[i];
      if (auto target = space.find(y))
        entries.push_back({*target, j, alpha[k]});
      else
        gen.outflow[j] += alpha[k];
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });

  gen.row_start.assign(n + 1, 0);
  for (const auto& e : entries) ++gen.row_start[e.row + 1];
  for (std::size_t i = 0; i < n; ++i) gen.row_start[i + 1] += gen.row_start[i];
  gen.column.reserve(entries.size());
  gen.rate.reserve(entries.size());
  // Two reactions can connect the same pair of states; merge them.
  std::size_t w = 0;
  std::vector<std::size_t> new_start(n + 1, 0);
  for (std::size_t i = 0, e = 0; i < n; ++i) {
    new_start[i] = w;
    for (; e < gen.row_start[i + 1]; ++e) {
      if (w > new_start[i] && gen.column.back() == entries[e].col) {
        gen.rate.back() += entries[e].rate;
      } else {
        gen.column.push_back(entries[e].col);
        gen.rate.push_back(entries[e].rate);
        ++w;
      }
    }
  }
  new_start[n] = w;
  gen.row_start = std::move(new_start);
  return gen;
}

void multiply_serial(const Generator& gen, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < gen.n; ++i) {
    double sum = gen.diagonal[i] * x[i];
    for (std::size_t e = gen.row_start[i]; e < gen.row_start[i + 1]; ++e) sum += gen.rate[e] * x[gen.column[e]];
    y[i] = sum;
  }
}

void multiply_parallel(const Generator& gen, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(gen.n);
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double sum = gen.diagonal[i] * x[i];
    for (std::size_t e = gen.row_start[i]; e < gen.row_start[i + 1]; ++e) sum += gen.rate[e] * x[gen.column[e]];
    y[i] = sum;
  }
}

EvolveResult evolve(std::span<const double> p0, const Generator& gen, double t, const EvolveOptions& options) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("evolution time must be non-negative");
  if (p0.size() != gen.n) throw std::invalid_argument("probability vector length does not match the generator");
  double mass = 0.0;
  for (double v : p0) {
    if (!(v >= 0.0)) throw std::invalid_argument("probability vector has a negative entry");
    mass += v;
  }
  if (mass > 1.0 + 1e-9) throw std::invalid_argument("probability vector has total mass above one");

  EvolveResult out;
  out.probabilities.assign(p0.begin(), p0.end());
  const double lambda = gen.max_exit_rate();
  if (t > 0.0 && lambda > 0.0) {
    // Keep each Poisson parameter moderate so exp(-q) stays far from underflow.
    constexpr double kMaxPoisson = 64.0;
    const auto substeps = static_cast<std::size_t>(std::ceil(lambda * t / kMaxPoisson));
    const double q = lambda * t / static_cast<double>(substeps);
    const double eps = options.tail_tolerance / static_cast<double>(substeps);

    const auto multiply = options.parallel ? multiply_parallel : multiply_serial;
    // P = I + A / lambda has non-negative entries: a_jj >= -lambda.
    Generator uniformized = gen;
    for (auto& d : uniformized.diagonal) d = 1.0 + d / lambda;
    for (auto& r : uniformized.rate) r /= lambda;

    std::vector<double> term(gen.n), next(gen.n), acc(gen.n);
    for (std::size_t s = 0; s < substeps; ++s) {
      term = out.probabilities;
      double w = std::exp(-q);
      for (std::size_t i = 0; i < gen.n; ++i) acc[i] = w * term[i];
      for (std::size_t m = 1;; ++m) {
        multiply(uniformized, term, next);
        term.swap(next);
        ++out.terms;
        w *= q / static_cast<double>(m);
        for (std::size_t i = 0; i < gen.n; ++i) acc[i] += w * term[i];
        // Past the mode the weights decay at least geometrically with ratio
        // q / (m + 1), which bounds the remaining tail.
        const double ratio = q / static_cast<double>(m + 1);
        if (ratio < 1.0) {
          const double tail = w * ratio / (1.0 - ratio);
          if (tail <= eps) {
            out.tail_bound += tail;
            break;
          }
        }
      }
      out.probabilities.swap(acc);
    }
  }
  double total = 0.0;
  for (double v : out.probabilities) total += v;
  out.residual_mass = 1.0 - total;
  return out;
}

DistributionMoments moments_from_distribution(std::span<const double> p, const StateSpace& space) {
  if (p.size() != space.size()) throw std::invalid_argument("distribution length does not match the state space");
  const std::size_t n = space.species();
  DistributionMoments out;
  auto& m = out.moments;
  m.mu.assign(n, 0.0);
  m.sigma.assign(n * n, 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    out.total_mass += p[j];
    auto x = space.state(j);
    for (std::size_t i = 0; i < n; ++i) m.mu[i] += static_cast<double>(x[i]) * p[j];
  }
  for (std::size_t j = 0; j < p.size(); ++j) {
    auto x = space.state(j);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b)
        m.cov(a, b) += (static_cast<double>(x[a]) - m.mu[a]) * (static_cast<double>(x[b]) - m.mu[b]) * p[j];
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < a; ++b) m.cov(a, b) = m.cov(b, a);
  out.residual_mass = 1.0 - out.total_mass;
  out.mass_warning = std::abs(out.residual_mass) > 1e-6;
  return out;
}

OracleTrajectory oracle_moments(const ReactionNetwork& network, const ParameterPoint& point,
                                std::span<const double> grid, std::span<const std::int64_t> bound,
                                const EvolveOptions& options) {
  if (grid.empty() || grid.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");

  const auto space = enumerate_states(network, bound);
  const auto gen = build_generator(space, network, point);
  const MomentLayout layout(network.species_count());

  std::vector<std::int64_t> x0;
  for (const auto& s : network.species()) x0.push_back(static_cast<std::int64_t>(s.initial_count));
  std::vector<double> p(space.size(), 0.0);
  p[*space.find(x0)] = 1.0;

  OracleTrajectory out;
  out.states = space.size();
  out.truncated_transitions = space.truncated_transitions();
  out.moments.times.assign(grid.begin(), grid.end());
  out.moments.dim = layout.size();

  // Each interval is evolved with its share of the total tail budget.
  EvolveOptions step_options = options;
  step_options.tail_tolerance = options.tail_tolerance / static_cast<double>(std::max<std::size_t>(grid.size(), 1));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (g > 0) p = evolve(p, gen, grid[g] - grid[g - 1], step_options).probabilities;
    const auto dm = moments_from_distribution(p, space);
    const auto flat = layout.pack(dm.moments);
    out.moments.values.insert(out.moments.values.end(), flat.begin(), flat.end());
    out.residual_mass.push_back(dm.residual_mass);
  }
  return out;
}

}  // namespace momsens

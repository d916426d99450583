#include "doctest.h"

#include <random>

#include "momsens/moments.hpp"
#include "oracles.hpp"

using namespace momsens;

namespace {

const char* kBirthDeath =
    "species X init=50\nparam c1 = 0.10\nparam c2 = 1.0\n"
    "reaction R1: X -> 2 X @ c1\nreaction R2: X -> 0 @ c2\n";

const char* kDimer =
    "species X init=301\nspecies Y init=0\nparam c1 = 1.66e-3\nparam c2 = 0.2\n"
    "reaction R1: 2 X -> Y @ c1\nreaction R2: Y -> 2 X @ c2\nobserve X\n";

// Zero-closure right-hand side evaluated densely, with propensity
// derivatives taken by finite differences of the raw mass-action formula.
MomentState reference_rhs(const ReactionNetwork& net, const MomentState& s, const ParameterPoint& theta) {
  const std::size_t n = net.species_count();
  MomentState d{std::vector<double>(n, 0.0), std::vector<double>(n * n, 0.0)};
  for (const auto& r : net.reactions()) {
    std::vector<unsigned> order(n, 0);
    for (const auto& t : r.reactants) order[t.species] = t.coefficient;
    const double c = theta[r.rate];
    auto f = [&](const std::vector<double>& x) { return oracle::mass_action(c, order, x); };
    const double a = f(s.mu);
    const auto g = oracle::fd_gradient(f, s.mu);
    const auto H = oracle::fd_hessian(f, s.mu);
    double half_trace = 0.0;
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t m = 0; m < n; ++m) half_trace += 0.5 * H[l * n + m] * s.cov(l, m);
    const auto& nu = r.net_change;
    for (std::size_t i = 0; i < n; ++i) d.mu[i] += nu[i] * (a + half_trace);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double v = nu[i] * nu[j] * (a + half_trace);
        for (std::size_t l = 0; l < n; ++l) v += nu[i] * g[l] * s.cov(j, l) + nu[j] * g[l] * s.cov(i, l);
        d.cov(i, j) += v;
      }
  }
  return d;
}

ReactionNetwork random_network(std::mt19937_64& rng, std::size_t n_species) {
  std::uniform_int_distribution<int> coeff(0, 2), pick(0, static_cast<int>(n_species) - 1);
  std::uniform_real_distribution<double> rate(0.05, 2.0);
  std::vector<Species> species;
  for (std::size_t i = 0; i < n_species; ++i) species.push_back({"S" + std::to_string(i), 10});
  std::vector<Parameter> params{{"k0", rate(rng), {}}, {"k1", rate(rng), {}}};
  std::vector<Reaction> reactions;
  while (reactions.size() < 5) {
    Reaction r;
    r.name = "r" + std::to_string(reactions.size());
    r.rate = reactions.size() % 2;
    std::vector<unsigned> a(n_species, 0);
    for (int budget = coeff(rng); budget > 0; --budget) ++a[static_cast<std::size_t>(pick(rng))];
    std::vector<int> nu(n_species, 0);
    for (std::size_t i = 0; i < n_species; ++i) {
      if (a[i]) r.reactants.push_back({i, a[i]});
      nu[i] -= static_cast<int>(a[i]);
      if (unsigned b = static_cast<unsigned>(coeff(rng))) {
        r.products.push_back({i, b});
        nu[i] += static_cast<int>(b);
      }
    }
    if (std::all_of(nu.begin(), nu.end(), [](int v) { return v == 0; })) continue;
    reactions.push_back(r);
  }
  return ReactionNetwork(species, reactions, params);
}

MomentState random_state(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-3.0, 3.0), m(1.0, 50.0);
  MomentState s{std::vector<double>(n), std::vector<double>(n * n)};
  for (auto& v : s.mu) v = m(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = i == j ? std::abs(u(rng)) * 10 : u(rng);
      s.cov(i, j) = v;
      s.cov(j, i) = v;
    }
  return s;
}

}  // namespace

TEST_CASE("layout packs mu then the upper triangle") {
  const MomentLayout layout(3);
  CHECK(layout.size() == 9);
  CHECK(layout.sigma_index(0, 0) == 3);
  CHECK(layout.sigma_index(0, 2) == 5);
  CHECK(layout.sigma_index(1, 1) == 6);
  CHECK(layout.sigma_index(2, 1) == 7);
  CHECK(layout.sigma_index(2, 2) == 8);
  MomentState s{{1, 2, 3}, {4, 5, 6, 5, 7, 8, 6, 8, 9}};
  const auto flat = layout.pack(s);
  CHECK(flat == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto back = layout.unpack(flat);
  CHECK(back.mu == s.mu);
  CHECK(back.sigma == s.sigma);
}

TEST_CASE("birth-death right-hand side") {
  const auto sys = build_moment_system(parse_model(kBirthDeath));
  REQUIRE(sys.dimension() == 2);
  const MomentState s{{50.0}, {0.0}};
  const auto d = rhs_eval(sys, s, ParameterPoint({0.1, 1.0}));
  CHECK(d.mu[0] == doctest::Approx(-45.0));
  CHECK(d.cov(0, 0) == doctest::Approx(55.0));
  const MomentState s2{{20.0}, {7.0}};
  const auto d2 = rhs_eval(sys, s2, ParameterPoint({0.1, 1.0}));
  CHECK(d2.mu[0] == doctest::Approx(-18.0));
  CHECK(d2.cov(0, 0) == doctest::Approx(2 * -0.9 * 7.0 + 1.1 * 20.0));
}

TEST_CASE("dimerization reduces to the single-species mean and variance equations") {
  const auto sys = build_moment_system(parse_model(kDimer));
  const double c1 = 1.66e-3, c2 = 0.2, x0 = 301;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mu_d(1.0, 300.0), sig_d(0.0, 80.0);
  for (int trial = 0; trial < 50; ++trial) {
    // Conservation x + 2y = x0 pins mu_Y and the Y covariances.
    const double mu = mu_d(rng), var = sig_d(rng);
    MomentState s{{mu, (x0 - mu) / 2}, {var, -var / 2, -var / 2, var / 4}};
    const auto d = rhs_eval(sys, s, ParameterPoint({c1, c2}));
    CHECK(d.mu[0] == doctest::Approx(oracle::dimer_dmu(c1, c2, x0, mu, var)).epsilon(1e-12));
    CHECK(d.cov(0, 0) == doctest::Approx(oracle::dimer_dsigma_derived(c1, c2, x0, mu, var)).epsilon(1e-12));
    // Conservation is preserved by the closed system.
    CHECK(d.mu[0] + 2 * d.mu[1] == doctest::Approx(0.0).scale(std::abs(d.mu[0]) + 1));
  }
}

TEST_CASE("property: closure right-hand side matches the dense reference") {
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 2u, 3u}) {
    for (int trial = 0; trial < 60; ++trial) {
      const auto net = random_network(rng, n);
      const auto sys = build_moment_system(net);
      const auto s = random_state(rng, n);
      const auto theta = ParameterPoint::nominal(net);
      const auto got = rhs_eval(sys, s, theta);
      const auto want = reference_rhs(net, s, theta);
      double scale = 1.0;
      for (double v : want.mu) scale = std::max(scale, std::abs(v));
      for (double v : want.sigma) scale = std::max(scale, std::abs(v));
      for (std::size_t i = 0; i < n; ++i) CHECK(got.mu[i] == doctest::Approx(want.mu[i]).scale(scale).epsilon(1e-6));
      for (std::size_t i = 0; i < n * n; ++i)
        CHECK(got.sigma[i] == doctest::Approx(want.sigma[i]).scale(scale).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: the right-hand side is linear in the rate constants") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const auto net = random_network(rng, 2);
    const auto sys = build_moment_system(net);
    const auto s = random_state(rng, 2);
    const auto theta = ParameterPoint::nominal(net);
    const ParameterPoint scaled({3.0 * theta[0], 3.0 * theta[1]});
    const auto a = rhs_eval(sys, s, theta), b = rhs_eval(sys, s, scaled);
    for (std::size_t i = 0; i < 2; ++i) CHECK(b.mu[i] == doctest::Approx(3.0 * a.mu[i]));
    for (std::size_t i = 0; i < 4; ++i) CHECK(b.sigma[i] == doctest::Approx(3.0 * a.sigma[i]));
    CHECK(a.cov(0, 1) == a.cov(1, 0));
  }
}

TEST_CASE("diagonal covariance pins cross terms") {
  const auto net = parse_model(kDimer);
  const auto full = build_moment_system(net, false);
  const auto diag = build_moment_system(net, true);
  CHECK(diag.rhs()[diag.layout().sigma_index(0, 1)].empty());
  MomentState s{{100.0, 100.5}, {20.0, 0.0, 0.0, 5.0}};
  const auto theta = ParameterPoint::nominal(net);
  const auto a = rhs_eval(full, s, theta), b = rhs_eval(diag, s, theta);
  CHECK(b.cov(0, 1) == 0.0);
  // With zero cross covariance the diagonal equations agree.
  CHECK(a.mu[0] == doctest::Approx(b.mu[0]));
  CHECK(a.cov(0, 0) == doctest::Approx(b.cov(0, 0)));
  const auto outs = diag.outputs();
  REQUIRE(outs.size() == 2);
  CHECK(outs[0].name == "mu_X");
  CHECK(outs[1].name == "sigma_X_X");
}

TEST_CASE("outputs and names") {
  const auto net = parse_model(
      "species A init=1\nspecies B init=2\nparam k=1\nreaction r: A -> B @ k\n");
  const auto sys = build_moment_system(net);
  const auto outs = sys.outputs();
  REQUIRE(outs.size() == 5);
  CHECK(outs[0].name == "mu_A");
  CHECK(outs[1].name == "mu_B");
  CHECK(outs[2].name == "sigma_A_A");
  CHECK(outs[3].name == "sigma_A_B");
  CHECK(outs[4].name == "sigma_B_B");
  CHECK(sys.initial_state() == std::vector<double>{1, 2, 0, 0, 0});
  CHECK(sys.describe().find("dmu_A/dt = - 1*k*mu_A") != std::string::npos);
}

TEST_CASE("rhs_eval rejects mismatched dimensions") {
  const auto sys = build_moment_system(parse_model(kBirthDeath));
  const MomentState bad{{1.0, 2.0}, {0, 0, 0, 0}};
  CHECK_THROWS_AS(rhs_eval(sys, bad, ParameterPoint({0.1, 1.0})), std::invalid_argument);
  const MomentState ok{{1.0}, {0.0}};
  CHECK_THROWS_AS(rhs_eval(sys, ok, ParameterPoint({0.1})), std::invalid_argument);
}

TEST_CASE("birth-death trajectory matches the closed form") {
  const auto sys = build_moment_system(parse_model(kBirthDeath));
  const auto grid = uniform_grid(10.0, 101);
  const auto traj = simulate_moments(sys, ParameterPoint({0.1, 1.0}), grid);
  CHECK_FALSE(traj.negative_variance);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    CHECK(traj.at(i, 0) == doctest::Approx(oracle::bd_mean(0.1, 1.0, 50, t)).epsilon(1e-6));
    CHECK(traj.at(i, 1) == doctest::Approx(oracle::bd_variance(0.1, 1.0, 50, t)).epsilon(1e-6));
  }
}

TEST_CASE("negative variance is flagged, not clamped") {
  // Pair decay near one molecule gives the closed variance a negative source.
  const auto net = parse_model(
      "species X init=1\nparam k=10\nparam d=0.1\nreaction r: 2 X -> X @ k\nreaction e: X -> 0 @ d\n");
  const auto sys = build_moment_system(net);
  const auto traj = simulate_moments(sys, ParameterPoint::nominal(net), uniform_grid(3.0, 16));
  CHECK(traj.negative_variance);
  CHECK(traj.first_negative_variance_time == doctest::Approx(0.8));
  CHECK(traj.at(4, 1) < 0.0);

  const auto fine = simulate_moments(build_moment_system(parse_model(kBirthDeath)), ParameterPoint({0.1, 1.0}),
                                     uniform_grid(1.0, 3));
  CHECK_FALSE(fine.negative_variance);
  CHECK(std::isnan(fine.first_negative_variance_time));
}

#include "doctest.h"

#include <cmath>

#include "momsens/ode.hpp"

using namespace momsens;

TEST_CASE("exponential decay lands on every grid point") {
  const RhsFunction rhs = [](double, std::span<const double> y, std::span<double> d) { d[0] = -2.0 * y[0]; };
  const std::vector<double> y0{3.0};
  const auto grid = uniform_grid(5.0, 51);
  const auto traj = integrate(rhs, y0, grid);
  REQUIRE(traj.size() == 51);
  CHECK(traj.times == grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(traj.at(i, 0) - 3.0 * std::exp(-2.0 * grid[i])) < 1e-7 * 3.0 * std::exp(-2.0 * grid[i]) + 1e-9);
  CHECK(traj.stats.accepted > 0);
  CHECK(traj.stats.rhs_evals > traj.stats.accepted);
}

TEST_CASE("harmonic oscillator over many periods") {
  const RhsFunction rhs = [](double, std::span<const double> y, std::span<double> d) {
    d[0] = y[1];
    d[1] = -y[0];
  };
  const std::vector<double> y0{1.0, 0.0};
  const std::vector<double> grid{0.0, 10.0, 20.0 * M_PI};
  const auto traj = integrate(rhs, y0, grid, {1e-10, 1e-12});
  CHECK(traj.at(1, 0) == doctest::Approx(std::cos(10.0)).epsilon(1e-7));
  CHECK(traj.at(2, 0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(traj.at(2, 1)) < 1e-7);
}

TEST_CASE("non-autonomous right-hand side") {
  const RhsFunction rhs = [](double t, std::span<const double>, std::span<double> d) { d[0] = std::cos(t); };
  const std::vector<double> y0{0.0};
  const auto grid = uniform_grid(3.0, 4);
  const auto traj = integrate(rhs, y0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(traj.at(i, 0) == doctest::Approx(std::sin(grid[i])).scale(1.0).epsilon(1e-8));
}

TEST_CASE("tighter tolerances cost more steps and give smaller error") {
  const RhsFunction rhs = [](double, std::span<const double> y, std::span<double> d) { d[0] = y[0] * (1 - y[0]); };
  const std::vector<double> y0{0.01};
  const auto grid = uniform_grid(10.0, 2);
  const auto loose = integrate(rhs, y0, grid, {1e-4, 1e-6});
  const auto tight = integrate(rhs, y0, grid, {1e-10, 1e-12});
  const double exact = 1.0 / (1.0 + 99.0 * std::exp(-10.0));
  CHECK(tight.stats.accepted > loose.stats.accepted);
  CHECK(std::abs(tight.at(1, 0) - exact) < std::abs(loose.at(1, 0) - exact) + 1e-15);
  CHECK(std::abs(tight.at(1, 0) - exact) < 1e-9);
}

TEST_CASE("invalid grids and tolerances") {
  const RhsFunction rhs = [](double, std::span<const double> y, std::span<double> d) { d[0] = -y[0]; };
  const std::vector<double> y0{1.0};
  const std::vector<double> late{0.5, 1.0}, flat{0.0, 1.0, 1.0};
  CHECK_THROWS_AS(integrate(rhs, y0, late), std::invalid_argument);
  CHECK_THROWS_AS(integrate(rhs, y0, flat), std::invalid_argument);
  const std::vector<double> grid{0.0, 1.0};
  CHECK_THROWS_AS(integrate(rhs, y0, grid, {0.0, 1e-10}), std::invalid_argument);
  CHECK_THROWS_AS(uniform_grid(0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(uniform_grid(1.0, 1), std::invalid_argument);
}

TEST_CASE("blow-up is reported with its time") {
  const RhsFunction rhs = [](double, std::span<const double> y, std::span<double> d) { d[0] = y[0] * y[0]; };
  const std::vector<double> y0{1.0};
  const std::vector<double> grid{0.0, 2.0};
  try {
    integrate(rhs, y0, grid);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.time() > 0.9);
    CHECK(e.time() <= 1.0 + 1e-6);
  }
}

TEST_CASE("uniform grid endpoints are exact") {
  const auto g = uniform_grid(10.0, 101);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 10.0);
  CHECK(g[50] == doctest::Approx(5.0));
}

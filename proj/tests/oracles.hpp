// Independent reference computations used only by the tests.
//
// Nothing here calls into the code path it is used to check: closed forms
// are written out by hand, derivatives of propensities come from finite
// differences of the raw mass-action formula, and Sobol' indices come from
// tensor-grid quadrature of conditional variances.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

// Birth-death X -> 2X (c1), X -> 0 (c2) from x0 molecules, sigma(0) = 0.
inline double bd_mean(double c1, double c2, double x0, double t) { return x0 * std::exp((c1 - c2) * t); }

inline double bd_variance(double c1, double c2, double x0, double t) {
  const double r = c1 - c2;
  return x0 * (c1 + c2) / r * (std::exp(2 * r * t) - std::exp(r * t));
}

// d mean / d c1 = t * mean, d mean / d c2 = -t * mean.
inline double bd_mean_dc1(double c1, double c2, double x0, double t) { return t * bd_mean(c1, c2, x0, t); }

// Single-species dimerization moment equations with x0 conserved monomers.
// Mean equation and the variance equation worked out by hand from the closure.
inline double dimer_dmu(double c1, double c2, double x0, double mu, double sigma) {
  return c1 * mu * (1 - mu) + c2 * (x0 - mu) - c1 * sigma;
}
inline double dimer_dsigma_derived(double c1, double c2, double x0, double mu, double sigma) {
  return -2 * c1 * (2 * mu - 2) * sigma - 2 * c2 * sigma + 2 * c1 * mu * (mu - 1) + 2 * c2 * (x0 - mu);
}
// Variant with +2 inside the first bracket.
inline double dimer_dsigma_plus2(double c1, double c2, double x0, double mu, double sigma) {
  return -2 * c1 * (2 * mu + 2) * sigma - 2 * c2 * sigma + 2 * c1 * mu * (mu - 1) + 2 * c2 * (x0 - mu);
}

// Positive root of c1 x^2 + (c2 - c1) x - c2 x0 = 0.
inline double dimer_steady_state(double c1, double c2, double x0) {
  const double b = c2 - c1;
  return (-b + std::sqrt(b * b + 4 * c1 * c2 * x0)) / (2 * c1);
}

inline double binomial_pmf(int n, int k, double p) {
  if (k < 0 || k > n) return 0.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(log_c + k * std::log(p) + (n - k) * std::log1p(-p));
}

// Mass-action propensity on real arguments: c * prod_i binom(x_i, a_i) with
// binom(x, 1) = x and binom(x, 2) = x (x - 1) / 2.
inline double mass_action(double c, const std::vector<unsigned>& order, const std::vector<double>& x) {
  double a = c;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (order[i] == 1) a *= x[i];
    if (order[i] == 2) a *= x[i] * (x[i] - 1) / 2;
  }
  return a;
}

// Central differences; exact up to round-off for quadratics.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-3) {
  std::vector<double> g(x.size());
  for (std::size_t l = 0; l < x.size(); ++l) {
    const double keep = x[l];
    x[l] = keep + h;
    const double up = f(x);
    x[l] = keep - h;
    const double down = f(x);
    x[l] = keep;
    g[l] = (up - down) / (2 * h);
  }
  return g;
}

inline std::vector<double> fd_hessian(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double h = 1e-2) {
  const std::size_t n = x.size();
  std::vector<double> H(n * n);
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t m = 0; m < n; ++m) {
      auto at = [&](double dl, double dm) {
        auto y = x;
        y[l] += dl;
        y[m] += dm;
        return f(y);
      };
      H[l * n + m] = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
    }
  return H;
}

struct QuadratureIndices {
  double first[2];
  double total[2];
  double variance;
};

// Sobol' indices of g(x1, x2) with independent uniforms on [lo_i, hi_i],
// by the midpoint rule on an m x m grid:
//   S_1  = Var(E[Y | x1]) / Var(Y)
//   S_T1 = 1 - Var(E[Y | x2]) / Var(Y)
// `values` holds g at node (i, j) as values[i * m + j].
inline QuadratureIndices conditional_variance_indices(const std::vector<double>& values, std::size_t m) {
  const double w = 1.0 / static_cast<double>(m);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());

  std::vector<double> given1(m, 0.0), given2(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      given1[i] += w * values[i * m + j];
      given2[j] += w * values[i * m + j];
    }
  auto spread = [&](const std::vector<double>& cond) {
    double s = 0.0;
    for (double c : cond) s += w * (c - mean) * (c - mean);
    return s;
  };
  const double v1 = spread(given1), v2 = spread(given2);
  return {{v1 / var, v2 / var}, {1.0 - v2 / var, 1.0 - v1 / var}, var};
}

inline std::vector<double> midpoints(double lo, double hi, std::size_t m) {
  std::vector<double> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(m);
  return x;
}

// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle

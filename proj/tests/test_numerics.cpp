#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mcs/errors.hpp"
#include "mcs/numerics.hpp"

using namespace mcs;
using namespace mcs::num;

TEST_CASE("adaptive quadrature on smooth and endpoint-singular integrands") {
  const auto r = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));

  const double s = integrate_checked([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
  CHECK(s == doctest::Approx(2.0).epsilon(1e-8));

  CHECK(gauss_legendre20([](double x) { return std::exp(x); }, 0.0, 1.0) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("checked quadrature rejects a non-integrable singularity") {
  QuadratureOptions o;
  o.max_panels = 256;
  CHECK_THROWS_AS(integrate_checked([](double x) { return 1.0 / (x * x); }, 0.0, 1.0, o),
                  QuadratureDivergence);
}

TEST_CASE("Gauss5 integrates degree-9 polynomials exactly") {
  double sum = 0.0;
  for (int q = 0; q < Gauss5::size; ++q)
    sum += Gauss5::weights[q] * std::pow(Gauss5::nodes[q], 8);
  CHECK(sum == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("safeguarded Newton finds sqrt 2 and rejects a bad bracket") {
  auto f = [](double x) { return ValueAndSlope{x * x - 2.0, 2.0 * x}; };
  CHECK(safeguarded_newton(f, 0.0, 2.0, 1e-14) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(safeguarded_newton(f, 2.0, 3.0, 1e-14), InversionFailure);
}

TEST_CASE("monotone integral value and inverse of exp") {
  MonotoneIntegral mi([](double x) { return std::exp(x); }, linspace(0.0, 2.0, 9));
  CHECK(mi.total() == doctest::Approx(std::exp(2.0) - 1.0).epsilon(1e-12));
  for (double x : {0.1, 0.77, 1.5, 1.99}) {
    CHECK(mi.value(x) == doctest::Approx(std::exp(x) - 1.0).epsilon(1e-12));
    CHECK(mi.inverse(std::exp(x) - 1.0) == doctest::Approx(x).epsilon(1e-11));
  }
}

TEST_CASE("natural cubic spline reproduces lines and approximates sin") {
  const auto x = linspace(0.0, 1.0, 11);
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v - 1.0);
  const CubicSpline line(x, y);
  const auto s = line(0.437);
  CHECK(s.value == doctest::Approx(3.0 * 0.437 - 1.0).epsilon(1e-14));
  CHECK(s.d1 == doctest::Approx(3.0).epsilon(1e-12));

  const auto xs = linspace(0.0, std::numbers::pi, 201);
  std::vector<double> ys;
  for (double v : xs) ys.push_back(std::sin(v));
  const CubicSpline sine(xs, ys);
  CHECK(std::abs(sine(1.2345).value - std::sin(1.2345)) < 1e-8);
  CHECK_THROWS_AS(CubicSpline({0.0, 1.0, 1.0}, {0.0, 1.0, 2.0}), DomainError);
}

TEST_CASE("Richardson ladder removes powers of 2^-k") {
  std::vector<double> a;
  for (int k = 0; k < 12; ++k) a.push_back(1.0 + 2.0 * std::pow(0.5, k) - 3.0 * std::pow(0.25, k));
  const LadderLimit lim = richardson_ladder(a);
  CHECK(lim.converged);
  CHECK(lim.value == doctest::Approx(1.0).epsilon(1e-10));
}

namespace {
Tridiagonal laplacian(std::size_t m) {
  Tridiagonal a;
  a.diag.assign(m, 2.0);
  a.off.assign(m - 1, -1.0);
  return a;
}
}  // namespace

TEST_CASE("tridiagonal spectrum of the discrete Laplacian") {
  const std::size_t m = 50;
  const Tridiagonal a = laplacian(m);
  for (std::size_t k : {1u, 2u, 25u, 50u}) {
    const double exact = 2.0 - 2.0 * std::cos(k * std::numbers::pi / (m + 1));
    CHECK(tridiagonal_eigenvalue(a, k) == doctest::Approx(exact).epsilon(1e-12));
  }
  const double l1 = tridiagonal_eigenvalue(a, 1);
  const auto v = tridiagonal_eigenvector(a, l1);
  // Proportional to sin(j pi / (m + 1)).
  const double ratio = v[0] / std::sin(std::numbers::pi / (m + 1));
  for (std::size_t j = 0; j < m; ++j)
    CHECK(v[j] == doctest::Approx(ratio * std::sin((j + 1) * std::numbers::pi / (m + 1))).epsilon(1e-8));
  CHECK_THROWS_AS(tridiagonal_eigenvalue(a, 0), DomainError);
}

TEST_CASE("pencil eigenvalues scale with the mass matrix") {
  const Tridiagonal a = laplacian(20);
  Tridiagonal b;
  b.diag.assign(20, 2.0);
  b.off.assign(19, 0.0);
  CHECK(pencil_eigenvalue(a, b, 3) == doctest::Approx(0.5 * tridiagonal_eigenvalue(a, 3)).epsilon(1e-12));
  CHECK(positive_definite(b));
  b.diag[4] = -1.0;
  CHECK_FALSE(positive_definite(b));
  CHECK_THROWS_AS(pencil_eigenvalue(a, b, 1), SolverFailure);
}

TEST_CASE("property: inertia count agrees with the sorted spectrum") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Tridiagonal a;
    const std::size_t m = 5 + trial;
    for (std::size_t i = 0; i < m; ++i) a.diag.push_back(3.0 * u(rng));
    for (std::size_t i = 0; i + 1 < m; ++i) a.off.push_back(u(rng));
    for (std::size_t k = 1; k <= m; ++k) {
      const double lk = tridiagonal_eigenvalue(a, k);
      CHECK(count_below(a, lk - 1e-9) <= k - 1);
      CHECK(count_below(a, lk + 1e-9) >= k);
    }
  }
}

TEST_CASE("property: Thomas solve leaves a tiny residual") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Tridiagonal a;
    const std::size_t m = 3 + 5 * trial;
    for (std::size_t i = 0; i < m; ++i) a.diag.push_back(4.0 + u(rng));
    for (std::size_t i = 0; i + 1 < m; ++i) a.off.push_back(u(rng));
    std::vector<double> rhs;
    for (std::size_t i = 0; i < m; ++i) rhs.push_back(u(rng));
    const auto x = solve_tridiagonal(a, rhs);
    for (std::size_t i = 0; i < m; ++i) {
      double r = a.diag[i] * x[i] - rhs[i];
      if (i > 0) r += a.off[i - 1] * x[i - 1];
      if (i + 1 < m) r += a.off[i] * x[i + 1];
      CHECK(std::abs(r) < 1e-13);
    }
  }
}

TEST_CASE("linspace and logspace end points") {
  const auto l = linspace(-1.0, 1.0, 5);
  CHECK(l.front() == -1.0);
  CHECK(l.back() == 1.0);
  CHECK(l[2] == doctest::Approx(0.0));
  const auto g = logspace(1e-2, 1e2, 5);
  CHECK(g.front() == doctest::Approx(1e-2));
  CHECK(g[2] == doctest::Approx(1.0));
  CHECK(g.back() == doctest::Approx(1e2));
}

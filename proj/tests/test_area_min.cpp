#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mcs/area_min.hpp"
#include "mcs/errors.hpp"
#include "mcs/graph_operator.hpp"
#include "mcs/stability.hpp"

using namespace mcs;

namespace {

EquivariantAreaProblem cone_problem(int n, double kappa, int cells = 64) {
  return make_area_problem(cone_conformal(kappa, n + 1), n, 1.0, cells);
}

// Smooth random free values with the axis tie and u(W) = 0 built in.
std::vector<double> random_free(const AreaFunctional& f, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = amp * u(rng), b = amp * u(rng), c = 3.0 + 2.0 * u(rng);
  std::vector<double> x(f.free_count());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = (i + 0.5) / x.size();
    x[i] = (1.0 - s) * (a + b * std::sin(c * s));
  }
  return x;
}

}  // namespace

TEST_CASE("grids") {
  const auto g = half_cell_grid(2.0, 4);
  REQUIRE(g.size() == 6);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(0.25));
  CHECK(g[4] == doctest::Approx(1.75));
  CHECK(g[5] == 2.0);
  const auto h = geometric_grid(1.0, 1e-2, 3);
  REQUIRE(h.size() == 4);
  CHECK(h[2] == doctest::Approx(0.1));
  CHECK_THROWS_AS(half_cell_grid(1.0, 1), DomainError);
  CHECK_THROWS_AS(geometric_grid(1.0, 2.0, 5), DomainError);
}

TEST_CASE("problem validation") {
  EquivariantAreaProblem p = cone_problem(4, 0.9);
  p.u[1] = 0.2;
  CHECK_THROWS_AS(validate(p), DomainError);
  p = cone_problem(4, 0.9);
  p.u.back() = 1.0;
  CHECK_THROWS_AS(validate(p), DomainError);
  CHECK_THROWS_AS(make_area_problem(cone_conformal(0.9, 6), 4, 1.0, 32), DomainError);
}

TEST_CASE("flat area of the cone disc converges to kappa^n W^{n kappa}/(n kappa)") {
  for (auto [n, kappa] : {std::pair{3, 0.9}, std::pair{4, 0.8}, std::pair{7, 0.7}}) {
    const double exact = std::pow(kappa, n) / (n * kappa);
    double prev = 1.0;
    for (int cells : {64, 128, 256, 512}) {
      const double err = std::abs(area_of_graph(cone_problem(n, kappa, cells)) / exact - 1.0);
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 1e-3);
  }
  // Euclidean unit disc in R^4: measure of the 3-ball cross-section / omega_2.
  CHECK(area_of_graph(cone_problem(3, 1.0, 256)) == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("vertex integrand: divergent below n kappa = 1, finite at n kappa = 1") {
  CHECK_THROWS_AS(area_of_graph(cone_problem(3, 0.3)), QuadratureDivergence);
  CHECK(std::isfinite(area_of_graph(cone_problem(4, 0.25))));
}

TEST_CASE("property: gradient matches central differences") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 3 + trial % 5;
    const double kappa = 0.6 + 0.035 * trial;
    const AreaFunctional f(cone_problem(n, kappa, 24));
    const auto x = random_free(f, rng, 0.2);
    std::vector<double> g;
    f.value_and_gradient(x, g);
    CHECK(f.value_and_gradient(x, g) == doctest::Approx(f.value(x)).epsilon(1e-14));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double h = 1e-6;
      auto y = x;
      y[i] += h;
      const double fp = f.value(y);
      y[i] -= 2.0 * h;
      const double fm = f.value(y);
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(std::abs(g[i] - fd) < 1e-7 * std::max(1.0, std::abs(g[i])));
    }
  }
}

TEST_CASE("property: Hessian matches differences of the gradient") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 3 + trial % 5;
    const double kappa = 0.65 + 0.04 * trial;
    const AreaFunctional f(cone_problem(n, kappa, 20));
    const auto x = random_free(f, rng, 0.15);
    const num::Tridiagonal H = f.hessian(x);
    const std::size_t m = x.size();
    for (std::size_t j = 0; j < m; ++j) {
      const double h = 1e-6;
      auto y = x;
      std::vector<double> gp, gm;
      y[j] += h;
      f.value_and_gradient(y, gp);
      y[j] -= 2.0 * h;
      f.value_and_gradient(y, gm);
      for (std::size_t i = 0; i < m; ++i) {
        const double fd = (gp[i] - gm[i]) / (2.0 * h);
        double exact = 0.0;
        if (i == j) exact = H.diag[i];
        else if (i + 1 == j) exact = H.off[i];
        else if (j + 1 == i) exact = H.off[j];
        CHECK(std::abs(exact - fd) < 1e-5 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("expand and restrict round trip with the axis tie") {
  const AreaFunctional f(cone_problem(4, 0.9, 16));
  std::vector<double> x(f.free_count());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.01 * (i + 1);
  const auto u = f.expand(x);
  CHECK(u.front() == u[1]);
  CHECK(u.back() == 0.0);
  CHECK(f.restrict(u) == x);
  CHECK(f.value_nodes(u) == doctest::Approx(f.value(x)).epsilon(1e-15));
}

TEST_CASE("seed perturbation shape") {
  const auto grid = half_cell_grid(1.0, 128);
  const auto u = seed_perturbation(grid, 4, 1.0);
  CHECK(u[0] == u[1]);
  CHECK(u.back() == 0.0);
  for (double v : u) CHECK(std::abs(v) <= 0.25);
}

TEST_CASE("flat plane is the minimizer for the Euclidean metric") {
  const EquivariantAreaProblem p = cone_problem(4, 1.0, 128);
  const MinimizationResult r = minimize(p, seed_perturbation(p.grid, 4, 1.0));
  CHECK(r.converged);
  CHECK(r.verdict == AreaVerdict::FlatIsMin);
  CHECK(r.area_descent == doctest::Approx(r.area_flat).epsilon(1e-9));
  for (double v : r.u_star) CHECK(std::abs(v) < 1e-5);
}

TEST_CASE("below the threshold a competitor beats the flat graph") {
  const EquivariantAreaProblem p = cone_problem(4, 0.75, 256);
  const MinimizationResult r = minimize(p, seed_perturbation(p.grid, 4, 1.0));
  CHECK(r.converged);
  CHECK(r.verdict == AreaVerdict::CompetitorBeatsFlat);
  CHECK(r.area_min < r.area_flat * (1.0 - 1e-6));
  CHECK(area_of_graph(p, r.u_star) == doctest::Approx(r.area_min).epsilon(1e-14));
  CHECK(to_string(r.verdict) == "CompetitorBeatsFlat");
}

TEST_CASE("property: above the threshold no tested competitor beats the flat graph") {
  std::mt19937_64 rng(5);
  for (auto [n, kappa] : {std::pair{3, 0.97}, std::pair{4, 0.9}, std::pair{7, 0.75}}) {
    const EquivariantAreaProblem p = cone_problem(n, kappa, 128);
    const AreaFunctional f(p);
    const double flat = area_of_graph(p);
    for (int trial = 0; trial < 30; ++trial)
      CHECK(f.value(random_free(f, rng, 0.3)) >= flat * (1.0 - 1e-12));
    CHECK(area_of_graph(p, seed_perturbation(p.grid, n, 1.0)) >= flat);
  }
}

TEST_CASE("verdicts are stable under mesh doubling away from the threshold") {
  for (int n : {4, 7}) {
    const double ks = kappa_star(n);
    for (double kappa : {ks - 0.1, ks - 0.04, ks + 0.04, std::min(1.0, ks + 0.1)}) {
      AreaVerdict v[2];
      int i = 0;
      for (int cells : {256, 512}) {
        const EquivariantAreaProblem p = cone_problem(n, kappa, cells);
        v[i++] = minimize(p, seed_perturbation(p.grid, n, 1.0)).verdict;
      }
      CHECK(v[0] == v[1]);
    }
  }
}

TEST_CASE("second variation of area against the index form") {
  // A''(phi) = kappa^{n-1} I(f) for phi(w) = exp(-Phi(w)/2) f(w^kappa).
  for (int n : {4, 7}) {
    for (int side : {-1, 1}) {
      const double kappa = kappa_star(n) + side * 0.05;
      const double eps = 0.1;
      const double w_min = std::pow(eps, 1.0 / kappa);
      const auto metric = cone_conformal(kappa, n + 1);
      EquivariantAreaProblem p{metric, n, 1.0, geometric_grid(1.0, w_min, 800), {}};
      p.u.assign(p.grid.size(), 0.0);
      const RadialMode mode = radial_eigenvalue(n, eps, 1);
      std::vector<double> phi(p.grid.size(), 0.0);
      double peak = 0.0;
      for (std::size_t i = 1; i + 1 < p.grid.size(); ++i) {
        const double w = p.grid[i];
        phi[i] = mode.eigenfunction(std::pow(w, kappa)) / std::exp(0.5 * metric->at(w).phi);
        peak = std::max(peak, std::abs(phi[i] / w));
      }
      for (double& v : phi) v /= peak;
      const double a2 = second_variation_fd(p, phi, 1e-2);
      TestFunction f{[&](double r) { return mode.eigenfunction(r) / peak; },
                     [&](double r) { return mode.derivative(r) / peak; }, std::nullopt};
      const double expect =
          std::pow(kappa, n - 1) * index_form(ConeStabilityProblem{n, kappa, 0.0, eps}, f).value;
      CHECK(std::abs(a2 / expect - 1.0) < 0.01);
    }
  }
}

TEST_CASE("property: second variation of the first mode has the sign of the margin") {
  for (int n = 3; n <= 8; ++n) {
    for (int side : {-1, 1}) {
      const double kappa = std::min(1.0, kappa_star(n) + side * 0.05);
      if (kappa == 1.0) continue;
      // Annulus wide enough that (pi / log eps)^2 stays below |margin|.
      const double margin = stability_margin(n, kappa);
      const double eps = std::exp(-std::numbers::pi / std::sqrt(0.5 * std::abs(margin)));
      const double w_min = std::pow(eps, 1.0 / kappa);
      const auto metric = cone_conformal(kappa, n + 1);
      EquivariantAreaProblem p{metric, n, 1.0, geometric_grid(1.0, w_min, 800), {}};
      p.u.assign(p.grid.size(), 0.0);
      const RadialMode mode = radial_eigenvalue(n, eps, 1);
      std::vector<double> phi(p.grid.size(), 0.0);
      double peak = 0.0;
      for (std::size_t i = 1; i + 1 < p.grid.size(); ++i) {
        const double w = p.grid[i];
        phi[i] = mode.eigenfunction(std::pow(w, kappa)) / std::exp(0.5 * metric->at(w).phi);
        peak = std::max(peak, std::abs(phi[i] / w));
      }
      for (double& v : phi) v /= peak;
      double t = 1e-2;
      double a2 = 0.0;
      for (;; t *= 4.0) {
        try {
          a2 = second_variation_fd(p, phi, t);
          break;
        } catch (const SolverFailure&) {
          REQUIRE(t < 1.0);
        }
      }
      INFO("n=" << n << " kappa=" << kappa << " eps=" << eps << " t=" << t << " a2=" << a2);
      CHECK((a2 > 0.0) == (margin > 0.0));
    }
  }
}

TEST_CASE("second variation rejects cancellation and bad input") {
  const EquivariantAreaProblem p = cone_problem(4, 0.9, 32);
  std::vector<double> phi(p.grid.size(), 0.0);
  phi[5] = 1e-9;
  CHECK_THROWS_AS(second_variation_fd(p, phi, 1e-3), SolverFailure);
  CHECK_THROWS_AS(second_variation_fd(p, phi, 0.0), DomainError);
  phi.back() = 1.0;
  CHECK_THROWS_AS(second_variation_fd(p, phi, 1e-3), DomainError);
}

TEST_CASE("threshold scan: monotone verdicts and serial equals parallel") {
  std::vector<double> grid;
  for (int i = 0; i <= 6; ++i) grid.push_back(0.70 + 0.05 * i);
  grid.back() = 1.0;
  ScanOptions opts;
  opts.grid_size = 128;
  const ScanReport a = threshold_scan(4, grid, opts);
  const ScanReport b = threshold_scan_serial(4, grid, opts);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].area_min == b.rows[i].area_min);
    CHECK(a.rows[i].verdict == b.rows[i].verdict);
  }
  CHECK(a.monotone);
  CHECK(a.rows.front().verdict == AreaVerdict::CompetitorBeatsFlat);
  CHECK(a.rows.back().verdict == AreaVerdict::FlatIsMin);
  CHECK(a.kappa_hat < kappa_star(4));
  CHECK_THROWS_AS(threshold_scan(4, {}, opts), DomainError);
  CHECK_THROWS_AS(threshold_scan(4, {1.2}, opts), DomainError);
}

TEST_CASE("scan accepts a capped-cone metric factory") {
  ScanOptions opts;
  opts.grid_size = 64;
  opts.metric = [](double kappa) -> ConformalProfilePtr {
    ConversionOptions c;
    c.kappa = kappa;
    return warped_to_conformal(capped_cone_profile(kappa, 5), c);
  };
  const ScanReport r = threshold_scan(4, {0.95}, opts);
  CHECK(r.rows[0].verdict == AreaVerdict::FlatIsMin);
}

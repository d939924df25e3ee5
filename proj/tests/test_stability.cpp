#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "mcs/errors.hpp"
#include "mcs/stability.hpp"

using namespace mcs;

namespace {

double closed_threshold(int n) { return 2.0 * std::sqrt(n - 1.0) / n; }

double exact_eigenvalue(int n, double eps, int k) {
  const double w = k * std::numbers::pi / std::log(eps);
  return 0.25 * (n - 2) * (n - 2) + w * w;
}

TestFunction mode_test_function(int n, double eps, int k, bool with_second) {
  const RadialMode m = radial_eigenvalue(n, eps, k);
  TestFunction f{m.eigenfunction, m.derivative, std::nullopt};
  if (with_second) {
    // phi'' from the eigen equation rho^2 phi'' + (n-1) rho phi' = -lambda phi.
    const double lambda = m.value;
    f.dd_phi = [m, n, lambda](double rho) {
      return (-lambda * m.eigenfunction(rho) - (n - 1) * rho * m.derivative(rho)) /
             (rho * rho);
    };
  }
  return f;
}

}  // namespace

TEST_CASE("threshold by bisection matches 2 sqrt(n-1)/n") {
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 3; n <= 10; ++n)
    CHECK(std::abs(threshold_by_bisection(n) - closed_threshold(n)) < 1e-10);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 1.0);
  CHECK_THROWS_AS(threshold_by_bisection(2), DomainError);
}

TEST_CASE("property: margin is zero at the threshold and increases with kappa") {
  for (int n = 3; n <= 12; ++n) {
    CHECK(std::abs(stability_margin(n, closed_threshold(n))) < 1e-12);
    double prev = stability_margin(n, 0.05);
    for (int i = 1; i <= 100; ++i) {
      const double kappa = 0.05 + 0.0095 * i;
      const double m = stability_margin(n, kappa);
      CHECK(m > prev);
      CHECK(stability_verdict(n, kappa).stable == (kappa >= closed_threshold(n) - 1e-12));
      prev = m;
    }
  }
}

TEST_CASE("Simons cone margin") {
  const StabilityVerdict v = stability_verdict(7, 1.0, 6.0);
  CHECK(std::abs(v.margin - 0.25) < 1e-12);
  CHECK(v.stable);
  CHECK(v.threshold_kappa == doctest::Approx(closed_threshold(7)));
  CHECK_FALSE(stability_verdict(7, 1.0, 6.5).stable);
}

TEST_CASE("verdict argument validation") {
  CHECK_THROWS_AS(stability_verdict(2, 0.9), DomainError);
  CHECK_THROWS_AS(stability_verdict(5, 0.0), DomainError);
  CHECK_THROWS_AS(stability_verdict(5, 1.1), DomainError);
  CHECK_THROWS_AS(stability_verdict(5, 0.9, -1.0), DomainError);
  ConeStabilityProblem p;
  p.epsilon = 1.0;
  CHECK_THROWS_AS(validate(p), DomainError);
}

TEST_CASE("closed-form radial modes solve the Euler equation") {
  for (int n : {3, 7}) {
    const double eps = 1e-3;
    for (int k = 1; k <= 3; ++k) {
      const RadialMode m = radial_eigenvalue(n, eps, k);
      CHECK(m.value == doctest::Approx(exact_eigenvalue(n, eps, k)));
      const double envelope = std::pow(eps, 0.5 * (2 - n));
      CHECK(std::abs(m.eigenfunction(eps)) < 1e-12 * envelope);
      CHECK(std::abs(m.eigenfunction(1.0)) < 1e-14);
      // -(rho^2 phi'' + (n-1) rho phi') = lambda phi with phi'' by differences.
      for (double rho : {0.01, 0.2, 0.7}) {
        const double h = 1e-5 * rho;
        const double dd = (m.derivative(rho + h) - m.derivative(rho - h)) / (2.0 * h);
        const double lhs = -(rho * rho * dd + (n - 1) * rho * m.derivative(rho));
        const double scale = m.value * std::pow(rho, 0.5 * (2 - n));
        CHECK(std::abs(lhs - m.value * m.eigenfunction(rho)) < 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("finite-difference eigenvalues: accuracy, order and nodal count") {
  const auto t0 = std::chrono::steady_clock::now();
  for (int n : {3, 7}) {
    for (double eps : {1e-2, 1e-4}) {
      for (int k = 1; k <= 3; ++k) {
        const double exact = exact_eigenvalue(n, eps, k);
        const DiscreteMode fine = radial_eigenvalue_fd(n, eps, k, 10000);
        CHECK(std::abs(fine.value - exact) / exact < 1e-3);
        CHECK(fine.sign_changes == k - 1);
        // Coarse pair: at 10^4 points some errors already sit on the
        // round-off floor eps_mach * 4 / h^2.
        const double e1 = std::abs(radial_eigenvalue_fd(n, eps, k, 625).value - exact);
        const double e2 = std::abs(radial_eigenvalue_fd(n, eps, k, 1250).value - exact);
        const double order = std::log2(e1 / e2);
        CHECK(order >= 1.8);
        CHECK(order <= 2.2);
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 10.0);
  CHECK_THROWS_AS(radial_eigenvalue_fd(7, 1e-2, 1, 10), DomainError);
}

TEST_CASE("finite-difference eigenvector follows the closed form") {
  const int n = 5;
  const double eps = 1e-2;
  const DiscreteMode fd = radial_eigenvalue_fd(n, eps, 1, 2001);
  const RadialMode m = radial_eigenvalue(n, eps, 1);
  double peak = 0.0;
  for (double rho : fd.rho) peak = std::max(peak, std::abs(m.eigenfunction(rho)));
  // Same sign convention up to a global sign.
  const double sign = fd.vector[1000] * m.eigenfunction(fd.rho[1000]) > 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < fd.rho.size(); i += 50)
    CHECK(std::abs(sign * fd.vector[i] - m.eigenfunction(fd.rho[i]) / peak) < 1e-3);
}

TEST_CASE("index form of a mode equals (margin + (pi/log eps)^2) times its norm") {
  for (int n : {3, 4, 7}) {
    for (double kappa : {0.6, 0.8, 1.0}) {
      ConeStabilityProblem p{n, kappa, 0.0, 1e-3};
      const double expect = stability_margin(n, kappa) +
                            std::pow(std::numbers::pi / std::log(p.epsilon), 2);
      for (bool second : {false, true}) {
        const IndexFormValue v = index_form(p, mode_test_function(n, p.epsilon, 1, second));
        CHECK(v.norm2 > 0.0);
        CHECK(v.value / v.norm2 == doctest::Approx(expect).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("index form of a polynomial bump against direct quadrature") {
  // phi = (rho - eps)(1 - rho), n = 4, kappa = 1: integrand c phi^2 rho + rho^3 phi'^2.
  const double eps = 0.1;
  ConeStabilityProblem p{4, 1.0, 0.0, eps};
  TestFunction f{[=](double r) { return (r - eps) * (1.0 - r); },
                 [=](double r) { return 1.0 + eps - 2.0 * r; }, std::nullopt};
  const IndexFormValue v = index_form(p, f);
  // c = 0 for kappa = 1, B2 = 0, so I = int_eps^1 rho^3 (1 + eps - 2 rho)^2.
  auto prim = [=](double r) {
    const double a = 1.0 + eps;
    return a * a * std::pow(r, 4) / 4.0 - 4.0 * a * std::pow(r, 5) / 5.0 +
           4.0 * std::pow(r, 6) / 6.0;
  };
  CHECK(v.value == doctest::Approx(prim(1.0) - prim(eps)).epsilon(1e-10));
  TestFunction bad{[](double r) { return r; }, [](double) { return 1.0; }, std::nullopt};
  CHECK_THROWS_AS(index_form(p, bad), DomainError);
  CHECK_THROWS_AS(index_form(p, f, 7), DomainError);
}

TEST_CASE("property: index form sign of the first mode follows the margin") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.15, 0.4);
  for (int n = 3; n <= 8; ++n) {
    for (int side : {-1, 1}) {
      const double kappa = std::min(1.0, closed_threshold(n) + side * u(rng));
      ConeStabilityProblem p{n, kappa, 0.0, 1e-6};
      const IndexFormValue v = index_form(p, mode_test_function(n, p.epsilon, 1, false));
      CHECK((v.value > 0.0) == (stability_margin(n, kappa) > 0.0));
    }
  }
}

TEST_CASE("Rayleigh minimum converges to the lowest mode") {
  for (int n : {3, 7}) {
    for (double kappa : {0.6, 1.0}) {
      ConeStabilityProblem p{n, kappa, 0.0, 1e-4};
      const double exact = stability_margin(n, kappa) +
                           std::pow(std::numbers::pi / std::log(p.epsilon), 2);
      const double a = rayleigh_min(p, 256);
      const double b = rayleigh_min(p, 512);
      CHECK(a >= exact - 1e-9);  // Galerkin bound from above
      CHECK(b >= exact - 1e-9);
      CHECK(std::abs(b - exact) < std::abs(a - exact));
      CHECK(std::abs(b - exact) < 1e-3 * std::max(1.0, std::abs(exact)));
      CHECK(std::log2((a - exact) / (b - exact)) == doctest::Approx(2.0).epsilon(0.1));
    }
  }
  CHECK_THROWS_AS(rayleigh_min(ConeStabilityProblem{}, 4), DomainError);
}

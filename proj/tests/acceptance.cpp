// Acceptance checks, one PASS/FAIL line per criterion.
// Usage: acceptance [--criterion k]   (all criteria when k is omitted)

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcs/area_min.hpp"
#include "mcs/errors.hpp"
#include "mcs/graph_operator.hpp"
#include "mcs/radial_metric.hpp"
#include "mcs/stability.hpp"

using namespace mcs;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct Result {
  bool pass = true;
  std::ostringstream detail;
  std::string failures;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures += " [failed: " + what + "]";
    }
  }
};

double closed_threshold(int n) { return 2.0 * std::sqrt(n - 1.0) / n; }

void criterion_1(Result& res) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int n = 3; n <= 10; ++n)
    worst = std::max(worst, std::abs(threshold_by_bisection(n) - closed_threshold(n)));
  const double secs = seconds_since(t0);
  res.detail << "max |bisection - 2 sqrt(n-1)/n| = " << g(worst) << ", " << g(secs) << " s";
  res.require(worst < 1e-10, "error < 1e-10");
  res.require(secs < 1.0, "runtime < 1 s");
}

void criterion_2(Result& res) {
  const auto t0 = Clock::now();
  double worst_rel = 0.0, order_lo = 1e9, order_hi = -1e9;
  for (int n : {3, 7}) {
    for (double eps : {1e-2, 1e-4}) {
      for (int k = 1; k <= 3; ++k) {
        const double w = k * std::numbers::pi / std::log(eps);
        const double exact = 0.25 * (n - 2) * (n - 2) + w * w;
        const double v = radial_eigenvalue_fd(n, eps, k, 10000).value;
        worst_rel = std::max(worst_rel, std::abs(v - exact) / exact);
        // Order from a pair above the round-off floor of the 10^4 grid.
        const double e1 = std::abs(radial_eigenvalue_fd(n, eps, k, 625).value - exact);
        const double e2 = std::abs(radial_eigenvalue_fd(n, eps, k, 1250).value - exact);
        const double order = std::log2(e1 / e2);
        order_lo = std::min(order_lo, order);
        order_hi = std::max(order_hi, order);
      }
    }
  }
  const double secs = seconds_since(t0);
  res.detail << "max rel error " << g(worst_rel) << " at 10^4 points, order in [" << g(order_lo)
             << ", " << g(order_hi) << "], " << g(secs) << " s";
  res.require(worst_rel < 1e-3, "relative error < 1e-3");
  res.require(order_lo >= 1.8 && order_hi <= 2.2, "order 2 +- 0.2");
  res.require(secs < 10.0, "runtime < 10 s");
}

std::vector<double> random_point(int d, double theta, double r, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> x(d);
  double s = 0.0;
  for (int i = 0; i + 1 < d; ++i) {
    x[i] = nd(rng);
    s += x[i] * x[i];
  }
  const double w = r * std::sqrt(1.0 - theta * theta) / std::sqrt(s);
  for (int i = 0; i + 1 < d; ++i) x[i] *= w;
  x[d - 1] = r * theta;
  return x;
}

ConformalProfilePtr capped_conformal(double kappa, int d) {
  ConversionOptions opts;
  opts.kappa = kappa;
  return warped_to_conformal(capped_cone_profile(kappa, d), opts);
}

void criterion_3(Result& res) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uth(-0.95, 0.95);
  std::uniform_real_distribution<double> ulr(std::log(0.2), std::log(5.0));
  int fields = 0, misses = 0;
  double worst = 0.0;
  for (int d : {4, 8}) {
    for (ConformalProfilePtr m :
         {ConformalProfilePtr(cone_conformal(0.8, d)), capped_conformal(0.75, d)}) {
      for (int trial = 0; trial < 25; ++trial) {
        const PolarTestField f = random_polar_field(rng);
        const PolarAsCartesian cart(f, d);
        const double theta = uth(rng), r = std::exp(ulr(rng));
        const auto x = random_point(d, theta, r, rng);
        const double v[3] = {L_conformal(*m, cart, x), L_polar(*m, f, theta, r),
                             L_fd_oracle(*m, cart, x, 2e-4 * r)};
        for (int i = 0; i < 3; ++i) {
          for (int j = i + 1; j < 3; ++j) {
            const double tol = std::max(1e-6, 1e-4 * std::max(std::abs(v[i]), std::abs(v[j])));
            const double ratio = std::abs(v[i] - v[j]) / tol;
            worst = std::max(worst, ratio);
            if (ratio > 1.0) ++misses;
          }
        }
        ++fields;
      }
    }
  }
  const double secs = seconds_since(t0);
  res.detail << fields << " fields, worst |diff|/tol = " << g(worst) << ", " << g(secs) << " s";
  res.require(fields >= 100, "100 fields");
  res.require(misses == 0, std::to_string(misses) + " pairs outside tolerance");
  res.require(secs < 30.0, "runtime < 30 s");
}

void criterion_4(Result& res) {
  const BarrierGrid grid = default_barrier_grid();
  for (auto [n, kappa] :
       {std::pair{7, 1.0}, std::pair{7, 0.8}, std::pair{4, 0.9}, std::pair{3, 0.95}}) {
    const auto t0 = Clock::now();
    const BarrierReport rep =
        barrier_check(*cone_conformal(kappa, n + 1), make_barrier_spec(n, kappa), grid);
    const double secs = seconds_since(t0);
    res.detail << "(" << n << ", " << kappa << "): min " << g(rep.min_relative) << ", bound gap "
               << g(rep.worst_bound_gap) << ", " << g(secs) << " s; ";
    const std::string tag = "(" + std::to_string(n) + ", " + g(kappa) + ")";
    res.require(rep.min_relative >= -1e-8, tag + " sign");
    res.require(rep.bound_ok, tag + " lower bound");
    res.require(secs < 20.0, tag + " runtime < 20 s");
  }
}

void criterion_5(Result& res) {
  double worst_identity = 0.0, worst_p = INFINITY;
  for (int n = 3; n <= 12; ++n) {
    for (int i = 0; i <= 200; ++i) {
      const double kappa = closed_threshold(n) + (1.0 - closed_threshold(n)) * i / 200.0;
      const double p = barrier_exponent(n, kappa);
      worst_identity = std::max(worst_identity, std::abs(n * (kappa * p - 1.0) + 1.0 - p * p));
      worst_p = std::min(worst_p, p - 1.0 / kappa);
    }
  }
  res.detail << "max |n(kappa p - 1) + 1 - p^2| = " << g(worst_identity)
             << ", min p - 1/kappa = " << g(worst_p);
  res.require(worst_identity <= 1e-12, "identity to 1e-12");
  res.require(worst_p >= -1e-12, "p >= 1/kappa");
}

void criterion_6(Result& res) {
  double slope_out = 0.0, phi_out = 0.0;
  bool rho0_ok = true;
  for (double kappa : {0.3, 0.5, 0.7, 0.866, 0.95}) {
    const auto cap = capped_cone_profile(kappa, 8);
    rho0_ok = rho0_ok && cap->rho0() > 1.0 && cap->rho0() < 1.0 / kappa;
    const double top = 2.0 * cap->rho0();
    for (int i = 0; i < 1000; ++i) {
      const double s = cap->at(top * (i + 0.5) / 1000.0).d_lambda;
      slope_out = std::max({slope_out, kappa - s, s - 1.0});
    }
    ConversionOptions opts;
    opts.kappa = kappa;
    const auto conf = warped_to_conformal(cap, opts);
    for (int i = 0; i <= 200; ++i) {
      const double r = 1e-3 * std::pow(1e6, i / 200.0);
      const double d = conf->at(r).d_phi;
      phi_out = std::max({phi_out, r * d, -2.0 * (1.0 - kappa) - r * d});
    }
  }
  const double kappa = 0.7;
  const XiCap xi(kappa);
  const double exact = std::sqrt(1.0 - kappa * kappa) / kappa;
  const double slope_err = std::abs(xi.slope(1.0) - exact);
  bool order_ok = true;
  double prev = 0.0, last = 0.0;
  for (int j = 0; j < 8; ++j) {
    const double h = 0.2 * std::pow(0.5, j);
    const double err = std::abs((xi.value(1.0) - xi.value(1.0 - h)) / h - exact);
    if (j > 0) order_ok = order_ok && err <= std::max(0.5 * prev, 1e-10);
    prev = last = err;
  }
  res.detail << "slope excursion " << g(slope_out) << ", r Phi' excursion " << g(phi_out)
             << ", cap slope at 1 error " << g(slope_err) << ", FD error " << g(last);
  res.require(slope_out <= 1e-8, "zeta' in [kappa, 1]");
  res.require(rho0_ok, "1 < rho0 < 1/kappa");
  res.require(phi_out <= 1e-6, "Phi' bounds");
  res.require(slope_err < 1e-12, "derivative at 1");
  res.require(order_ok && last < 1e-10, "FD error order >= 1");
}

void criterion_7(Result& res) {
  double worst_rel = 0.0, worst_star = 0.0;
  bool converged = true, boundary = true;
  for (int n : {3, 4, 5, 7, 10}) {
    for (double kappa : {0.4, 0.6, 0.8, 0.9}) {
      const KappaPrime kp = nonradial_ricci_constant(*capped_cone_profile(kappa, n + 1));
      const double exact = (n - 1) * (1.0 / (kappa * kappa) - 1.0);
      converged = converged && kp.converged;
      worst_rel = std::max(worst_rel, std::abs(kp.value - exact) / exact);
    }
    const double ks = closed_threshold(n);
    worst_star = std::max(
        worst_star, std::abs((n - 1) * (1.0 / (ks * ks) - 1.0) - 0.25 * (n - 2) * (n - 2)));
    for (double dk : {-1e-3, -1e-6, 0.0, 1e-6, 1e-3}) {
      const double k = ks + dk;
      const auto v = nonexistence_verdict((n - 1) * (1.0 / (k * k) - 1.0), n);
      boundary = boundary &&
                 (v == NonexistenceVerdict::NoStableHypersurface) == !stability_verdict(n, k).stable;
    }
  }
  res.detail << "max rel error of kappa' " << g(worst_rel) << ", at kappa* " << g(worst_star);
  res.require(converged, "extrapolation converged");
  res.require(worst_rel <= 1e-4, "kappa' within 1e-4");
  res.require(worst_star <= 1e-10, "(n-2)^2/4 at kappa*");
  res.require(boundary, "verdict boundary equals stability threshold");
}

void criterion_8(Result& res) {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(0.5 + 0.01 * i);
  grid.back() = 1.0;
  for (int n : {4, 7}) {
    const auto t0 = Clock::now();
    ScanOptions opts;
    opts.W = 1.0;
    opts.grid_size = 256;
    const ScanReport rep = threshold_scan(n, grid, opts);
    const double secs = seconds_since(t0);
    const double ks = kappa_star(n);
    // Not gating: the transition read at a gap threshold of 1e-12 instead.
    double last_gap = std::nan("");
    for (const ScanRow& row : rep.rows)
      if (row.gap > 1e-12) last_gap = row.kappa;
    res.detail << "n=" << n << ": kappa_hat " << g(rep.kappa_hat) << " vs kappa* " << g(ks)
               << (rep.monotone ? ", monotone" : ", not monotone") << ", last gap > 1e-12 at "
               << g(last_gap) << ", " << g(secs) << " s; ";
    const std::string tag = "n=" + std::to_string(n);
    res.require(rep.monotone, tag + " monotone verdicts");
    res.require(std::abs(rep.kappa_hat - ks) <= 0.03, tag + " transition within kappa* +- 0.03");
    res.require(secs < 300.0, tag + " runtime < 5 min");
  }
}

void criterion_9(Result& res) {
  double worst = 0.0;
  for (int n : {4, 7}) {
    for (int side : {-1, 1}) {
      const double kappa = kappa_star(n) + side * 0.05;
      const double eps = 0.1;
      const auto metric = cone_conformal(kappa, n + 1);
      EquivariantAreaProblem p{metric, n, 1.0,
                               geometric_grid(1.0, std::pow(eps, 1.0 / kappa), 800), {}};
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
      const double rel = std::abs(a2 / expect - 1.0);
      worst = std::max(worst, rel);
      res.detail << "(" << n << ", " << g(kappa) << "): " << g(rel) << "; ";
    }
  }
  res.require(worst < 0.01, "within 1%");
}

void criterion_10(Result& res) {
  const StabilityVerdict v = stability_verdict(7, 1.0, 6.0);
  res.detail << "margin " << g(v.margin);
  res.require(std::abs(v.margin - 0.25) <= 1e-12, "margin 0.25 to 1e-12");
}

void criterion_11(Result& res) {
  double worst_cone = 0.0, worst_cap = 0.0;
  for (int n : {3, 4, 7}) {
    for (double kappa : {0.6, 0.75, 0.9}) {
      const double exact = unit_sphere_measure(n) * std::pow(kappa, n) / (n + 1);
      worst_cone = std::max(
          worst_cone,
          std::abs(volume_growth_limit(*cone_profile(kappa, n + 1)).value / exact - 1.0));
      worst_cap = std::max(
          worst_cap, std::abs(volume_growth(*capped_cone_profile(kappa, n + 1), 1e3) / exact - 1.0));
    }
  }
  res.detail << "cone rel error " << g(worst_cone) << ", capped cone at r = 1e3 " << g(worst_cap);
  res.require(worst_cone <= 1e-6, "cone to 1e-6");
  res.require(worst_cap <= 0.01, "capped cone within 1%");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<void(Result&)>> checks = {
      criterion_1, criterion_2, criterion_3, criterion_4,  criterion_5, criterion_6,
      criterion_7, criterion_8, criterion_9, criterion_10, criterion_11};
  int failed = 0;
  for (int k = 1; k <= 11; ++k) {
    if (only != 0 && k != only) continue;
    Result res;
    try {
      checks[k - 1](res);
    } catch (const std::exception& e) {
      res.pass = false;
      res.failures += std::string(" [exception: ") + e.what() + "]";
    }
    std::printf("criterion %d: %s  %s\n", k, res.pass ? "PASS" : "FAIL",
                (res.detail.str() + res.failures).c_str());
    std::fflush(stdout);
    if (!res.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

#include "mcs/area_min.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>

#include "mcs/errors.hpp"

namespace mcs {

std::vector<double> half_cell_grid(double W, int m) {
  if (!(W > 0.0) || m < 2) throw DomainError("grid needs W > 0 and at least 2 cells");
  std::vector<double> g(m + 2);
  g[0] = 0.0;
  for (int i = 1; i <= m; ++i) g[i] = (i - 0.5) * W / m;
  g[m + 1] = W;
  return g;
}

std::vector<double> geometric_grid(double W, double w_min, int m) {
  if (!(W > 0.0) || !(w_min > 0.0 && w_min < W) || m < 2)
    throw DomainError("geometric grid needs 0 < w_min < W and m >= 2");
  std::vector<double> g = num::logspace(w_min, W, m);
  g.insert(g.begin(), 0.0);
  return g;
}

EquivariantAreaProblem make_area_problem(ConformalProfilePtr metric, int n,
                                         double W, int grid_size) {
  EquivariantAreaProblem p;
  p.metric = std::move(metric);
  p.n = n;
  p.W = W;
  p.grid = half_cell_grid(W, grid_size);
  p.u.assign(p.grid.size(), 0.0);
  validate(p);
  return p;
}

void validate(const EquivariantAreaProblem& p) {
  if (!p.metric) throw DomainError("area problem has no metric");
  if (p.n < 2) throw DomainError("area problem needs n >= 2");
  if (p.metric->n_ambient() != p.n + 1)
    throw DomainError("area problem: metric dimension " +
                      std::to_string(p.metric->n_ambient()) + " != n + 1 = " +
                      std::to_string(p.n + 1));
  if (p.grid.size() < 3) throw DomainError("area grid needs at least 3 nodes");
  if (p.grid.front() != 0.0 || p.grid.back() != p.W)
    throw DomainError("area grid must run from 0 to W");
  for (std::size_t i = 1; i < p.grid.size(); ++i)
    if (!(p.grid[i] > p.grid[i - 1]))
      throw DomainError("area grid must be strictly increasing");
  if (p.u.size() != p.grid.size())
    throw DomainError("area problem: u and grid sizes differ");
  if (p.u.back() != 0.0) throw DomainError("area problem: u(W) must be 0");
  if (p.u[0] != p.u[1])
    throw DomainError("area problem: axis condition u(w_0) = u(w_1) violated");
}

std::string to_string(AreaVerdict v) {
  return v == AreaVerdict::FlatIsMin ? "FlatIsMin" : "CompetitorBeatsFlat";
}

// --- functional ---------------------------------------------------------------

AreaFunctional::AreaFunctional(const EquivariantAreaProblem& problem)
    : metric_(problem.metric), n_(problem.n), grid_(problem.grid),
      axis_limit_(0.0), axis_divergent_(false) {
  validate(problem);
  if (metric_->singular_at_origin()) {
    // exp(n Phi/2) r^{n-1} ~ kappa^n r^{n kappa - 1} near a cone vertex.
    const auto kappa = metric_->kappa_hint();
    if (!kappa)
      throw DomainError("area functional: singular metric without a cone parameter");
    const double e = n_ * *kappa - 1.0;
    if (e < 0.0)
      axis_divergent_ = true;
    else if (e == 0.0)
      axis_limit_ = std::pow(*kappa, n_);
  }
}

double AreaFunctional::weight(double w, double u, double* d_weight_du,
                              double* dd_weight_du) const {
  if (d_weight_du) *d_weight_du = 0.0;
  if (dd_weight_du) *dd_weight_du = 0.0;
  const double r = std::hypot(w, u);
  if (r == 0.0) {
    if (axis_divergent_) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "area integrand diverges at the vertex (n kappa = %.6g <= 1)",
                    n_ * metric_->kappa_hint().value_or(0.0));
      throw QuadratureDivergence(msg);
    }
    return axis_limit_;
  }
  if (w == 0.0) return 0.0;
  const ConformalSample c = metric_->at(r);
  const double g = std::exp(0.5 * n_ * c.phi) * std::pow(w, n_ - 1);
  // g_u = g q, q = (n/2) Phi' u / r; g_uu = g (q^2 + q_u).
  const double q = 0.5 * n_ * c.d_phi * u / r;
  if (d_weight_du) *d_weight_du = g * q;
  if (dd_weight_du) {
    const double r3 = r * r * r;
    const double qu = 0.5 * n_ * (c.dd_phi * u * u / (r * r) + c.d_phi * w * w / r3);
    *dd_weight_du = g * (q * q + qu);
  }
  return g;
}

std::vector<double> AreaFunctional::expand(const std::vector<double>& free) const {
  if (free.size() != free_count()) throw DomainError("wrong number of free values");
  std::vector<double> u(grid_.size(), 0.0);
  std::copy(free.begin(), free.end(), u.begin() + 1);
  u[0] = u[1];
  return u;
}

std::vector<double> AreaFunctional::restrict(const std::vector<double>& u) const {
  if (u.size() != grid_.size()) throw DomainError("wrong number of node values");
  return std::vector<double>(u.begin() + 1, u.end() - 1);
}

double AreaFunctional::value(const std::vector<double>& free) const {
  return value_nodes(expand(free));
}

double AreaFunctional::value_nodes(const std::vector<double>& u) const {
  if (u.size() != grid_.size()) throw DomainError("wrong number of node values");
  double area = 0.0;
  double g_prev = weight(grid_[0], u[0], nullptr, nullptr);
  for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
    const double g_next = weight(grid_[i + 1], u[i + 1], nullptr, nullptr);
    const double dw = grid_[i + 1] - grid_[i];
    const double d = (u[i + 1] - u[i]) / dw;
    area += dw * std::sqrt(1.0 + d * d) * 0.5 * (g_prev + g_next);
    g_prev = g_next;
  }
  return area;
}

double AreaFunctional::value_and_gradient(const std::vector<double>& free,
                                          std::vector<double>& grad) const {
  const std::vector<double> u = expand(free);
  const std::size_t N = grid_.size();
  std::vector<double> g(N), dg(N), G(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) g[i] = weight(grid_[i], u[i], &dg[i], nullptr);
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double dw = grid_[i + 1] - grid_[i];
    const double d = (u[i + 1] - u[i]) / dw;
    const double s = std::sqrt(1.0 + d * d);
    const double gbar = 0.5 * (g[i] + g[i + 1]);
    area += dw * s * gbar;
    const double slope_term = d / s * gbar;
    G[i] += -slope_term + 0.5 * dw * s * dg[i];
    G[i + 1] += slope_term + 0.5 * dw * s * dg[i + 1];
  }
  grad.assign(free_count(), 0.0);
  grad[0] = G[0] + G[1];
  for (std::size_t j = 1; j < grad.size(); ++j) grad[j] = G[j + 1];
  return area;
}

num::Tridiagonal AreaFunctional::hessian(const std::vector<double>& free) const {
  const std::vector<double> u = expand(free);
  const std::size_t N = grid_.size();
  const std::size_t m = free_count();
  std::vector<double> g(N), g1(N), g2(N);
  for (std::size_t i = 0; i < N; ++i) g[i] = weight(grid_[i], u[i], &g1[i], &g2[i]);
  // Node-space Hessian: each cell couples its two end nodes.
  std::vector<double> diag(N, 0.0), off(N - 1, 0.0);
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double dw = grid_[i + 1] - grid_[i];
    const double d = (u[i + 1] - u[i]) / dw;
    const double s = std::sqrt(1.0 + d * d);
    const double s1 = d / s;
    const double s2 = 1.0 / (s * s * s);
    const double gbar = 0.5 * (g[i] + g[i + 1]);
    diag[i] += s2 * gbar / dw - s1 * g1[i] + 0.5 * dw * s * g2[i];
    diag[i + 1] += s2 * gbar / dw + s1 * g1[i + 1] + 0.5 * dw * s * g2[i + 1];
    off[i] += -s2 * gbar / dw + 0.5 * s1 * (g1[i] - g1[i + 1]);
  }
  // Free index j is node j + 1; node 0 is tied to node 1, node N-1 fixed.
  num::Tridiagonal H;
  H.diag.assign(m, 0.0);
  H.off.assign(m > 0 ? m - 1 : 0, 0.0);
  for (std::size_t j = 0; j < m; ++j) H.diag[j] = diag[j + 1];
  H.diag[0] += diag[0] + 2.0 * off[0];
  for (std::size_t j = 0; j + 1 < m; ++j) H.off[j] = off[j + 1];
  return H;
}

double area_of_graph(const EquivariantAreaProblem& problem,
                     const std::vector<double>& u) {
  if (u.size() != problem.grid.size())
    throw DomainError("area_of_graph: u and grid sizes differ");
  if (u.back() != 0.0) throw DomainError("area_of_graph: u(W) must be 0");
  EquivariantAreaProblem p = problem;
  p.u.assign(u.size(), 0.0);
  return AreaFunctional(p).value_nodes(u);
}

double area_of_graph(const EquivariantAreaProblem& problem) {
  return area_of_graph(problem, problem.u);
}

// --- minimisation ---------------------------------------------------------------

namespace {

// -(H + mu I)^{-1} grad with the smallest mu (0 or 1e-10 max|H_ii| times
// powers of 10) that makes H + mu I positive definite.
std::vector<double> descent_direction(num::Tridiagonal H,
                                      const std::vector<double>& grad) {
  double top = 0.0;
  for (double d : H.diag) top = std::max(top, std::abs(d));
  for (double d : H.off) top = std::max(top, std::abs(d));
  if (!(top > 0.0)) top = 1.0;
  double mu = 0.0;
  for (int k = 0; !num::positive_definite(H); ++k) {
    const double next = top * std::pow(10.0, k - 10);
    if (k > 14) throw SolverFailure("area Hessian could not be regularised");
    for (double& d : H.diag) d += next - mu;
    mu = next;
  }
  std::vector<double> dir = num::solve_tridiagonal(H, grad);
  for (double& v : dir) v = -v;
  return dir;
}

// Moves x along +-v (v the lowest Hessian eigenvector, max |v| = 1) when
// the Hessian has a negative eigenvalue and some step lowers the area.
bool escape_saddle(const AreaFunctional& f, std::vector<double>& x,
                   double area, double W) {
  const num::Tridiagonal H = f.hessian(x);
  if (num::count_below(H, 0.0) == 0) return false;
  const double lowest = num::tridiagonal_eigenvalue(H, 1);
  std::vector<double> v = num::tridiagonal_eigenvector(H, lowest);
  double peak = 0.0;
  for (double c : v) peak = std::max(peak, std::abs(c));
  if (!(peak > 0.0)) return false;
  std::vector<double> trial(x.size());
  for (double step = 0.1 * W; step > 1e-8 * W; step *= 0.5) {
    for (double sign : {1.0, -1.0}) {
      for (std::size_t i = 0; i < x.size(); ++i)
        trial[i] = x[i] + sign * step * v[i] / peak;
      if (f.value(trial) < area) {
        x.swap(trial);
        return true;
      }
    }
  }
  return false;
}

}  // namespace

MinimizationResult minimize(const EquivariantAreaProblem& problem,
                            const std::vector<double>& init,
                            const MinimizeOptions& opts) {
  if (opts.max_iter < 0) throw DomainError("max_iter must be >= 0");
  EquivariantAreaProblem start = problem;
  start.u = init;
  validate(start);
  const AreaFunctional f(start);

  MinimizationResult res;
  res.area_flat = f.value(std::vector<double>(f.free_count(), 0.0));

  std::vector<double> x = f.restrict(init), grad, trial(x.size());
  double area = f.value_and_gradient(x, grad);
  int it = 0;
  for (;; ++it) {
    double gn = 0.0;
    for (double g : grad) gn = std::max(gn, std::abs(g));
    res.grad_norm = gn;
    if (opts.trace_every > 0 && it % opts.trace_every == 0)
      res.trace.push_back({it, area, gn});
    if (gn < opts.grad_tol * (1.0 + std::abs(area))) {
      // A stationary point with negative curvature is a saddle: leave it
      // along the lowest Hessian mode and keep descending.
      if (res.saddle_escapes < opts.max_escapes &&
          escape_saddle(f, x, area, problem.W)) {
        ++res.saddle_escapes;
        area = f.value_and_gradient(x, grad);
        continue;
      }
      res.converged = true;
      break;
    }
    if (it >= opts.max_iter) break;

    const std::vector<double> dir0 = descent_direction(f.hessian(x), grad);
    std::vector<double> dir(dir0.begin(), dir0.end());
    double slope = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) slope += grad[i] * dir[i];
    if (!(slope < 0.0)) break;
    double t = 1.0, trial_area = 0.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + t * dir[i];
      trial_area = f.value(trial);
      if (trial_area <= area + opts.armijo * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // stalled at round-off level
    x.swap(trial);
    area = f.value_and_gradient(x, grad);
  }
  res.iterations = it;
  res.area_descent = area;
  if (area <= res.area_flat) {
    res.area_min = area;
    res.u_star = f.expand(x);
  } else {
    res.area_min = res.area_flat;
    res.u_star.assign(problem.grid.size(), 0.0);
  }
  res.verdict = res.area_min < res.area_flat * (1.0 - opts.verdict_tol)
                    ? AreaVerdict::CompetitorBeatsFlat
                    : AreaVerdict::FlatIsMin;
  return res;
}

std::vector<double> seed_perturbation(const std::vector<double>& grid, int n,
                                      double W) {
  if (grid.size() < 3) throw DomainError("seed needs at least 3 grid nodes");
  const double w1 = grid[1];
  const double a = 0.05 * W;
  const double c = 0.25 * W;
  const double span = std::log(w1 / W);
  std::vector<double> u(grid.size(), 0.0);
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double w = grid[i];
    const double raw = a * std::pow(w, 0.5 * (2 - n)) *
                       std::sin(std::numbers::pi * std::log(w / w1) / span);
    u[i] = c * std::tanh(raw / c);
  }
  u[0] = u[1];
  return u;
}

double second_variation_fd(const EquivariantAreaProblem& problem,
                           const std::vector<double>& phi, double t) {
  if (!(t > 0.0)) throw DomainError("second_variation_fd needs t > 0");
  if (phi.size() != problem.grid.size())
    throw DomainError("second_variation_fd: phi and grid sizes differ");
  if (phi.back() != 0.0) throw DomainError("second_variation_fd: phi(W) must be 0");
  std::vector<double> u(phi.size(), 0.0);
  const double a0 = area_of_graph(problem, u);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = t * phi[i];
  const double ap = area_of_graph(problem, u);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = -t * phi[i];
  const double am = area_of_graph(problem, u);
  const double diff = ap + am - 2.0 * a0;
  if (std::abs(diff) < 1e-12 * std::abs(a0)) {
    char msg[200];
    std::snprintf(msg, sizeof msg,
                  "second_variation_fd: cancellation (|A(t phi) + A(-t phi) - "
                  "2A(0)| = %.3g at t = %.3g); use a larger t",
                  std::abs(diff), t);
    throw SolverFailure(msg);
  }
  return diff / (t * t);
}

// --- scans --------------------------------------------------------------------

namespace {

ScanRow scan_one(int n, double kappa, const ScanOptions& opts) {
  ConformalProfilePtr metric =
      opts.metric ? opts.metric(kappa) : cone_conformal(kappa, n + 1);
  const EquivariantAreaProblem p = make_area_problem(metric, n, opts.W, opts.grid_size);
  // Seeded start, plus u = 0 left along its lowest Hessian mode; the
  // better end point is reported.
  MinimizationResult r =
      minimize(p, seed_perturbation(p.grid, n, opts.W), opts.minimize);
  MinimizationResult from_flat = minimize(p, p.u, opts.minimize);
  if (from_flat.area_min < r.area_min) r = std::move(from_flat);
  ScanRow row;
  row.kappa = kappa;
  row.area_flat = r.area_flat;
  row.area_min = r.area_min;
  row.gap = (r.area_flat - r.area_min) / r.area_flat;
  row.verdict = r.verdict;
  row.converged = r.converged;
  row.iterations = r.iterations;
  return row;
}

void validate_scan(const std::vector<double>& kappa_grid, const ScanOptions& opts) {
  if (kappa_grid.empty()) throw DomainError("threshold_scan: empty kappa grid");
  for (double k : kappa_grid)
    if (!(k > 0.0 && k <= 1.0)) throw DomainError("threshold_scan: kappa must lie in (0, 1]");
  if (!(opts.W > 0.0) || opts.grid_size < 8)
    throw DomainError("threshold_scan needs W > 0 and grid_size >= 8");
}

void locate_transition(ScanReport& rep) {
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const ScanRow& a, const ScanRow& b) { return a.kappa < b.kappa; });
  int switches = 0;
  bool first_is_beats = !rep.rows.empty() &&
                        rep.rows.front().verdict == AreaVerdict::CompetitorBeatsFlat;
  rep.kappa_hat = std::numeric_limits<double>::quiet_NaN();
  std::size_t last_beats = rep.rows.size();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    if (rep.rows[i].verdict == AreaVerdict::CompetitorBeatsFlat) last_beats = i;
    if (i > 0 && rep.rows[i].verdict != rep.rows[i - 1].verdict) ++switches;
  }
  rep.monotone = switches == 0 || (switches == 1 && first_is_beats);
  if (last_beats < rep.rows.size() && last_beats + 1 < rep.rows.size())
    rep.kappa_hat = 0.5 * (rep.rows[last_beats].kappa + rep.rows[last_beats + 1].kappa);
}

}  // namespace

ScanReport threshold_scan_serial(int n, const std::vector<double>& kappa_grid,
                                 const ScanOptions& opts) {
  validate_scan(kappa_grid, opts);
  ScanReport rep;
  rep.n = n;
  for (double k : kappa_grid) rep.rows.push_back(scan_one(n, k, opts));
  locate_transition(rep);
  return rep;
}

ScanReport threshold_scan(int n, const std::vector<double>& kappa_grid,
                          const ScanOptions& opts) {
  validate_scan(kappa_grid, opts);
  ScanReport rep;
  rep.n = n;
  rep.rows.resize(kappa_grid.size());
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  const auto count = static_cast<long>(kappa_grid.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      rep.rows[i] = scan_one(n, kappa_grid[i], opts);
    } catch (...) {
#pragma omp critical
      {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  locate_transition(rep);
  return rep;
}

}  // namespace mcs

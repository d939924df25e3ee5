#pragma once

// Area of rotationally symmetric graphs x_{n+1} = u(|x'|) over the disc of
// radius W in the hyperplane {x_{n+1} = 0} of (R^{n+1}, exp(Phi)|dx|^2):
//   A(u) = int_0^W exp(n Phi(r)/2) sqrt(1 + u'^2) w^{n-1} dw,  r^2 = w^2 + u^2,
// with the link volume omitted.

#include <functional>
#include <string>
#include <vector>

#include "mcs/radial_metric.hpp"

namespace mcs {

// Nodes 0, (i - 1/2) W / m for i = 1..m, W.
std::vector<double> half_cell_grid(double W, int m);
// Nodes 0, then m geometric nodes from w_min up to (and including) W.
std::vector<double> geometric_grid(double W, double w_min, int m);

struct EquivariantAreaProblem {
  ConformalProfilePtr metric;
  int n = 3;  // hypersurface dimension; metric->n_ambient() == n + 1
  double W = 1.0;
  std::vector<double> grid;  // 0 = w_0 < ... < w_last = W
  std::vector<double> u;     // same size; u.back() == 0, u[0] == u[1]
};

EquivariantAreaProblem make_area_problem(ConformalProfilePtr metric, int n,
                                         double W, int grid_size);
// Throws DomainError on inconsistent sizes, grids or boundary values.
void validate(const EquivariantAreaProblem& problem);

// Trapezoid rule on the grid with the difference quotient on each cell.
// Throws QuadratureDivergence when the integrand is unbounded at w = r = 0.
double area_of_graph(const EquivariantAreaProblem& problem);
double area_of_graph(const EquivariantAreaProblem& problem,
                     const std::vector<double>& u);

// Area and its gradient with respect to the free values u_1..u_{m}
// (u_0 tied to u_1, last value fixed at 0).
class AreaFunctional {
 public:
  explicit AreaFunctional(const EquivariantAreaProblem& problem);
  std::size_t free_count() const { return grid_.size() - 2; }
  // Full node vector from free values and back.
  std::vector<double> expand(const std::vector<double>& free) const;
  std::vector<double> restrict(const std::vector<double>& u) const;

  double value(const std::vector<double>& free) const;
  // Area of an arbitrary node vector (axis tie not enforced).
  double value_nodes(const std::vector<double>& u) const;
  double value_and_gradient(const std::vector<double>& free,
                            std::vector<double>& grad) const;
  // Exact Hessian in the free values (tridiagonal: each cell couples
  // neighbouring nodes only).
  num::Tridiagonal hessian(const std::vector<double>& free) const;

 private:
  double weight(double w, double u, double* d_weight_du,
                double* dd_weight_du) const;

  ConformalProfilePtr metric_;
  int n_;
  std::vector<double> grid_;
  double axis_limit_;  // weight at w = u = 0
  bool axis_divergent_;
};

enum class AreaVerdict { FlatIsMin, CompetitorBeatsFlat };
std::string to_string(AreaVerdict v);

struct TracePoint {
  int iteration;
  double area;
  double grad_norm;
};

struct MinimizationResult {
  double area_min = 0.0;   // best of the descent end point and u = 0
  double area_flat = 0.0;
  double area_descent = 0.0;
  std::vector<double> u_star;
  bool converged = false;
  int iterations = 0;
  int saddle_escapes = 0;
  double grad_norm = 0.0;
  AreaVerdict verdict = AreaVerdict::FlatIsMin;
  std::vector<TracePoint> trace;
};

struct MinimizeOptions {
  int max_iter = 20000;
  double grad_tol = 1e-8;      // times (1 + |A|)
  double verdict_tol = 1e-6;   // relative area gap
  double armijo = 1e-4;
  int trace_every = 100;
  // Restarts along the lowest Hessian mode when the descent stops at a
  // saddle.
  int max_escapes = 20;
};

// Descent along -(H + mu I)^{-1} grad, H the exact tridiagonal Hessian and
// mu >= 0 the smallest shift making it positive definite, with Armijo
// backtracking (halving).
MinimizationResult minimize(const EquivariantAreaProblem& problem,
                            const std::vector<double>& init,
                            const MinimizeOptions& opts = {});

// a w^{(2-n)/2} sin(pi log(w/w_1) / log(w_1/W)), a = 0.05 W, passed through
// c tanh(./c) with c = 0.25 W; u_0 = u_1 and u(W) = 0.
std::vector<double> seed_perturbation(const std::vector<double>& grid, int n,
                                      double W);

// (A(t phi) + A(-t phi) - 2 A(0)) / t^2 about u = 0. Throws SolverFailure
// when |value| < 1e-12 A(0) / t^2 (cancellation; use a larger t).
double second_variation_fd(const EquivariantAreaProblem& problem,
                           const std::vector<double>& phi, double t);

struct ScanRow {
  double kappa = 0.0;
  double area_flat = 0.0;
  double area_min = 0.0;
  double gap = 0.0;  // (area_flat - area_min) / area_flat
  AreaVerdict verdict = AreaVerdict::FlatIsMin;
  bool converged = false;
  int iterations = 0;
};

struct ScanReport {
  int n = 0;
  std::vector<ScanRow> rows;
  // Midpoint between the last CompetitorBeatsFlat and the first FlatIsMin;
  // NaN when the scan never changes verdict.
  double kappa_hat = 0.0;
  bool monotone = false;  // verdicts switch at most once, beats -> flat
};

using MetricFactory = std::function<ConformalProfilePtr(double kappa)>;

struct ScanOptions {
  double W = 1.0;
  int grid_size = 256;
  MinimizeOptions minimize;
  MetricFactory metric;  // cone_conformal(kappa, n + 1) when empty
};

ScanReport threshold_scan(int n, const std::vector<double>& kappa_grid,
                          const ScanOptions& opts = {});
ScanReport threshold_scan_serial(int n, const std::vector<double>& kappa_grid,
                                 const ScanOptions& opts = {});

}  // namespace mcs

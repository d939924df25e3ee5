#include "mcs/stability.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mcs/errors.hpp"
#include "mcs/numerics.hpp"

namespace mcs {

void validate(const ConeStabilityProblem& p) {
  if (p.n < 2) throw DomainError("stability problem needs n >= 2");
  if (!(p.kappa > 0.0 && p.kappa <= 1.0))
    throw DomainError("stability problem needs kappa in (0, 1]");
  if (!(p.B2_link >= 0.0)) throw DomainError("|B|^2 of the link must be >= 0");
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0))
    throw DomainError("stability problem needs epsilon in (0, 1)");
}

double index_potential(const ConeStabilityProblem& p) {
  return -p.B2_link - (p.n - 1) / (p.kappa * p.kappa) + (p.n - 1);
}

double stability_margin(int n, double kappa, double B2_link) {
  const double h = 0.5 * (n - 2);
  return -B2_link - (n - 1) / (kappa * kappa) + (n - 1) + h * h;
}

StabilityVerdict stability_verdict(int n, double kappa, double B2_link) {
  if (n < 3) throw DomainError("stability verdict needs n >= 3");
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw DomainError("stability verdict needs kappa in (0, 1]");
  if (!(B2_link >= 0.0)) throw DomainError("|B|^2 of the link must be >= 0");
  StabilityVerdict v;
  v.margin = stability_margin(n, kappa, B2_link);
  v.stable = v.margin >= -1e-12;
  v.threshold_kappa = 2.0 * std::sqrt(static_cast<double>(n - 1)) / n;
  return v;
}

double threshold_by_bisection(int n, double tol) {
  if (n < 3) throw DomainError("threshold needs n >= 3");
  double lo = 1e-3, hi = 1.0;
  if (stability_margin(n, lo) >= 0.0 || stability_margin(n, hi) < 0.0)
    throw SolverFailure("stability margin does not change sign on (0, 1]");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (stability_margin(n, mid) >= 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

RadialMode radial_eigenvalue(int n, double epsilon, int k) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  if (k < 1) throw DomainError("mode index k must be >= 1");
  const double L = std::log(epsilon);
  const double w = k * std::numbers::pi / L;
  const double a = 0.5 * (2 - n);
  RadialMode m;
  m.value = 0.25 * (n - 2) * (n - 2) + w * w;
  m.eigenfunction = [a, w](double rho) {
    return std::pow(rho, a) * std::sin(w * std::log(rho));
  };
  m.derivative = [a, w](double rho) {
    const double s = std::log(rho);
    return std::pow(rho, a - 1.0) * (a * std::sin(w * s) + w * std::cos(w * s));
  };
  return m;
}

DiscreteMode radial_eigenvalue_fd(int n, double epsilon, int k,
                                  int grid_points) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  if (grid_points < 64) throw DomainError("radial_eigenvalue_fd needs >= 64 grid points");
  const int interior = grid_points - 2;
  if (k < 1 || k > interior) throw DomainError("mode index out of range");
  const double L = -std::log(epsilon);
  const double h = L / (grid_points - 1);
  const double c = n - 2;
  // -(phi'' + c phi') ~ lower * phi_{i-1} + diag * phi_i + upper * phi_{i+1}
  const double upper = -1.0 / (h * h) - 0.5 * c / h;
  const double lower = -1.0 / (h * h) + 0.5 * c / h;
  if (!(upper * lower > 0.0))
    throw SolverFailure("grid too coarse to symmetrise the radial operator");

  num::Tridiagonal a;
  a.diag.assign(interior, 2.0 / (h * h));
  a.off.assign(interior - 1, -std::sqrt(upper * lower));
  DiscreteMode out;
  out.value = num::tridiagonal_eigenvalue(a, k);

  const std::vector<double> psi = num::tridiagonal_eigenvector(a, out.value);
  // phi = D psi with D_{i+1} / D_i = sqrt(lower / upper).
  const double log_ratio = 0.5 * std::log(lower / upper);
  out.rho.resize(grid_points);
  out.vector.assign(grid_points, 0.0);
  double peak = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double s = -L + i * h;
    out.rho[i] = std::exp(s);
    if (i == 0 || i == grid_points - 1) continue;
    out.vector[i] = psi[i - 1] * std::exp(i * log_ratio);
    peak = std::max(peak, std::abs(out.vector[i]));
  }
  double sign = 0.0;
  for (double& v : out.vector) {
    v /= peak;
    if (std::abs(v) < 1e-10) continue;
    const double sv = v > 0.0 ? 1.0 : -1.0;
    if (sign != 0.0 && sv != sign) ++out.sign_changes;
    sign = sv;
  }
  return out;
}

IndexFormValue index_form(const ConeStabilityProblem& problem,
                          const TestFunction& f, int panels) {
  validate(problem);
  if (panels < 2 || panels % 2 != 0)
    throw DomainError("index_form needs an even number of panels");
  const int n = problem.n;
  const double eps = problem.epsilon;
  const double s0 = std::log(eps);
  const double h = -s0 / panels;

  double peak = 0.0;
  for (int i = 0; i <= panels; ++i)
    peak = std::max(peak, std::abs(f.phi(std::exp(s0 + i * h))));
  const double tol = 1e-10 * std::max(peak, 1e-300);
  if (std::abs(f.phi(eps)) > tol || std::abs(f.phi(1.0)) > tol)
    throw DomainError("index_form: test function must vanish at rho = epsilon and rho = 1");

  const double c = index_potential(problem);
  IndexFormValue out;
  for (int i = 0; i <= panels; ++i) {
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double rho = std::exp(s0 + i * h);
    const double phi = f.phi(rho);
    const double dphi = f.d_phi(rho);
    // integrand in s: (...) rho^{n-3} * rho
    const double weight = std::pow(rho, n - 2);
    double q;
    if (f.dd_phi) {
      const double ddphi = (*f.dd_phi)(rho);
      q = c * phi * phi - (n - 1) * rho * phi * dphi - rho * rho * phi * ddphi;
    } else {
      q = c * phi * phi + rho * rho * dphi * dphi;
    }
    out.value += w * q * weight;
    out.norm2 += w * phi * phi * weight;
  }
  out.value *= h / 3.0;
  out.norm2 *= h / 3.0;
  return out;
}

double rayleigh_min(const ConeStabilityProblem& problem, int basis_size) {
  validate(problem);
  if (basis_size < 8) throw DomainError("rayleigh_min needs basis_size >= 8");
  const int n = problem.n;
  const double c = index_potential(problem);
  const double s0 = std::log(problem.epsilon);
  const int m = basis_size;  // interior nodes
  const double h = -s0 / (m + 1);

  // In s = log rho: I = int e^{(n-2)s} (phi_s^2 + c phi^2) ds and
  // ||phi||^2 = int e^{(n-2)s} phi^2 ds. Hat j lives on [s_{j-1}, s_{j+1}].
  num::Tridiagonal A, B;
  A.diag.assign(m, 0.0);
  B.diag.assign(m, 0.0);
  A.off.assign(m - 1, 0.0);
  B.off.assign(m - 1, 0.0);
  auto node_scale = [&](int j) {  // interior node j = 1..m
    return std::exp(-0.5 * (n - 2) * (s0 + j * h));
  };
  for (int e = 0; e <= m; ++e) {
    // element [s_e, s_{e+1}], local hats: left = node e, right = node e+1
    const double a = s0 + e * h;
    double kk = 0.0, mll = 0.0, mlr = 0.0, mrr = 0.0;
    for (int q = 0; q < num::Gauss5::size; ++q) {
      const double t = 0.5 * (num::Gauss5::nodes[q] + 1.0);
      const double wq = 0.5 * h * num::Gauss5::weights[q];
      const double rw = std::exp((n - 2) * (a + t * h));
      kk += wq * rw;
      mll += wq * rw * (1.0 - t) * (1.0 - t);
      mlr += wq * rw * (1.0 - t) * t;
      mrr += wq * rw * t * t;
    }
    kk /= h * h;
    const int l = e, r = e + 1;  // node indices; 0 and m+1 are Dirichlet
    auto add = [&](int i, int j, double kv, double mv) {
      if (i < 1 || i > m || j < 1 || j > m) return;
      const double sc = node_scale(i) * node_scale(j);
      if (i == j) {
        A.diag[i - 1] += sc * (kv + c * mv);
        B.diag[i - 1] += sc * mv;
      } else {
        const int lo = std::min(i, j);
        A.off[lo - 1] += sc * (kv + c * mv);
        B.off[lo - 1] += sc * mv;
      }
    };
    add(l, l, kk, mll);
    add(r, r, kk, mrr);
    add(l, r, -kk, mlr);
  }
  if (!num::positive_definite(B))
    throw SolverFailure("rayleigh_min: mass matrix is not positive definite");
  return num::pencil_eigenvalue(A, B, 1);
}

}  // namespace mcs

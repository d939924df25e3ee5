#pragma once

// Second variation of minimal cones C Y over links Y in the sphere of radius
// kappa, restricted to the constant link mode. n is the hypersurface
// dimension.

#include <functional>
#include <optional>
#include <vector>

namespace mcs {

struct ConeStabilityProblem {
  int n = 7;
  double kappa = 1.0;
  double B2_link = 0.0;  // |B|^2 of the link, constant
  double epsilon = 1e-4; // inner radius of the annulus [epsilon, 1]
};
// Throws DomainError unless n >= 2, kappa in (0, 1], B2_link >= 0 and
// epsilon in (0, 1).
void validate(const ConeStabilityProblem& problem);

// -B2 - (n-1)/kappa^2 + (n-1): the potential of the index form.
double index_potential(const ConeStabilityProblem& problem);

// -B2 - (n-1)/kappa^2 + (n-1) + (n-2)^2/4.
double stability_margin(int n, double kappa, double B2_link = 0.0);

struct StabilityVerdict {
  bool stable = false;
  double margin = 0.0;
  double threshold_kappa = 0.0;  // 2 sqrt(n-1)/n
};
StabilityVerdict stability_verdict(int n, double kappa, double B2_link = 0.0);

// Root of the margin in kappa (B2_link = 0) by bisection on (0, 1].
double threshold_by_bisection(int n, double tol = 1e-15);

// --- radial spectrum ----------------------------------------------------------

struct RadialMode {
  double value = 0.0;
  std::function<double(double)> eigenfunction;  // rho -> phi
  std::function<double(double)> derivative;     // rho -> phi'
};
// (n-2)^2/4 + (k pi / log eps)^2 with eigenfunction
// rho^{(2-n)/2} sin(k pi log rho / log eps).
RadialMode radial_eigenvalue(int n, double epsilon, int k);

struct DiscreteMode {
  double value = 0.0;
  std::vector<double> rho;     // grid nodes including both ends
  std::vector<double> vector;  // eigenfunction, zero at both ends, max |.| = 1
  int sign_changes = 0;
};
// k-th Dirichlet eigenvalue of -(rho^2 d^2 + (n-1) rho d) on [eps, 1] from
// central differences in s = log rho, symmetrised by a diagonal similarity.
// grid_points counts both end nodes.
DiscreteMode radial_eigenvalue_fd(int n, double epsilon, int k,
                                  int grid_points);

// --- index form ---------------------------------------------------------------

struct TestFunction {
  std::function<double(double)> phi;
  std::function<double(double)> d_phi;
  std::optional<std::function<double(double)>> dd_phi;
};

struct IndexFormValue {
  double value = 0.0;  // I(phi, phi)
  double norm2 = 0.0;  // int phi^2 rho^{n-3}
};
// Composite Simpson in s = log rho. Without phi'' the rho^2 phi phi'' term is
// integrated by parts. Throws DomainError when phi(eps) or phi(1) is not 0.
IndexFormValue index_form(const ConeStabilityProblem& problem,
                          const TestFunction& phi, int panels = 4096);

// Minimal generalised Rayleigh quotient I / ||.||^2 over basis_size hat
// functions uniform in s = log rho. Throws SolverFailure when the mass
// matrix is not positive definite.
double rayleigh_min(const ConeStabilityProblem& problem, int basis_size);

}  // namespace mcs

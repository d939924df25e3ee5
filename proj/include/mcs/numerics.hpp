#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mcs::num {

using RealFn = std::function<double(double)>;

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  std::size_t max_panels = std::size_t{1} << 16;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t panels = 0;
  bool converged = false;
};

// Globally adaptive Gauss-Kronrod (7/15) on [a, b]. Never throws; callers
// decide what an unconverged result means.
QuadratureResult integrate(const RealFn& f, double a, double b,
                           const QuadratureOptions& opts = {});

// Same, but throws QuadratureDivergence when the panel cap is hit or the
// value is not finite.
double integrate_checked(const RealFn& f, double a, double b,
                         const QuadratureOptions& opts = {});

// Fixed 20-point Gauss-Legendre rule on [a, b].
double gauss_legendre20(const RealFn& f, double a, double b);

struct Gauss5 {
  static constexpr int size = 5;
  static const double nodes[5];    // on [-1, 1]
  static const double weights[5];
};

// Safeguarded Newton on a bracket [lo, hi] with f(lo), f(hi) of opposite
// sign. fdf returns {f, f'}. Converges when the Newton/bisection step is
// below tol. Throws InversionFailure if the bracket is invalid.
struct ValueAndSlope {
  double f;
  double df;
};
double safeguarded_newton(const std::function<ValueAndSlope(double)>& fdf,
                          double lo, double hi, double tol,
                          int max_iter = 200);

// Cumulative integral of a strictly positive integrand over a fixed node
// set, with pointwise evaluation and inversion.
class MonotoneIntegral {
 public:
  MonotoneIntegral(RealFn integrand, std::vector<double> nodes,
                   double cell_tol = 1e-13);

  double lower() const { return nodes_.front(); }
  double upper() const { return nodes_.back(); }
  double total() const { return cumulative_.back(); }

  // Integral from lower() to x, x inside [lower(), upper()].
  double value(double x) const;
  // x with value(x) == v, v inside [0, total()]; tol is absolute in x.
  double inverse(double v, double tol = 1e-12) const;
  double integrand(double x) const { return f_(x); }

 private:
  std::size_t cell_of_x(double x) const;
  RealFn f_;
  std::vector<double> nodes_;
  std::vector<double> cumulative_;
};

// Natural cubic spline through strictly increasing abscissae.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y);
  struct Sample {
    double value, d1, d2;
  };
  Sample operator()(double x) const;
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, m_;  // m_ = second derivatives at nodes
};

// Richardson extrapolation of a_k = f(h0 * 2^k) -> limit as k -> inf, with
// the error expanded in powers of 2^-k (i.e. of 1/radius on a doubling
// ladder).
struct LadderLimit {
  double value = 0.0;
  bool converged = false;
  std::vector<double> samples;      // raw a_k
  std::vector<double> extrapolants; // diagonal of the Richardson table
};
LadderLimit richardson_ladder(std::span<const double> samples,
                              double rel_tol = 1e-6);

// Symmetric tridiagonal helpers. Matrices are given as (diag, off) with
// off[i] coupling rows i and i+1.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;
  std::size_t size() const { return diag.size(); }
};

// Number of eigenvalues of the pencil (A, B) strictly below mu, by
// Sylvester inertia of A - mu B. B must be positive definite.
std::size_t count_below(const Tridiagonal& a, const Tridiagonal& b,
                        double mu);
std::size_t count_below(const Tridiagonal& a, double mu);

// True iff every LDL^T pivot of m is positive.
bool positive_definite(const Tridiagonal& m);

// k-th (1-based) eigenvalue of the pencil by inertia bisection.
double pencil_eigenvalue(const Tridiagonal& a, const Tridiagonal& b,
                         std::size_t k, double rel_tol = 1e-14);
double tridiagonal_eigenvalue(const Tridiagonal& a, std::size_t k,
                              double rel_tol = 1e-14);

// Eigenvector for a computed eigenvalue by inverse iteration.
std::vector<double> tridiagonal_eigenvector(const Tridiagonal& a,
                                            double eigenvalue);

// Solves m x = rhs (Thomas algorithm, no pivoting).
std::vector<double> solve_tridiagonal(const Tridiagonal& m,
                                      std::span<const double> rhs);

std::vector<double> linspace(double a, double b, std::size_t count);
std::vector<double> logspace(double a, double b, std::size_t count);

}  // namespace mcs::num

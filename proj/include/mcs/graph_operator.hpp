#pragma once

// The minimal-graph operator
//   L F = (1 + |DF|^2)^{3/2} div(DF / sqrt(1 + |DF|^2))
// on (R^d, exp(Phi(|x|)) |dx|^2), d = n + 1, evaluated three ways, plus the
// barrier C theta r^p and its sign check.

#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcs/radial_metric.hpp"

namespace mcs {

// Value, gradient and row-major Hessian of a field on R^d.
struct CartesianJet {
  double value = 0.0;
  std::vector<double> grad;
  std::vector<double> hess;
};

class CartesianField {
 public:
  virtual ~CartesianField() = default;
  virtual int dim() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  // Central differences (step 1e-5 max(1, |x|)) unless overridden.
  virtual CartesianJet jet(std::span<const double> x) const;
  virtual std::string label() const { return "field"; }
};

// F and its partials in theta = x_d / r and r = |x|.
struct PolarJet {
  double F = 0.0;
  double F_t = 0.0;
  double F_r = 0.0;
  double F_tt = 0.0;
  double F_rr = 0.0;
  double F_rt = 0.0;
};

class ScalarFieldPolar {
 public:
  virtual ~ScalarFieldPolar() = default;
  virtual double value(double theta, double r) const = 0;
  // Central differences with step 1e-5 max(1, r) unless overridden.
  virtual PolarJet jet(double theta, double r) const;
  virtual std::string label() const { return "polar field"; }
};

// F(theta(x), r(x)) as a field on R^d, with the chain rule for its jet.
class PolarAsCartesian final : public CartesianField {
 public:
  PolarAsCartesian(const ScalarFieldPolar& field, int dim);
  int dim() const override { return dim_; }
  double value(std::span<const double> x) const override;
  CartesianJet jet(std::span<const double> x) const override;
  std::string label() const override { return field_.label(); }

 private:
  const ScalarFieldPolar& field_;
  int dim_;
};

// Mean curvature div(Du / sqrt(1 + |Du|^2)) of the graph of u over
// (R^d, exp(Phi)|dx|^2), d = metric.n_ambient(), from the Christoffel
// symbols of the conformal metric.
double mean_curvature_graph(const ConformalProfile& metric,
                            const CartesianField& u,
                            std::span<const double> x);

// Closed form in flat derivatives:
//   exp(-2Phi)(|dF|^2 (Lap F + (n/2)Phi' F_i x_i/r) - F_ij F_i F_j)
//     + exp(-Phi)(Lap F + ((n-1)/2) Phi' F_i x_i/r).
double L_conformal(const ConformalProfile& metric, const CartesianField& F,
                   std::span<const double> x);
double L_conformal(const ConformalProfile& metric, const CartesianJet& jet,
                   std::span<const double> x);

// Polar form in (theta, r); the (1 - theta^2) factors are never divided by.
double L_polar(const ConformalProfile& metric, const PolarJet& j,
               double theta, double r);
double L_polar(const ConformalProfile& metric, const ScalarFieldPolar& F,
               double theta, double r);

// Divergence form from values of F only: central differences of the flux
// sqrt(det sigma) sigma^{ij} F_i / v, each F_i itself a central difference.
double L_fd_oracle(const ConformalProfile& metric, const CartesianField& F,
                   std::span<const double> x, double h);

// --- barrier ----------------------------------------------------------------

// 2 sqrt(n-1) / n.
double kappa_star(int n);

// p = n kappa / 2 - sqrt(n^2 kappa^2 / 4 - (n - 1)). Throws
// ThresholdViolation below kappa_star(n), DomainError for kappa > 1 or n < 3.
double barrier_exponent(int n, double kappa);

struct BarrierSpec {
  double C = 1.0;
  double p = 1.0;
  int n = 3;
  double kappa = 1.0;
};
BarrierSpec make_barrier_spec(int n, double kappa, double C = 1.0);

// C theta r^p, or with alternate = true the field C x_d w^{p-1} =
// C theta r^p (1 - theta^2)^{(p-1)/2}, w the distance to the x_d axis.
class BarrierField final : public ScalarFieldPolar {
 public:
  BarrierField(const BarrierSpec& spec, bool alternate = false);
  double value(double theta, double r) const override;
  PolarJet jet(double theta, double r) const override;
  std::string label() const override;

 private:
  BarrierSpec spec_;
  bool alternate_;
};

struct BarrierGrid {
  std::vector<double> theta;
  std::vector<double> r;
};
// 201 theta nodes on [-1, 1] x 200 log-spaced radii on [1e-2, 1e2].
BarrierGrid default_barrier_grid(std::size_t n_theta = 201,
                                 std::size_t n_r = 200, double r_min = 1e-2,
                                 double r_max = 1e2);

struct BarrierNode {
  double theta = 0.0;
  double r = 0.0;
  double value = 0.0;  // theta * L F
  double bound = 0.0;  // C exp(-Phi) (p^2 - 1) theta^2 r^{p-2}
  double scale = 0.0;  // local magnitude used for the tolerance
};

struct BarrierReport {
  std::vector<BarrierNode> rows;
  double min_relative = 0.0;    // min value / scale
  std::size_t argmin = 0;       // index into rows
  double worst_bound_gap = 0.0; // min (value - bound) / scale
  std::size_t worst_bound_node = 0;
  bool sign_ok = false;
  bool bound_ok = false;  // always true for the alternate barrier
  bool alternate = false;
};

struct BarrierOptions {
  double tolerance = 1e-8;
  bool alternate = false;
};

// Checks Phi'(r) >= -2(1-kappa)/r on the radii first (PreconditionViolation
// naming r otherwise), then evaluates theta * L F on every node.
BarrierReport barrier_check(const ConformalProfile& metric,
                            const BarrierSpec& spec, const BarrierGrid& grid,
                            const BarrierOptions& opts = {});
BarrierReport barrier_check_serial(const ConformalProfile& metric,
                                   const BarrierSpec& spec,
                                   const BarrierGrid& grid,
                                   const BarrierOptions& opts = {});

// --- random test fields -------------------------------------------------------

// F = sum_k a_k theta^{i_k} r^{e_k} + b sin(w theta) r^{e}, with analytic jet.
class PolarTestField final : public ScalarFieldPolar {
 public:
  struct Term {
    double a;
    int theta_power;
    double r_power;
  };
  PolarTestField(std::vector<Term> terms, double b, double w, double e);
  double value(double theta, double r) const override;
  PolarJet jet(double theta, double r) const override;
  std::string label() const override;

 private:
  std::vector<Term> terms_;
  double b_, w_, e_;
};

PolarTestField random_polar_field(std::mt19937_64& rng);

}  // namespace mcs

#pragma once

// Rotationally symmetric model metrics.
//
// A warped profile describes ds^2 = drho^2 + lambda(rho)^2 dtheta^2 on an
// (n+1)-manifold whose links are round n-spheres. A conformal profile
// describes the same kind of space as ds^2 = exp(Phi(r)) |dx|^2 on R^{n+1}.
// Throughout, "n" is the link (= hypersurface) dimension and
// n_ambient = n + 1.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcs/numerics.hpp"

namespace mcs {

struct WarpSample {
  double lambda = 0.0;
  double d_lambda = 0.0;
  double dd_lambda = 0.0;
  // 1 - lambda'^2, supplied separately so profiles can avoid cancellation
  // near a regular pole.
  double one_minus_slope_sq = 0.0;
};

// Exact linear end: lambda(rho) = slope * (rho - rho0) + lambda0 for
// rho >= rho0.
struct LinearTail {
  double rho0;
  double lambda0;
  double slope;
};

// Profile parametrised by its own warping value s = lambda, with
// rho(s) = int_0^s arc_rate. Lets the conformal conversion integrate in s
// without inverting rho -> lambda first.
class ArealParametrization {
 public:
  virtual ~ArealParametrization() = default;
  // d rho / d lambda at lambda = s (>= 1).
  virtual double arc_rate(double s) const = 0;
  virtual double d_arc_rate(double s) const = 0;
  // arc_rate^2 - 1 without cancellation near a regular pole.
  virtual double arc_rate_sq_minus_one(double s) const {
    const double a = arc_rate(s);
    return a * a - 1.0;
  }
  virtual double rho_of_s(double s) const = 0;
  // Largest s the parametrisation covers before the linear tail (may be
  // +inf when there is no tail).
  virtual double s_end() const = 0;
};

class WarpedProfile {
 public:
  virtual ~WarpedProfile() = default;

  int n_ambient() const { return n_ambient_; }
  int link_dim() const { return n_ambient_ - 1; }
  bool pole_regular() const { return pole_regular_; }
  double domain_min() const { return domain_min_; }

  // Derivatives with respect to rho; rho must exceed domain_min() (or equal
  // it for pole-regular profiles).
  virtual WarpSample at(double rho) const = 0;
  virtual std::string describe() const = 0;

  virtual std::optional<double> asymptotic_slope() const { return {}; }
  virtual std::optional<LinearTail> linear_tail() const { return {}; }
  virtual const ArealParametrization* areal() const { return nullptr; }
  // Radii where the profile changes branch; quadratures split there.
  virtual std::vector<double> breakpoints() const { return {}; }
  // Largest rho the profile can evaluate.
  virtual double domain_max() const;

 protected:
  WarpedProfile(int n_ambient, bool pole_regular, double domain_min);

 private:
  int n_ambient_;
  bool pole_regular_;
  double domain_min_;
};

using WarpedProfilePtr = std::shared_ptr<const WarpedProfile>;

struct ConformalSample {
  double phi = 0.0;
  double d_phi = 0.0;
  double dd_phi = 0.0;
};

class ConformalProfile {
 public:
  virtual ~ConformalProfile() = default;
  int n_ambient() const { return n_ambient_; }
  int link_dim() const { return n_ambient_ - 1; }
  std::optional<double> kappa_hint() const { return kappa_hint_; }
  // True when Phi or Phi' blows up at r = 0 (cone vertex).
  virtual bool singular_at_origin() const = 0;
  virtual ConformalSample at(double r) const = 0;
  virtual std::string describe() const = 0;

 protected:
  ConformalProfile(int n_ambient, std::optional<double> kappa_hint);

 private:
  int n_ambient_;
  std::optional<double> kappa_hint_;
};

using ConformalProfilePtr = std::shared_ptr<const ConformalProfile>;

// --- concrete profiles -----------------------------------------------------

class ConeProfile final : public WarpedProfile {
 public:
  ConeProfile(double kappa, int n_ambient);
  WarpSample at(double rho) const override;
  std::string describe() const override;
  std::optional<double> asymptotic_slope() const override { return kappa_; }
  double kappa() const { return kappa_; }

 private:
  double kappa_;
};

// Radial profile Lambda(r) of a convex rotationally symmetric graph over
// R^{n+1}. Its induced metric is a warped profile with lambda = r.
class ConvexRadialGraph {
 public:
  virtual ~ConvexRadialGraph() = default;
  virtual double value(double r) const = 0;
  virtual double slope(double r) const = 0;    // Lambda'(r)
  virtual double d_slope(double r) const = 0;  // Lambda''(r)
  // Radius beyond which Lambda is exactly linear; +inf if never.
  virtual double cone_start() const = 0;
  virtual std::string name() const = 0;
};

// The smooth convex cap over the unit ball glued to the cone of slope
// sqrt(1 - kappa^2)/kappa, built from xi(s) = s (exp(1/(1-s^2)) - e).
class XiCap final : public ConvexRadialGraph {
 public:
  explicit XiCap(double kappa);
  double value(double r) const override;
  double slope(double r) const override;
  double d_slope(double r) const override;
  double cone_start() const override { return 1.0; }
  std::string name() const override { return "xi-cap"; }
  double kappa() const { return kappa_; }

  static double xi(double s);

 private:
  double kappa_;
  double outer_slope_;  // sqrt(1 - kappa^2) / kappa
};

// Lambda~(r) = (2 sqrt(1-kappa^2) / (pi kappa)) int_0^r arctan t dt.
class ArctanGraph final : public ConvexRadialGraph {
 public:
  explicit ArctanGraph(double kappa);
  double value(double r) const override;
  double slope(double r) const override;
  double d_slope(double r) const override;
  double cone_start() const override;
  std::string name() const override { return "arctan"; }

 private:
  double kappa_;
  double amplitude_;
};

// Induced metric of the graph of a ConvexRadialGraph: lambda^{-1}(s) =
// int_0^s sqrt(1 + Lambda'(t)^2) dt, continued linearly with slope kappa
// past cone_start().
class GraphWarpedProfile final : public WarpedProfile,
                                 public ArealParametrization {
 public:
  GraphWarpedProfile(std::shared_ptr<const ConvexRadialGraph> graph,
                     double kappa, int n_ambient, std::string kind);

  WarpSample at(double rho) const override;
  std::string describe() const override;
  std::optional<double> asymptotic_slope() const override { return kappa_; }
  std::optional<LinearTail> linear_tail() const override;
  const ArealParametrization* areal() const override { return this; }
  std::vector<double> breakpoints() const override;
  double domain_max() const override;

  double arc_rate(double s) const override;
  double d_arc_rate(double s) const override;
  double arc_rate_sq_minus_one(double s) const override;
  double rho_of_s(double s) const override;
  double s_end() const override { return s_end_; }

  double kappa() const { return kappa_; }
  // rho at which the linear tail starts (+inf without a tail).
  double rho0() const { return rho0_; }
  // lambda (= Euclidean radius s) for a given rho, and its inverse.
  double lambda_of_rho(double rho) const;
  double rho_of_lambda(double s) const;
  const ConvexRadialGraph& graph() const { return *graph_; }

 private:
  WarpSample sample_at_s(double s) const;

  std::shared_ptr<const ConvexRadialGraph> graph_;
  double kappa_;
  std::string kind_;
  double s_end_;
  double s_table_max_;
  double rho0_;
  std::unique_ptr<num::MonotoneIntegral> arc_;
};

// (rho, lambda) samples with a natural cubic spline through them.
class TableProfile final : public WarpedProfile {
 public:
  TableProfile(std::vector<double> rho, std::vector<double> lambda,
               int n_ambient, std::optional<double> kappa = {});
  static std::shared_ptr<const TableProfile> from_file(
      const std::string& path, int n_ambient, std::optional<double> kappa = {});

  WarpSample at(double rho) const override;
  std::string describe() const override;
  std::optional<double> asymptotic_slope() const override { return kappa_; }
  double domain_max() const override { return spline_.back(); }

 private:
  num::CubicSpline spline_;
  std::optional<double> kappa_;
  std::size_t count_;
};

// lambda given only as a function; derivatives by central differences with
// step max(1e-5, 1e-5 rho).
class FunctionProfile final : public WarpedProfile {
 public:
  FunctionProfile(std::function<double(double)> lambda, int n_ambient,
                  double domain_min, bool pole_regular,
                  std::optional<double> kappa = {}, std::string label = "function");
  WarpSample at(double rho) const override;
  std::string describe() const override { return label_; }
  std::optional<double> asymptotic_slope() const override { return kappa_; }

 private:
  std::function<double(double)> lambda_;
  std::optional<double> kappa_;
  std::string label_;
};

// Phi(r) = 2 log kappa - 2 (1 - kappa) log r.
class ConeConformal final : public ConformalProfile {
 public:
  ConeConformal(double kappa, int n_ambient);
  bool singular_at_origin() const override { return kappa_ < 1.0; }
  ConformalSample at(double r) const override;
  std::string describe() const override;
  double kappa() const { return kappa_; }

 private:
  double kappa_;
};

// Conformal exponent supplied by closures (tests, user experiments).
class FunctionConformal final : public ConformalProfile {
 public:
  FunctionConformal(std::function<ConformalSample(double)> phi, int n_ambient,
                    bool singular, std::optional<double> kappa = {},
                    std::string label = "function");
  bool singular_at_origin() const override { return singular_; }
  ConformalSample at(double r) const override { return phi_(r); }
  std::string describe() const override { return label_; }

 private:
  std::function<ConformalSample(double)> phi_;
  bool singular_;
  std::string label_;
};

struct ConversionOptions {
  // Asymptotic cone slope; taken from the profile when absent.
  std::optional<double> kappa;
  // Reference radius used to fix the scale of r when the profile has no
  // linear tail.
  double rho_ref = 1.0;
  // Tolerance on the sampled bound -2(1-kappa)/r <= Phi' <= 0 (scaled by
  // 1/r).
  double bound_tol = 1e-6;
};

// exp(Phi(r)) |dx|^2 isometric to a warped profile, with r -> rho the
// solution of rho' = lambda(rho) / r (matched to rho = r^kappa - ... on the
// linear tail).
class WarpedConformal final : public ConformalProfile {
 public:
  WarpedConformal(WarpedProfilePtr profile, const ConversionOptions& opts);

  bool singular_at_origin() const override;
  ConformalSample at(double r) const override;
  std::string describe() const override;

  // psi~(r): geodesic radius for conformal radius r.
  double rho_of_r(double r) const;
  // Conformal radius where the linear tail begins (+inf without a tail).
  double r_match() const { return r_match_; }
  const WarpedProfile& warped() const { return *profile_; }

 private:
  // Parameter z (log s or log rho) for a given log r.
  double z_of_log_r(double log_r) const;
  double log_r_of_z(double z) const;
  WarpSample warp_at_z(double z) const;
  double integrand(double z) const;

  WarpedProfilePtr profile_;
  const ArealParametrization* areal_ = nullptr;
  double kappa_;
  std::optional<LinearTail> tail_;
  double r_match_;
  double log_r_ref_;  // log r at z_ref
  double z_ref_;
  std::unique_ptr<num::MonotoneIntegral> table_;
  double z_lo_, z_hi_;
};

struct CurvatureReport {
  double rho = 0.0;
  double K_radial = 0.0;
  double K_spherical = 0.0;
  double Ric_radial = 0.0;
  double Ric_spherical = 0.0;
};

// --- operations -------------------------------------------------------------

std::shared_ptr<const ConeProfile> cone_profile(double kappa, int n_ambient);
std::shared_ptr<const ConeConformal> cone_conformal(double kappa, int n_ambient);

// Lambda(r) of the xi-cap.
double cap_function(double r, double kappa);

std::shared_ptr<const GraphWarpedProfile> capped_cone_profile(
    double kappa, int n_ambient,
    std::shared_ptr<const ConvexRadialGraph> cap = nullptr);

std::shared_ptr<const GraphWarpedProfile> positive_curvature_profile(
    double kappa, int n_ambient);

std::shared_ptr<const WarpedConformal> warped_to_conformal(
    WarpedProfilePtr profile, const ConversionOptions& opts = {});

CurvatureReport curvature(const WarpedProfile& profile, double rho);

// Parallel and serial evaluation of curvature over many radii.
std::vector<CurvatureReport> curvature_sweep(const WarpedProfile& profile,
                                             std::span<const double> radii);
std::vector<CurvatureReport> curvature_sweep_serial(
    const WarpedProfile& profile, std::span<const double> radii);

// Measure of the unit m-sphere in R^{m+1}.
double unit_sphere_measure(int m);

// Vol(B_r) / r^{n+1} with Vol(B_r) = omega_n int_0^r lambda^n.
double volume_growth(const WarpedProfile& profile, double r_max);

// Volume-growth limit on the ladder rho = 2^k, Richardson extrapolated.
num::LadderLimit volume_growth_limit(const WarpedProfile& profile,
                                     int k_max = 20);

struct ConditionReport {
  bool C1 = false;           // non-negative Ricci on the grid
  double min_ricci = 0.0;
  double C2 = 0.0;           // volume growth ratio at the largest radius
  double C3 = 0.0;           // max rho^2 |K| over the grid
  bool C3_finite = false;
};
ConditionReport condition_check(const WarpedProfile& profile,
                                std::span<const double> grid,
                                double tolerance = 1e-10);

struct KappaPrime {
  double value = 0.0;
  bool converged = false;
  std::vector<double> radii;
  std::vector<double> samples;
  std::vector<double> extrapolants;
};
// lim inf of rho^2 Ric(e, e) for unit e orthogonal to the radius, from the
// ladder rho = 2^k, k <= k_max. converged == false (with the sample
// sequence kept) when successive extrapolants never agree to 1e-6.
KappaPrime nonradial_ricci_constant(const WarpedProfile& profile,
                                    int k_max = 20);

enum class NonexistenceVerdict { NoStableHypersurface, Inconclusive };
std::string to_string(NonexistenceVerdict v);

// NoStableHypersurface iff kappa' > (n-2)^2/4 by more than rel_tol times
// max(1, (n-2)^2/4). n is the hypersurface dimension.
NonexistenceVerdict nonexistence_verdict(double kappa_prime, int n,
                                         double rel_tol = 1e-9);

}  // namespace mcs

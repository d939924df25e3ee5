#include "mcs/radial_metric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "mcs/errors.hpp"

namespace mcs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_open_kappa(double kappa, const char* what) {
  if (!(kappa > 0.0 && kappa < 1.0)) {
    std::ostringstream msg;
    msg << what << ": kappa must lie in (0, 1), got " << kappa;
    throw DomainError(msg.str());
  }
}

void require_kappa(double kappa, const char* what) {
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    std::ostringstream msg;
    msg << what << ": kappa must lie in (0, 1], got " << kappa;
    throw DomainError(msg.str());
  }
}

void require_dimension(int n_ambient) {
  if (n_ambient < 3) {
    std::ostringstream msg;
    msg << "ambient dimension must be >= 3, got " << n_ambient;
    throw DomainError(msg.str());
  }
}

}  // namespace

WarpedProfile::WarpedProfile(int n_ambient, bool pole_regular,
                             double domain_min)
    : n_ambient_(n_ambient),
      pole_regular_(pole_regular),
      domain_min_(domain_min) {
  require_dimension(n_ambient);
}

double WarpedProfile::domain_max() const { return kInf; }

ConformalProfile::ConformalProfile(int n_ambient,
                                   std::optional<double> kappa_hint)
    : n_ambient_(n_ambient), kappa_hint_(kappa_hint) {
  require_dimension(n_ambient);
}

// --- cone -------------------------------------------------------------------

ConeProfile::ConeProfile(double kappa, int n_ambient)
    : WarpedProfile(n_ambient, kappa == 1.0, 0.0), kappa_(kappa) {
  require_kappa(kappa, "cone_profile");
}

WarpSample ConeProfile::at(double rho) const {
  return {kappa_ * rho, kappa_, 0.0, 1.0 - kappa_ * kappa_};
}

std::string ConeProfile::describe() const {
  std::ostringstream s;
  s << "cone(kappa=" << kappa_ << ", n_ambient=" << n_ambient() << ")";
  return s.str();
}

ConeConformal::ConeConformal(double kappa, int n_ambient)
    : ConformalProfile(n_ambient, kappa), kappa_(kappa) {
  require_kappa(kappa, "cone_conformal");
}

ConformalSample ConeConformal::at(double r) const {
  const double a = 2.0 * (1.0 - kappa_);
  return {2.0 * std::log(kappa_) - a * std::log(r), -a / r, a / (r * r)};
}

std::string ConeConformal::describe() const {
  std::ostringstream s;
  s << "cone-conformal(kappa=" << kappa_ << ", n_ambient=" << n_ambient()
    << ")";
  return s.str();
}

FunctionConformal::FunctionConformal(
    std::function<ConformalSample(double)> phi, int n_ambient, bool singular,
    std::optional<double> kappa, std::string label)
    : ConformalProfile(n_ambient, kappa),
      phi_(std::move(phi)),
      singular_(singular),
      label_(std::move(label)) {}

// --- caps -------------------------------------------------------------------

XiCap::XiCap(double kappa)
    : kappa_(kappa), outer_slope_(std::sqrt(1.0 - kappa * kappa) / kappa) {
  require_open_kappa(kappa, "cap");
}

double XiCap::xi(double s) {
  if (s >= 1.0) return kInf;
  return s * (std::exp(1.0 / (1.0 - s * s)) - std::numbers::e);
}

double XiCap::slope(double r) const {
  if (r >= 1.0) return outer_slope_;
  const double t = 1.0 / (1.0 - r * r);
  if (t > 700.0) return outer_slope_;
  return outer_slope_ * (2.0 / std::numbers::pi) * std::atan(xi(r));
}

double XiCap::d_slope(double r) const {
  if (r >= 1.0) return 0.0;
  const double t = 1.0 / (1.0 - r * r);
  if (t > 350.0) return 0.0;  // below e^-300 relative to the outer slope
  const double big = std::exp(t);
  const double x = r * (big - std::numbers::e);
  const double dx = (big - std::numbers::e) + 2.0 * r * r * big * t * t;
  return outer_slope_ * (2.0 / std::numbers::pi) * dx / (1.0 + x * x);
}

double XiCap::value(double r) const {
  if (r < 0.0) throw DomainError("cap_function: r must be >= 0");
  if (r >= 1.0) return outer_slope_ * r;
  const auto arctan_xi = [](double s) {
    const double t = 1.0 / (1.0 - s * s);
    if (t > 700.0) return std::numbers::pi / 2.0;
    return std::atan(xi(s));
  };
  num::QuadratureOptions opts;
  opts.abs_tol = 1e-13;
  const double tail = num::integrate_checked(arctan_xi, r, 1.0, opts);
  return outer_slope_ * (1.0 - (2.0 / std::numbers::pi) * tail);
}

ArctanGraph::ArctanGraph(double kappa)
    : kappa_(kappa),
      amplitude_(2.0 * std::sqrt(1.0 - kappa * kappa) /
                 (std::numbers::pi * kappa)) {
  require_open_kappa(kappa, "positive_curvature_profile");
}

double ArctanGraph::value(double r) const {
  return amplitude_ * (r * std::atan(r) - 0.5 * std::log1p(r * r));
}
double ArctanGraph::slope(double r) const { return amplitude_ * std::atan(r); }
double ArctanGraph::d_slope(double r) const {
  return amplitude_ / (1.0 + r * r);
}
double ArctanGraph::cone_start() const { return kInf; }

double cap_function(double r, double kappa) { return XiCap(kappa).value(r); }

// --- graph profiles ---------------------------------------------------------

namespace {

std::vector<double> arc_nodes(double s_end, double s_max) {
  std::vector<double> nodes;
  if (std::isfinite(s_end)) return num::linspace(0.0, s_end, 257);
  nodes = num::linspace(0.0, 1.0, 65);
  double s = 1.0;
  while (s < s_max) {
    s = std::min(s * 1.08, s_max);
    nodes.push_back(s);
  }
  return nodes;
}

}  // namespace

GraphWarpedProfile::GraphWarpedProfile(
    std::shared_ptr<const ConvexRadialGraph> graph, double kappa,
    int n_ambient, std::string kind)
    : WarpedProfile(n_ambient, true, 0.0),
      graph_(std::move(graph)),
      kappa_(kappa),
      kind_(std::move(kind)),
      s_end_(graph_->cone_start()),
      s_table_max_(std::isfinite(s_end_) ? s_end_ : 1e12) {
  require_open_kappa(kappa, kind_.c_str());
  if (std::isfinite(s_end_)) {
    const double outer = std::sqrt(1.0 - kappa * kappa) / kappa;
    if (std::abs(graph_->slope(s_end_) - outer) > 1e-9 * std::max(1.0, outer))
      throw DomainError("cap slope at its rim does not match the cone slope");
  }
  arc_ = std::make_unique<num::MonotoneIntegral>(
      [this](double s) { return arc_rate(s); },
      arc_nodes(s_end_, s_table_max_));
  rho0_ = std::isfinite(s_end_) ? arc_->total() : kInf;
}

double GraphWarpedProfile::arc_rate(double s) const {
  if (s >= s_end_) return 1.0 / kappa_;
  const double g = graph_->slope(s);
  return std::sqrt(1.0 + g * g);
}

double GraphWarpedProfile::d_arc_rate(double s) const {
  if (s >= s_end_) return 0.0;
  const double g = graph_->slope(s);
  return g * graph_->d_slope(s) / std::sqrt(1.0 + g * g);
}

double GraphWarpedProfile::arc_rate_sq_minus_one(double s) const {
  if (s >= s_end_) return 1.0 / (kappa_ * kappa_) - 1.0;
  const double g = graph_->slope(s);
  return g * g;
}

double GraphWarpedProfile::rho_of_s(double s) const { return rho_of_lambda(s); }

std::optional<LinearTail> GraphWarpedProfile::linear_tail() const {
  if (!std::isfinite(s_end_)) return {};
  return LinearTail{rho0_, s_end_, kappa_};
}

std::vector<double> GraphWarpedProfile::breakpoints() const {
  if (std::isfinite(rho0_)) return {rho0_};
  return {};
}

double GraphWarpedProfile::domain_max() const {
  return std::isfinite(rho0_) ? kInf : arc_->total();
}

double GraphWarpedProfile::lambda_of_rho(double rho) const {
  if (rho < 0.0) throw DomainError("rho must be >= 0");
  if (rho >= rho0_) return kappa_ * (rho - rho0_) + s_end_;
  if (rho > arc_->total()) {
    std::ostringstream msg;
    msg << describe() << ": rho = " << rho << " beyond tabulated range "
        << arc_->total();
    throw DomainError(msg.str());
  }
  return arc_->inverse(rho, 1e-12 * std::max(1.0, rho));
}

double GraphWarpedProfile::rho_of_lambda(double s) const {
  if (s < 0.0) throw DomainError("lambda must be >= 0");
  if (s >= s_end_) return rho0_ + (s - s_end_) / kappa_;
  if (s > s_table_max_) throw DomainError("lambda beyond tabulated range");
  return arc_->value(s);
}

WarpSample GraphWarpedProfile::sample_at_s(double s) const {
  const double sigma = arc_rate(s);
  const double d_sigma = d_arc_rate(s);
  WarpSample w;
  w.lambda = s;
  w.d_lambda = 1.0 / sigma;
  w.dd_lambda = -d_sigma / (sigma * sigma * sigma);
  w.one_minus_slope_sq = arc_rate_sq_minus_one(s) / (sigma * sigma);
  return w;
}

WarpSample GraphWarpedProfile::at(double rho) const {
  return sample_at_s(lambda_of_rho(rho));
}

std::string GraphWarpedProfile::describe() const {
  std::ostringstream s;
  s << kind_ << "(kappa=" << kappa_ << ", n_ambient=" << n_ambient()
    << ", graph=" << graph_->name();
  if (std::isfinite(rho0_)) s << ", rho0=" << rho0_;
  s << ")";
  return s.str();
}

std::shared_ptr<const GraphWarpedProfile> capped_cone_profile(
    double kappa, int n_ambient, std::shared_ptr<const ConvexRadialGraph> cap) {
  require_open_kappa(kappa, "capped_cone_profile");
  if (!cap) cap = std::make_shared<XiCap>(kappa);
  return std::make_shared<GraphWarpedProfile>(std::move(cap), kappa, n_ambient,
                                              "capped_cone");
}

std::shared_ptr<const GraphWarpedProfile> positive_curvature_profile(
    double kappa, int n_ambient) {
  require_open_kappa(kappa, "positive_curvature_profile");
  return std::make_shared<GraphWarpedProfile>(
      std::make_shared<ArctanGraph>(kappa), kappa, n_ambient,
      "positive_curvature");
}

std::shared_ptr<const ConeProfile> cone_profile(double kappa, int n_ambient) {
  return std::make_shared<ConeProfile>(kappa, n_ambient);
}

std::shared_ptr<const ConeConformal> cone_conformal(double kappa,
                                                    int n_ambient) {
  return std::make_shared<ConeConformal>(kappa, n_ambient);
}

// --- table / function profiles ----------------------------------------------

namespace {

bool table_pole_regular(const std::vector<double>& rho,
                        const std::vector<double>& lambda) {
  if (rho.size() < 2 || rho[0] != 0.0 || lambda[0] != 0.0) return false;
  const double slope = (lambda[1] - lambda[0]) / (rho[1] - rho[0]);
  return std::abs(slope - 1.0) < 1e-3;
}

}  // namespace

TableProfile::TableProfile(std::vector<double> rho, std::vector<double> lambda,
                           int n_ambient, std::optional<double> kappa)
    : WarpedProfile(n_ambient, table_pole_regular(rho, lambda),
                    rho.empty() ? 0.0 : rho.front()),
      spline_(rho, lambda),
      kappa_(kappa),
      count_(rho.size()) {
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (lambda[i] < 0.0 || (lambda[i] == 0.0 && rho[i] != 0.0)) {
      std::ostringstream msg;
      msg << "table profile: lambda must be positive, row " << i;
      throw DomainError(msg.str());
    }
  }
  if (kappa_) require_kappa(*kappa_, "table profile");
}

std::shared_ptr<const TableProfile> TableProfile::from_file(
    const std::string& path, int n_ambient, std::optional<double> kappa) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open profile table '" + path + "'");
  std::vector<double> rho, lambda;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double a, b;
    if (!(fields >> a)) continue;
    if (!(fields >> b)) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": expected two columns (rho, lambda)";
      throw DomainError(msg.str());
    }
    if (!rho.empty() && !(a > rho.back())) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": rho must be strictly increasing";
      throw DomainError(msg.str());
    }
    rho.push_back(a);
    lambda.push_back(b);
  }
  return std::make_shared<TableProfile>(std::move(rho), std::move(lambda),
                                        n_ambient, kappa);
}

WarpSample TableProfile::at(double rho) const {
  if (rho < spline_.front() || rho > spline_.back()) {
    std::ostringstream msg;
    msg << "table profile: rho = " << rho << " outside [" << spline_.front()
        << ", " << spline_.back() << "]";
    throw DomainError(msg.str());
  }
  const auto s = spline_(rho);
  return {s.value, s.d1, s.d2, 1.0 - s.d1 * s.d1};
}

std::string TableProfile::describe() const {
  std::ostringstream s;
  s << "table(" << count_ << " rows on [" << spline_.front() << ", "
    << spline_.back() << "], n_ambient=" << n_ambient() << ")";
  return s.str();
}

FunctionProfile::FunctionProfile(std::function<double(double)> lambda,
                                 int n_ambient, double domain_min,
                                 bool pole_regular, std::optional<double> kappa,
                                 std::string label)
    : WarpedProfile(n_ambient, pole_regular, domain_min),
      lambda_(std::move(lambda)),
      kappa_(kappa),
      label_(std::move(label)) {}

WarpSample FunctionProfile::at(double rho) const {
  const double h = std::max(1e-5, 1e-5 * rho);
  const double f0 = lambda_(rho);
  double d1, d2;
  if (rho - h >= domain_min()) {
    const double fm = lambda_(rho - h);
    const double fp = lambda_(rho + h);
    d1 = (fp - fm) / (2.0 * h);
    d2 = (fp - 2.0 * f0 + fm) / (h * h);
  } else {
    const double f1 = lambda_(rho + h);
    const double f2 = lambda_(rho + 2.0 * h);
    const double f3 = lambda_(rho + 3.0 * h);
    d1 = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
    d2 = (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h);
  }
  return {f0, d1, d2, 1.0 - d1 * d1};
}

// --- curvature --------------------------------------------------------------

namespace {

CurvatureReport curvature_from_sample(const WarpSample& w, double rho, int n) {
  CurvatureReport c;
  c.rho = rho;
  c.K_radial = -w.dd_lambda / w.lambda;
  c.K_spherical = w.one_minus_slope_sq / (w.lambda * w.lambda);
  c.Ric_radial = n * c.K_radial;
  c.Ric_spherical = (n - 1) * c.K_spherical + c.K_radial;
  return c;
}

}  // namespace

CurvatureReport curvature(const WarpedProfile& profile, double rho) {
  const int n = profile.link_dim();
  if (rho < profile.domain_min() ||
      (rho == profile.domain_min() && !profile.pole_regular()) ||
      (rho <= 0.0 && !profile.pole_regular())) {
    std::ostringstream msg;
    msg << profile.describe() << ": curvature at rho = " << rho
        << " is at or below the pole/domain minimum";
    throw DomainError(msg.str());
  }
  if (rho == 0.0) {
    // Smooth pole: both sectional curvatures tend to the same limit; take it
    // from two small radii (error is even in rho).
    const double h = 1e-3;
    const CurvatureReport a = curvature(profile, h);
    const CurvatureReport b = curvature(profile, 0.5 * h);
    const double k = (4.0 * 0.5 * (b.K_radial + b.K_spherical) -
                      0.5 * (a.K_radial + a.K_spherical)) /
                     3.0;
    WarpSample limit{1.0, 1.0, -k, k};
    return curvature_from_sample(limit, 0.0, n);
  }
  return curvature_from_sample(profile.at(rho), rho, n);
}

std::vector<CurvatureReport> curvature_sweep_serial(
    const WarpedProfile& profile, std::span<const double> radii) {
  std::vector<CurvatureReport> out(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i)
    out[i] = curvature(profile, radii[i]);
  return out;
}

std::vector<CurvatureReport> curvature_sweep(const WarpedProfile& profile,
                                             std::span<const double> radii) {
  std::vector<CurvatureReport> out(radii.size());
  const auto count = static_cast<std::ptrdiff_t>(radii.size());
  bool failed = false;
  std::string failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      out[i] = curvature(profile, radii[i]);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        if (!failed) failure = e.what();
        failed = true;
      }
    }
  }
  if (failed) throw DomainError(failure);
  return out;
}

// --- volume -----------------------------------------------------------------

double unit_sphere_measure(int m) {
  const double half = 0.5 * (m + 1);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

double volume_growth(const WarpedProfile& profile, double r_max) {
  if (!(r_max > profile.domain_min()))
    throw DomainError("volume_growth: r_max must exceed the domain minimum");
  const int n = profile.link_dim();
  const auto integrand = [&](double rho) {
    return std::pow(profile.at(rho).lambda, n);
  };
  num::QuadratureOptions opts;
  opts.abs_tol = 1e-10;
  opts.rel_tol = 1e-13;

  double a = profile.domain_min();
  double b = r_max;
  double total = 0.0;
  const auto tail = profile.linear_tail();
  if (tail && b > tail->rho0) {
    const double lo = std::max(a, tail->rho0);
    const auto antiderivative = [&](double rho) {
      const double l = tail->slope * (rho - tail->rho0) + tail->lambda0;
      return std::pow(l, n + 1) / (tail->slope * (n + 1));
    };
    total += antiderivative(b) - antiderivative(lo);
    b = lo;
  }
  if (b > a) {
    std::vector<double> cuts{a};
    for (double bp : profile.breakpoints())
      if (bp > a && bp < b) cuts.push_back(bp);
    // Geometric splits keep each panel's dynamic range modest.
    for (double x = std::max(a, 1.0) * 4.0; x < b; x *= 4.0) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 1; i < cuts.size(); ++i)
      if (cuts[i] > cuts[i - 1])
        total += num::integrate_checked(integrand, cuts[i - 1], cuts[i], opts);
  }
  return unit_sphere_measure(n) * total / std::pow(r_max, n + 1);
}

num::LadderLimit volume_growth_limit(const WarpedProfile& profile, int k_max) {
  std::vector<double> samples;
  for (int k = 0; k <= k_max; ++k) {
    const double rho = std::ldexp(1.0, k);
    if (rho > profile.domain_max()) break;
    samples.push_back(volume_growth(profile, rho));
  }
  return num::richardson_ladder(samples);
}

ConditionReport condition_check(const WarpedProfile& profile,
                                std::span<const double> grid,
                                double tolerance) {
  ConditionReport rep;
  std::vector<double> radii;
  for (double rho : grid)
    if (rho > profile.domain_min() ||
        (rho == profile.domain_min() && profile.pole_regular()))
      radii.push_back(rho);
  if (radii.empty()) throw DomainError("condition_check: empty grid");
  const auto reports = curvature_sweep(profile, radii);
  rep.min_ricci = kInf;
  rep.C3 = 0.0;
  for (const auto& c : reports) {
    rep.min_ricci = std::min({rep.min_ricci, c.Ric_radial, c.Ric_spherical});
    const double k = std::max(std::abs(c.K_radial), std::abs(c.K_spherical));
    rep.C3 = std::max(rep.C3, c.rho * c.rho * k);
  }
  rep.C1 = rep.min_ricci >= -tolerance;
  rep.C3_finite = std::isfinite(rep.C3);
  rep.C2 = volume_growth(profile, *std::max_element(radii.begin(), radii.end()));
  return rep;
}

KappaPrime nonradial_ricci_constant(const WarpedProfile& profile, int k_max) {
  KappaPrime out;
  for (int k = 0; k <= k_max; ++k) {
    const double rho = std::ldexp(1.0, k);
    if (rho > profile.domain_max()) break;
    if (rho <= profile.domain_min()) continue;
    const CurvatureReport c = curvature(profile, rho);
    out.radii.push_back(rho);
    out.samples.push_back(rho * rho * c.Ric_spherical);
  }
  const num::LadderLimit lim = num::richardson_ladder(out.samples);
  out.value = lim.value;
  out.converged = lim.converged;
  out.extrapolants = lim.extrapolants;
  return out;
}

std::string to_string(NonexistenceVerdict v) {
  return v == NonexistenceVerdict::NoStableHypersurface
             ? "NoStableHypersurface"
             : "Inconclusive";
}

NonexistenceVerdict nonexistence_verdict(double kappa_prime, int n,
                                         double rel_tol) {
  if (n < 2) throw DomainError("nonexistence_verdict: n must be >= 2");
  if (!(kappa_prime >= -1e-12)) {
    std::ostringstream msg;
    msg << "nonexistence_verdict: kappa' must be >= 0, got " << kappa_prime;
    throw DomainError(msg.str());
  }
  const double hardy = 0.25 * (n - 2.0) * (n - 2.0);
  return kappa_prime > hardy + rel_tol * std::max(1.0, hardy)
             ? NonexistenceVerdict::NoStableHypersurface
             : NonexistenceVerdict::Inconclusive;
}

}  // namespace mcs

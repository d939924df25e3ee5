#include "mcs/graph_operator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <sstream>

#include "mcs/errors.hpp"

namespace mcs {

namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// Conformal sample at r, with r = 0 allowed only for regular exponents.
ConformalSample sample_at(const ConformalProfile& metric, double r) {
  if (r == 0.0) {
    if (metric.singular_at_origin())
      throw DomainError("operator evaluated at the origin of a metric (" +
                        metric.describe() + ") that is singular there");
    return metric.at(0.0);
  }
  return metric.at(r);
}

double L_polar_at(const ConformalSample& c, const PolarJet& j, double theta,
                  double r, int n) {
  const double a = 1.0 - theta * theta;
  const double r2 = r * r;
  const double grad2 = a * j.F_t * j.F_t / r2 + j.F_r * j.F_r;
  const double e1 = std::exp(-c.phi);
  const double quad =
      n * grad2 * (j.F_r / r + 0.5 * c.d_phi * j.F_r - theta * j.F_t / r2) +
      a * (j.F_t * j.F_t / r2) * (theta * j.F_t / r2 + j.F_r / r) +
      (a / r2) * (j.F_t * j.F_t * j.F_rr + j.F_r * j.F_r * j.F_tt -
                  2.0 * j.F_t * j.F_r * j.F_rt);
  const double lin = j.F_rr + a * j.F_tt / r2 + n * j.F_r / r -
                     n * theta * j.F_t / r2 + 0.5 * (n - 1) * c.d_phi * j.F_r;
  return e1 * e1 * quad + e1 * lin;
}

}  // namespace

CartesianJet CartesianField::jet(std::span<const double> x) const {
  const int d = dim();
  if (static_cast<int>(x.size()) != d)
    throw DomainError("field evaluated at a point of the wrong dimension");
  const double h = 1e-5 * std::max(1.0, norm(x));
  std::vector<double> y(x.begin(), x.end());
  auto f = [&]() { return value(y); };
  CartesianJet out;
  out.value = f();
  out.grad.assign(d, 0.0);
  out.hess.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    y[i] = x[i] + h;
    const double fp = f();
    y[i] = x[i] - h;
    const double fm = f();
    y[i] = x[i];
    out.grad[i] = (fp - fm) / (2.0 * h);
    out.hess[i * d + i] = (fp - 2.0 * out.value + fm) / (h * h);
    for (int k = 0; k < i; ++k) {
      double s = 0.0;
      for (int si = -1; si <= 1; si += 2)
        for (int sk = -1; sk <= 1; sk += 2) {
          y[i] = x[i] + si * h;
          y[k] = x[k] + sk * h;
          s += si * sk * f();
        }
      y[i] = x[i];
      y[k] = x[k];
      out.hess[i * d + k] = out.hess[k * d + i] = s / (4.0 * h * h);
    }
  }
  return out;
}

PolarJet ScalarFieldPolar::jet(double theta, double r) const {
  const double h = 1e-5 * std::max(1.0, r);
  const double ht = 1e-5;
  PolarJet j;
  j.F = value(theta, r);
  const double ftp = value(theta + ht, r), ftm = value(theta - ht, r);
  const double frp = value(theta, r + h), frm = value(theta, r - h);
  j.F_t = (ftp - ftm) / (2.0 * ht);
  j.F_tt = (ftp - 2.0 * j.F + ftm) / (ht * ht);
  j.F_r = (frp - frm) / (2.0 * h);
  j.F_rr = (frp - 2.0 * j.F + frm) / (h * h);
  j.F_rt = (value(theta + ht, r + h) - value(theta + ht, r - h) -
            value(theta - ht, r + h) + value(theta - ht, r - h)) /
           (4.0 * ht * h);
  return j;
}

PolarAsCartesian::PolarAsCartesian(const ScalarFieldPolar& field, int dim)
    : field_(field), dim_(dim) {
  if (dim < 2) throw DomainError("polar field needs dimension >= 2");
}

double PolarAsCartesian::value(std::span<const double> x) const {
  const double r = norm(x);
  if (!(r > 0.0)) throw DomainError("polar field evaluated at the origin");
  return field_.value(x[dim_ - 1] / r, r);
}

CartesianJet PolarAsCartesian::jet(std::span<const double> x) const {
  const int d = dim_;
  const double r = norm(x);
  if (!(r > 0.0)) throw DomainError("polar field evaluated at the origin");
  const double xd = x[d - 1];
  const double theta = xd / r;
  const PolarJet p = field_.jet(theta, r);
  const double r3 = r * r * r;
  const double r5 = r3 * r * r;

  std::vector<double> t1(d), r1(d);
  for (int i = 0; i < d; ++i) {
    r1[i] = x[i] / r;
    t1[i] = (i == d - 1 ? 1.0 / r : 0.0) - xd * x[i] / r3;
  }
  CartesianJet out;
  out.value = p.F;
  out.grad.resize(d);
  out.hess.resize(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) out.grad[i] = p.F_t * t1[i] + p.F_r * r1[i];
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      const double dik = i == k ? 1.0 : 0.0;
      const double r2 = (dik - r1[i] * r1[k]) / r;
      const double t2 = -((i == d - 1 ? x[k] : 0.0) + (k == d - 1 ? x[i] : 0.0)) / r3 -
                        xd * dik / r3 + 3.0 * xd * x[i] * x[k] / r5;
      out.hess[i * d + k] = p.F_tt * t1[i] * t1[k] +
                            p.F_rt * (t1[i] * r1[k] + t1[k] * r1[i]) +
                            p.F_rr * r1[i] * r1[k] + p.F_t * t2 + p.F_r * r2;
    }
  }
  return out;
}

double mean_curvature_graph(const ConformalProfile& metric,
                            const CartesianField& u,
                            std::span<const double> x) {
  const int d = metric.n_ambient();
  if (u.dim() != d || static_cast<int>(x.size()) != d)
    throw DomainError("mean_curvature_graph: dimension mismatch");
  const double r = norm(x);
  const ConformalSample c = sample_at(metric, r);
  const CartesianJet j = u.jet(x);
  const double e1 = std::exp(-c.phi);

  double grad2 = 0.0;
  for (double g : j.grad) grad2 += g * g;
  const double v2 = 1.0 + e1 * grad2;
  const double v = std::sqrt(v2);

  // Gamma^k_ij = (Phi'/2)(delta_ik x_j/r + delta_jk x_i/r - delta_ij x_k/r)
  std::vector<double> xr(d, 0.0);
  if (r > 0.0)
    for (int i = 0; i < d; ++i) xr[i] = x[i] / r;
  const double half = 0.5 * c.d_phi;

  double h = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      double gamma_u = 0.0;
      for (int m = 0; m < d; ++m) {
        const double gam = half * ((i == m ? xr[k] : 0.0) + (k == m ? xr[i] : 0.0) -
                                   (i == k ? xr[m] : 0.0));
        gamma_u += gam * j.grad[m];
      }
      const double hess_cov = j.hess[i * d + k] - gamma_u;
      const double coef =
          (i == k ? e1 : 0.0) - (e1 * j.grad[i]) * (e1 * j.grad[k]) / v2;
      h += coef * hess_cov;
    }
  }
  return h / v;
}

double L_conformal(const ConformalProfile& metric, const CartesianJet& jet,
                   std::span<const double> x) {
  const int d = static_cast<int>(x.size());
  if (static_cast<int>(jet.grad.size()) != d)
    throw DomainError("L_conformal: jet dimension mismatch");
  const int n = d - 1;
  const double r = norm(x);
  const ConformalSample c = sample_at(metric, r);
  double grad2 = 0.0, lap = 0.0, hff = 0.0, radial = 0.0;
  for (int i = 0; i < d; ++i) {
    grad2 += jet.grad[i] * jet.grad[i];
    lap += jet.hess[i * d + i];
    if (r > 0.0) radial += jet.grad[i] * x[i] / r;
    for (int k = 0; k < d; ++k)
      hff += jet.hess[i * d + k] * jet.grad[i] * jet.grad[k];
  }
  const double e1 = std::exp(-c.phi);
  return e1 * e1 * (grad2 * (lap + 0.5 * n * c.d_phi * radial) - hff) +
         e1 * (lap + 0.5 * (n - 1) * c.d_phi * radial);
}

double L_conformal(const ConformalProfile& metric, const CartesianField& F,
                   std::span<const double> x) {
  if (F.dim() != static_cast<int>(x.size()) || F.dim() != metric.n_ambient())
    throw DomainError("L_conformal: dimension mismatch");
  return L_conformal(metric, F.jet(x), x);
}

double L_polar(const ConformalProfile& metric, const PolarJet& j,
               double theta, double r) {
  if (!(std::abs(theta) <= 1.0) || !(r > 0.0))
    throw DomainError("L_polar needs |theta| <= 1 and r > 0");
  return L_polar_at(metric.at(r), j, theta, r, metric.n_ambient() - 1);
}

double L_polar(const ConformalProfile& metric, const ScalarFieldPolar& F,
               double theta, double r) {
  if (!(std::abs(theta) <= 1.0) || !(r > 0.0))
    throw DomainError("L_polar needs |theta| <= 1 and r > 0");
  return L_polar(metric, F.jet(theta, r), theta, r);
}

double L_fd_oracle(const ConformalProfile& metric, const CartesianField& F,
                   std::span<const double> x, double h) {
  const int d = static_cast<int>(x.size());
  if (F.dim() != d || d != metric.n_ambient())
    throw DomainError("L_fd_oracle: dimension mismatch");
  if (!(h > 0.0)) throw DomainError("L_fd_oracle: step must be positive");
  std::vector<double> y(x.begin(), x.end());

  auto gradient_at = [&](std::vector<double>& p, std::vector<double>& g) {
    for (int k = 0; k < d; ++k) {
      const double keep = p[k];
      p[k] = keep + h;
      const double fp = F.value(p);
      p[k] = keep - h;
      const double fm = F.value(p);
      p[k] = keep;
      g[k] = (fp - fm) / (2.0 * h);
    }
  };
  std::vector<double> g(d);
  // sqrt(det sigma) sigma^{jj} F_j / v at p, component j.
  auto flux = [&](std::vector<double>& p, int j) {
    gradient_at(p, g);
    const ConformalSample c = sample_at(metric, norm(p));
    double g2 = 0.0;
    for (double gi : g) g2 += gi * gi;
    const double e1 = std::exp(-c.phi);
    return std::exp(0.5 * d * c.phi) * e1 * g[j] / std::sqrt(1.0 + e1 * g2);
  };

  double div = 0.0;
  for (int j = 0; j < d; ++j) {
    y[j] = x[j] + h;
    const double fp = flux(y, j);
    y[j] = x[j] - h;
    const double fm = flux(y, j);
    y[j] = x[j];
    div += (fp - fm) / (2.0 * h);
  }
  const ConformalSample c = sample_at(metric, norm(x));
  div *= std::exp(-0.5 * d * c.phi);
  gradient_at(y, g);
  double g2 = 0.0;
  for (double gi : g) g2 += gi * gi;
  const double v2 = 1.0 + std::exp(-c.phi) * g2;
  return v2 * std::sqrt(v2) * div;
}

// --- barrier ------------------------------------------------------------------

double kappa_star(int n) {
  return 2.0 * std::sqrt(static_cast<double>(n - 1)) / n;
}

double barrier_exponent(int n, double kappa) {
  if (n < 3) throw DomainError("barrier exponent needs n >= 3");
  if (!(kappa > 0.0)) throw DomainError("barrier exponent needs kappa > 0");
  if (kappa > 1.0)
    throw DomainError("barrier exponent: kappa > 1 is unsupported (got " +
                      std::to_string(kappa) + ")");
  const double half = 0.5 * n * kappa;
  const double disc = half * half - (n - 1);
  if (disc < -1e-12) {
    char msg[200];
    std::snprintf(msg, sizeof msg,
                  "kappa = %.12g is below the barrier threshold kappa* = "
                  "2 sqrt(n-1)/n = %.12g for n = %d",
                  kappa, kappa_star(n), n);
    throw ThresholdViolation(msg, kappa_star(n));
  }
  // Smaller root of p^2 - n kappa p + (n - 1), without cancellation.
  return (n - 1) / (half + std::sqrt(std::max(disc, 0.0)));
}

BarrierSpec make_barrier_spec(int n, double kappa, double C) {
  if (!(C > 0.0)) throw DomainError("barrier amplitude C must be positive");
  return BarrierSpec{C, barrier_exponent(n, kappa), n, kappa};
}

BarrierField::BarrierField(const BarrierSpec& spec, bool alternate)
    : spec_(spec), alternate_(alternate) {}

double BarrierField::value(double theta, double r) const {
  double v = spec_.C * theta * std::pow(r, spec_.p);
  if (alternate_)
    v *= std::pow(std::max(0.0, 1.0 - theta * theta), 0.5 * (spec_.p - 1.0));
  return v;
}

PolarJet BarrierField::jet(double theta, double r) const {
  const double C = spec_.C, p = spec_.p;
  const double rp = std::pow(r, p);
  // Angular factor g(theta) and its derivatives.
  double g = theta, g1 = 1.0, g2 = 0.0;
  if (alternate_) {
    const double a = 1.0 - theta * theta;
    if (!(a > 0.0))
      throw DomainError("alternate barrier is not differentiable at |theta| = 1");
    const double q = p - 1.0;
    const double ah = std::pow(a, 0.5 * q);
    g = theta * ah;
    g1 = ah - q * theta * theta * ah / a;
    g2 = -3.0 * q * theta * ah / a + q * (q - 2.0) * theta * theta * theta * ah / (a * a);
  }
  PolarJet j;
  j.F = C * g * rp;
  j.F_t = C * g1 * rp;
  j.F_tt = C * g2 * rp;
  j.F_r = C * p * g * rp / r;
  j.F_rr = C * p * (p - 1.0) * g * rp / (r * r);
  j.F_rt = C * p * g1 * rp / r;
  return j;
}

std::string BarrierField::label() const {
  std::ostringstream s;
  s << (alternate_ ? "C x_d w^(p-1)" : "C theta r^p") << " (C=" << spec_.C
    << ", p=" << spec_.p << ")";
  return s.str();
}

BarrierGrid default_barrier_grid(std::size_t n_theta, std::size_t n_r,
                                 double r_min, double r_max) {
  if (n_theta < 2 || n_r < 2 || !(r_min > 0.0) || !(r_max > r_min))
    throw DomainError("barrier grid needs >= 2 nodes per axis and 0 < r_min < r_max");
  return {num::linspace(-1.0, 1.0, n_theta), num::logspace(r_min, r_max, n_r)};
}

namespace {

void validate_barrier(const ConformalProfile& metric, const BarrierSpec& spec,
                      const BarrierGrid& grid) {
  if (metric.n_ambient() != spec.n + 1)
    throw DomainError("barrier spec dimension n = " + std::to_string(spec.n) +
                      " does not match the metric (ambient dimension " +
                      std::to_string(metric.n_ambient()) + ")");
  if (!(spec.kappa > 0.0 && spec.kappa <= 1.0))
    throw DomainError("barrier check supports kappa in (0, 1] only");
  if (spec.kappa < kappa_star(spec.n) * (1.0 - 1e-12))
    throw ThresholdViolation("barrier check: kappa below kappa* = 2 sqrt(n-1)/n",
                             kappa_star(spec.n));
  for (double t : grid.theta)
    if (!(std::abs(t) <= 1.0)) throw DomainError("barrier grid theta outside [-1, 1]");
  for (double r : grid.r)
    if (!(r > 0.0)) throw DomainError("barrier grid must exclude the origin");
}

// Phi'(r) >= -2(1-kappa)/r on every grid radius.
std::vector<ConformalSample> checked_samples(const ConformalProfile& metric,
                                             const BarrierSpec& spec,
                                             const std::vector<double>& radii) {
  std::vector<ConformalSample> out;
  out.reserve(radii.size());
  for (double r : radii) {
    const ConformalSample c = metric.at(r);
    const double floor = -2.0 * (1.0 - spec.kappa) / r;
    if (!(c.d_phi >= floor - 1e-9 / r)) {
      char msg[256];
      std::snprintf(msg, sizeof msg,
                    "barrier precondition Phi'(r) >= -2(1-kappa)/r fails at r = "
                    "%.12g (Phi' = %.12g, bound = %.12g)",
                    r, c.d_phi, floor);
      throw PreconditionViolation(msg);
    }
    out.push_back(c);
  }
  return out;
}

BarrierNode barrier_node(const ConformalSample& c, const BarrierField& field,
                         const BarrierSpec& spec, double theta, double r,
                         bool alternate) {
  BarrierNode node;
  node.theta = theta;
  node.r = r;
  const PolarJet j = field.jet(theta, r);
  node.value = theta * L_polar_at(c, j, theta, r, spec.n);
  const double e1 = std::exp(-c.phi);
  const double C = spec.C, p = spec.p;
  node.bound = alternate ? 0.0
                         : C * e1 * (p * p - 1.0) * theta * theta * std::pow(r, p - 2.0);
  node.scale = C * C * C * e1 * e1 * std::pow(r, 3.0 * p - 4.0) +
               C * e1 * std::pow(r, p - 2.0);
  return node;
}

std::vector<std::pair<std::size_t, std::size_t>> barrier_nodes(
    const BarrierGrid& grid, bool alternate) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(grid.theta.size() * grid.r.size());
  for (std::size_t it = 0; it < grid.theta.size(); ++it) {
    const double t = grid.theta[it];
    if (alternate && !(1.0 - t * t > 1e-12)) continue;  // w = 0: not smooth
    for (std::size_t ir = 0; ir < grid.r.size(); ++ir) out.emplace_back(it, ir);
  }
  return out;
}

void summarize(BarrierReport& rep, double tol) {
  rep.min_relative = std::numeric_limits<double>::infinity();
  rep.worst_bound_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const BarrierNode& b = rep.rows[i];
    const double rel = b.value / b.scale;
    if (rel < rep.min_relative) {
      rep.min_relative = rel;
      rep.argmin = i;
    }
    const double gap = (b.value - b.bound) / b.scale;
    if (gap < rep.worst_bound_gap) {
      rep.worst_bound_gap = gap;
      rep.worst_bound_node = i;
    }
  }
  rep.sign_ok = rep.min_relative >= -tol;
  rep.bound_ok = rep.alternate || rep.worst_bound_gap >= -tol;
}

}  // namespace

BarrierReport barrier_check_serial(const ConformalProfile& metric,
                                   const BarrierSpec& spec,
                                   const BarrierGrid& grid,
                                   const BarrierOptions& opts) {
  validate_barrier(metric, spec, grid);
  const auto samples = checked_samples(metric, spec, grid.r);
  const BarrierField field(spec, opts.alternate);
  BarrierReport rep;
  rep.alternate = opts.alternate;
  for (const auto& [it, ir] : barrier_nodes(grid, opts.alternate))
    rep.rows.push_back(barrier_node(samples[ir], field, spec, grid.theta[it],
                                    grid.r[ir], opts.alternate));
  summarize(rep, opts.tolerance);
  return rep;
}

BarrierReport barrier_check(const ConformalProfile& metric,
                            const BarrierSpec& spec, const BarrierGrid& grid,
                            const BarrierOptions& opts) {
  validate_barrier(metric, spec, grid);
  const auto samples = checked_samples(metric, spec, grid.r);
  const BarrierField field(spec, opts.alternate);
  const auto nodes = barrier_nodes(grid, opts.alternate);
  BarrierReport rep;
  rep.alternate = opts.alternate;
  rep.rows.resize(nodes.size());
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  const auto count = static_cast<long>(nodes.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < count; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      const auto [it, ir] = nodes[i];
      rep.rows[i] = barrier_node(samples[ir], field, spec, grid.theta[it],
                                 grid.r[ir], opts.alternate);
    } catch (...) {
#pragma omp critical
      {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  summarize(rep, opts.tolerance);
  return rep;
}

// --- random test fields ---------------------------------------------------------

PolarTestField::PolarTestField(std::vector<Term> terms, double b, double w,
                               double e)
    : terms_(std::move(terms)), b_(b), w_(w), e_(e) {}

double PolarTestField::value(double theta, double r) const {
  double v = b_ * std::sin(w_ * theta) * std::pow(r, e_);
  for (const Term& t : terms_)
    v += t.a * std::pow(theta, t.theta_power) * std::pow(r, t.r_power);
  return v;
}

PolarJet PolarTestField::jet(double theta, double r) const {
  PolarJet j;
  for (const Term& t : terms_) {
    const int i = t.theta_power;
    const double e = t.r_power;
    const double re = std::pow(r, e);
    const double ti = std::pow(theta, i);
    const double ti1 = i >= 1 ? i * std::pow(theta, i - 1) : 0.0;
    const double ti2 = i >= 2 ? i * (i - 1) * std::pow(theta, i - 2) : 0.0;
    j.F += t.a * ti * re;
    j.F_t += t.a * ti1 * re;
    j.F_tt += t.a * ti2 * re;
    j.F_r += t.a * ti * e * re / r;
    j.F_rr += t.a * ti * e * (e - 1.0) * re / (r * r);
    j.F_rt += t.a * ti1 * e * re / r;
  }
  const double re = std::pow(r, e_);
  const double s = std::sin(w_ * theta), co = std::cos(w_ * theta);
  j.F += b_ * s * re;
  j.F_t += b_ * w_ * co * re;
  j.F_tt += -b_ * w_ * w_ * s * re;
  j.F_r += b_ * s * e_ * re / r;
  j.F_rr += b_ * s * e_ * (e_ - 1.0) * re / (r * r);
  j.F_rt += b_ * w_ * co * e_ * re / r;
  return j;
}

std::string PolarTestField::label() const {
  std::ostringstream s;
  s.precision(4);
  for (const Term& t : terms_)
    s << (t.a < 0 ? "-" : "+") << std::abs(t.a) << " th^" << t.theta_power
      << " r^" << t.r_power << " ";
  s << (b_ < 0 ? "-" : "+") << std::abs(b_) << " sin(" << w_ << " th) r^" << e_;
  return s.str();
}

PolarTestField random_polar_field(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> pow_r(0.5, 2.5);
  std::uniform_int_distribution<int> pow_t(0, 3);
  std::vector<PolarTestField::Term> terms;
  for (int k = 0; k < 3; ++k) terms.push_back({amp(rng), pow_t(rng), pow_r(rng)});
  const double b = 0.5 * amp(rng);
  const double w = 0.5 + 0.75 * (amp(rng) + 1.0);
  const double e = 0.5 + 0.75 * (amp(rng) + 1.0);
  return PolarTestField(std::move(terms), b, w, e);
}

}  // namespace mcs

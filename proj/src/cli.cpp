#include "mcs/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "mcs/area_min.hpp"
#include "mcs/errors.hpp"
#include "mcs/graph_operator.hpp"
#include "mcs/radial_metric.hpp"
#include "mcs/stability.hpp"

namespace mcs::cli {

namespace {

const std::vector<KeyInfo> kKeys = {
    {"command", "run", "metric-show", "operation to run"},
    {"out", "run", "", "table output path; empty writes the table after the summary"},
    {"seed", "run", "1", "seed for randomized field suites"},
    {"verbose", "run", "false", "print progress details"},

    {"kind", "metric", "cone", "cone, capped_cone, positive_curvature or table"},
    {"kappa", "metric", "0.8", "cone slope, in (0, 1]"},
    {"n", "metric", "7", "hypersurface dimension, ambient dimension n + 1"},
    {"table", "metric", "", "two-column (rho, lambda) file for kind = table"},

    {"rho_min", "metric-show", "0.001", "smallest radius"},
    {"rho_max", "metric-show", "1000", "largest radius"},
    {"points", "metric-show", "61", "log-spaced radii"},

    {"rho_min", "metric-check", "0.001", "smallest radius of the curvature grid"},
    {"rho_max", "metric-check", "1000", "largest radius of the curvature grid"},
    {"points", "metric-check", "200", "log-spaced radii"},
    {"tolerance", "metric-check", "1e-10", "allowed negative Ricci"},
    {"volume_tolerance", "metric-check", "0.01", "relative gap to the cone volume constant"},

    {"rho_min", "curvature-sweep", "0.001", "smallest radius"},
    {"rho_max", "curvature-sweep", "1000", "largest radius"},
    {"points", "curvature-sweep", "121", "log-spaced radii"},

    {"theta_points", "barrier-verify", "201", "theta nodes on [-1, 1]"},
    {"r_points", "barrier-verify", "200", "log-spaced radii"},
    {"r_min", "barrier-verify", "0.01", "smallest radius"},
    {"r_max", "barrier-verify", "100", "largest radius"},
    {"C", "barrier-verify", "1", "barrier amplitude"},
    {"tolerance", "barrier-verify", "1e-8", "relative sign tolerance"},
    {"alternate", "barrier-verify", "false", "use C x_{n+1} w^{p-1} instead of C theta r^p"},
    {"operator_fields", "barrier-verify", "10", "random fields for the three-way operator check"},

    {"kappa_min", "stability-threshold", "0.5", "first kappa of the margin table"},
    {"kappa_max", "stability-threshold", "1", "last kappa of the margin table"},
    {"kappa_step", "stability-threshold", "0.01", "kappa spacing"},
    {"B2_link", "stability-threshold", "0", "|B|^2 of the link"},

    {"epsilon", "rayleigh", "1e-4", "inner radius of the annulus"},
    {"basis_size", "rayleigh", "512", "hat functions"},
    {"B2_link", "rayleigh", "0", "|B|^2 of the link"},
    {"tolerance", "rayleigh", "1e-3", "relative error against the closed form"},

    {"epsilon", "eigen", "1e-4", "inner radius of the annulus"},
    {"k_max", "eigen", "3", "number of modes"},
    {"grid_points", "eigen", "10000", "nodes including both ends"},
    {"tolerance", "eigen", "1e-3", "relative error against the closed form"},

    {"W", "areamin-solve", "1", "disc radius"},
    {"grid_size", "areamin-solve", "256", "cells"},
    {"max_iter", "areamin-solve", "20000", "descent iterations"},
    {"grad_tol", "areamin-solve", "1e-8", "gradient tolerance relative to 1 + A"},
    {"verdict_tol", "areamin-solve", "1e-6", "relative area gap for a verdict"},

    {"kappa_min", "areamin-scan", "0.5", "first kappa"},
    {"kappa_max", "areamin-scan", "1", "last kappa"},
    {"kappa_step", "areamin-scan", "0.01", "kappa spacing"},
    {"W", "areamin-scan", "1", "disc radius"},
    {"grid_size", "areamin-scan", "256", "cells"},
    {"max_iter", "areamin-scan", "20000", "descent iterations per kappa"},
    {"grad_tol", "areamin-scan", "1e-8", "gradient tolerance relative to 1 + A"},
    {"verdict_tol", "areamin-scan", "1e-6", "relative area gap for a verdict"},
    {"band", "areamin-scan", "0.03", "allowed distance of the transition from kappa*"},

    {"k_max", "kprime", "20", "ladder rho = 2^k, k <= k_max"},
};

const std::vector<std::string> kCommands = {
    "metric-show", "metric-check", "curvature-sweep", "barrier-verify",
    "stability-threshold", "rayleigh", "eigen", "areamin-solve",
    "areamin-scan", "kprime"};

// Storage key: "section.key" for command keys, plain key otherwise.
std::string storage_key(const KeyInfo& k) {
  return (k.section == "run" || k.section == "metric") ? k.key
                                                       : k.section + "." + k.key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  void write(std::ostream& os) const {
    line(os, header_);
    for (const auto& r : rows_) line(os, r);
  }

 private:
  static void line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      os << (i ? "\t" : "") << cells[i];
    os << '\n';
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Active command's parameters, looked up by bare key.
class Params {
 public:
  explicit Params(const RunConfig& c) : c_(c), cmd_(c.command()) {}
  double real(const std::string& k, double lo, double hi) const {
    return c_.real(cmd_ + "." + k, lo, hi);
  }
  int integer(const std::string& k, int lo, int hi) const {
    return c_.integer(cmd_ + "." + k, lo, hi);
  }
  bool flag(const std::string& k) const { return c_.flag(cmd_ + "." + k); }

 private:
  const RunConfig& c_;
  std::string cmd_;
};

constexpr double kBig = std::numeric_limits<double>::max();

struct Metric {
  std::string kind;
  int n = 7;
  double kappa = 0.8;
  std::string table;
};

Metric read_metric(const RunConfig& c) {
  Metric m;
  m.kind = c.raw("kind");
  if (m.kind != "cone" && m.kind != "capped_cone" &&
      m.kind != "positive_curvature" && m.kind != "table")
    throw ConfigError("kind = " + m.kind +
                      ": expected cone, capped_cone, positive_curvature or table");
  m.n = c.integer("n", 2, 64);
  m.kappa = c.real("kappa", std::numeric_limits<double>::min(), 1.0);
  m.table = c.raw("table");
  if (m.kind == "table" && m.table.empty())
    throw ConfigError("kind = table needs the table key");
  return m;
}

WarpedProfilePtr warped(const Metric& m) {
  const int d = m.n + 1;
  if (m.kind == "cone") return cone_profile(m.kappa, d);
  if (m.kind == "capped_cone") return capped_cone_profile(m.kappa, d);
  if (m.kind == "positive_curvature") return positive_curvature_profile(m.kappa, d);
  return TableProfile::from_file(m.table, d, m.kappa);
}

ConformalProfilePtr conformal(const Metric& m) {
  if (m.kind == "cone") return cone_conformal(m.kappa, m.n + 1);
  ConversionOptions opts;
  opts.kappa = m.kappa;
  return warped_to_conformal(warped(m), opts);
}

std::vector<double> kappa_grid(const Params& p) {
  const double lo = p.real("kappa_min", 1e-6, 1.0);
  const double hi = p.real("kappa_max", lo, 1.0);
  const double step = p.real("kappa_step", 1e-6, 1.0);
  std::vector<double> out;
  const int count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) out.push_back(lo + i * step);
  return out;
}

std::vector<double> radii(const Params& p) {
  const double lo = p.real("rho_min", 1e-12, kBig);
  const double hi = p.real("rho_max", lo, kBig);
  const int count = p.integer("points", 2, 1000000);
  return num::logspace(lo, hi, static_cast<std::size_t>(count));
}

struct Output {
  std::ostream& summary;
  std::ostream& errors;
  bool verbose = false;
  std::optional<Table> table;
};

int cmd_metric_show(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const auto prof = warped(m);
  o.summary << "metric\t" << prof->describe() << '\n';
  Table t({"rho", "lambda", "d_lambda", "dd_lambda"});
  for (double rho : radii(Params(c))) {
    const WarpSample s = prof->at(rho);
    t.add({fmt(rho), fmt(s.lambda), fmt(s.d_lambda), fmt(s.dd_lambda)});
  }
  o.table = std::move(t);
  return kExitOk;
}

int cmd_metric_check(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const Params p(c);
  const auto prof = warped(m);
  const auto grid = radii(p);
  const ConditionReport r =
      condition_check(*prof, grid, p.real("tolerance", 0.0, kBig));
  const num::LadderLimit vg = volume_growth_limit(*prof);
  const double cone_constant =
      unit_sphere_measure(m.n) * std::pow(m.kappa, m.n) / (m.n + 1);
  const double rel = std::abs(vg.value - cone_constant) / cone_constant;
  const bool vol_ok = rel <= p.real("volume_tolerance", 0.0, kBig);

  o.summary << "metric\t" << prof->describe() << '\n'
            << "C1_nonnegative_ricci\t" << (r.C1 ? "yes" : "no") << '\n'
            << "min_ricci\t" << fmt(r.min_ricci) << '\n'
            << "C2_volume_ratio\t" << fmt(r.C2) << '\n'
            << "C3_max_rho2_K\t" << fmt(r.C3) << '\n'
            << "volume_growth_limit\t" << fmt(vg.value) << '\n'
            << "cone_volume_constant\t" << fmt(cone_constant) << '\n'
            << "volume_relative_gap\t" << fmt(rel) << '\n';
  Table t({"k", "volume_ratio", "extrapolant"});
  for (std::size_t k = 0; k < vg.samples.size(); ++k)
    t.add({std::to_string(k), fmt(vg.samples[k]),
           k < vg.extrapolants.size() ? fmt(vg.extrapolants[k]) : "nan"});
  o.table = std::move(t);
  int code = kExitOk;
  if (!r.C1) {
    o.errors << "check failed: Ricci curvature below -tolerance (min "
             << fmt(r.min_ricci) << ")\n";
    code = kExitCheckFailed;
  }
  if (!r.C3_finite) {
    o.errors << "check failed: rho^2 |K| is not bounded on the grid\n";
    code = kExitCheckFailed;
  }
  if (!vol_ok) {
    o.errors << "check failed: volume growth " << fmt(vg.value)
             << " differs from the cone constant " << fmt(cone_constant)
             << " by " << fmt(rel) << " relative\n";
    code = kExitCheckFailed;
  }
  return code;
}

int cmd_curvature_sweep(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const auto prof = warped(m);
  const auto grid = radii(Params(c));
  const auto rows = curvature_sweep(*prof, grid);
  o.summary << "metric\t" << prof->describe() << '\n'
            << "radii\t" << rows.size() << '\n';
  Table t({"rho", "K_radial", "K_spherical", "Ric_radial", "Ric_spherical"});
  for (const auto& r : rows)
    t.add({fmt(r.rho), fmt(r.K_radial), fmt(r.K_spherical), fmt(r.Ric_radial),
           fmt(r.Ric_spherical)});
  o.table = std::move(t);
  return kExitOk;
}

// Largest disagreement among the three operator paths on random fields.
struct OperatorCheck {
  int fields = 0;
  double worst = 0.0;  // max |diff| / max(1e-6, 1e-4 |value|)
};

OperatorCheck operator_check(const ConformalProfile& metric, int fields,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uth(-0.95, 0.95);
  std::uniform_real_distribution<double> ulogr(std::log(0.2), std::log(5.0));
  std::normal_distribution<double> gauss;
  const int d = metric.n_ambient();
  OperatorCheck out;
  for (int f = 0; f < fields; ++f) {
    const PolarTestField field = random_polar_field(rng);
    const PolarAsCartesian cart(field, d);
    const double theta = uth(rng);
    const double r = std::exp(ulogr(rng));
    std::vector<double> x(d, 0.0);
    double norm = 0.0;
    for (int i = 0; i + 1 < d; ++i) {
      x[i] = gauss(rng);
      norm += x[i] * x[i];
    }
    const double scale = r * std::sqrt(1.0 - theta * theta) / std::sqrt(norm);
    for (int i = 0; i + 1 < d; ++i) x[i] *= scale;
    x[d - 1] = theta * r;
    const double a = L_conformal(metric, cart, x);
    const double b = L_polar(metric, field, theta, r);
    const double e = L_fd_oracle(metric, cart, x, 2e-4 * r);
    const double tol =
        std::max(1e-6, 1e-4 * std::max({std::abs(a), std::abs(b), std::abs(e)}));
    out.worst = std::max({out.worst, std::abs(a - b) / tol, std::abs(a - e) / tol,
                          std::abs(b - e) / tol});
    ++out.fields;
  }
  return out;
}

int cmd_barrier_verify(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const Params p(c);
  if (m.n < 3) throw ConfigError("barrier-verify needs n >= 3");
  const BarrierSpec spec =
      make_barrier_spec(m.n, m.kappa, p.real("C", 1e-300, kBig));
  const double r_min = p.real("r_min", 1e-300, kBig);
  const BarrierGrid grid = default_barrier_grid(
      static_cast<std::size_t>(p.integer("theta_points", 2, 100000)),
      static_cast<std::size_t>(p.integer("r_points", 1, 100000)), r_min,
      p.real("r_max", r_min, kBig));
  BarrierOptions opts;
  opts.tolerance = p.real("tolerance", 0.0, kBig);
  opts.alternate = p.flag("alternate");
  const auto metric = conformal(m);
  const BarrierReport rep = barrier_check(*metric, spec, grid, opts);
  const int fields = p.integer("operator_fields", 0, 1000000);
  const OperatorCheck ops = operator_check(
      *metric, fields, static_cast<std::uint64_t>(c.integer("seed", 0, 2147483647)));

  const BarrierNode& worst = rep.rows[rep.argmin];
  o.summary << "metric\t" << metric->describe() << '\n'
            << "barrier\t" << BarrierField(spec, opts.alternate).label() << '\n'
            << "p\t" << fmt(spec.p) << '\n'
            << "kappa_star\t" << fmt(kappa_star(m.n)) << '\n'
            << "nodes\t" << rep.rows.size() << '\n'
            << "min_relative\t" << fmt(rep.min_relative) << '\n'
            << "argmin_theta\t" << fmt(worst.theta) << '\n'
            << "argmin_r\t" << fmt(worst.r) << '\n'
            << "sign\t" << (rep.sign_ok ? "ok" : "violated") << '\n'
            << "worst_bound_gap\t" << fmt(rep.worst_bound_gap) << '\n'
            << "bound\t" << (rep.bound_ok ? "ok" : "violated") << '\n'
            << "operator_fields\t" << ops.fields << '\n'
            << "operator_worst_ratio\t" << fmt(ops.worst) << '\n';
  Table t({"theta", "r", "value", "bound"});
  for (const auto& n : rep.rows)
    t.add({fmt(n.theta), fmt(n.r), fmt(n.value), fmt(n.bound)});
  o.table = std::move(t);

  int code = kExitOk;
  if (!rep.sign_ok) {
    o.errors << "check failed: theta L F < 0 beyond tolerance at theta = "
             << fmt(worst.theta) << ", r = " << fmt(worst.r) << '\n';
    code = kExitCheckFailed;
  }
  if (!rep.bound_ok) {
    const BarrierNode& b = rep.rows[rep.worst_bound_node];
    o.errors << "check failed: lower bound C exp(-Phi)(p^2-1) theta^2 r^(p-2) "
                "violated at theta = "
             << fmt(b.theta) << ", r = " << fmt(b.r) << '\n';
    code = kExitCheckFailed;
  }
  if (ops.worst > 1.0) {
    o.errors << "check failed: operator paths disagree (ratio " << fmt(ops.worst)
             << " to max(1e-6, 1e-4 |value|))\n";
    code = kExitCheckFailed;
  }
  return code;
}

int cmd_stability_threshold(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const Params p(c);
  if (m.n < 3) throw ConfigError("stability-threshold needs n >= 3");
  const double B2 = p.real("B2_link", 0.0, kBig);
  const double closed = kappa_star(m.n);
  const double bisected = threshold_by_bisection(m.n);
  o.summary << "n\t" << m.n << '\n'
            << "kappa_star\t" << fmt(closed) << '\n'
            << "kappa_star_bisection\t" << fmt(bisected) << '\n'
            << "B2_link\t" << fmt(B2) << '\n';
  Table t({"kappa", "margin", "stable"});
  for (double k : kappa_grid(p)) {
    const StabilityVerdict v = stability_verdict(m.n, k, B2);
    t.add({fmt(k), fmt(v.margin), v.stable ? "stable" : "unstable"});
  }
  o.table = std::move(t);
  if (std::abs(closed - bisected) > 1e-10) {
    o.errors << "check failed: bisection " << fmt(bisected)
             << " differs from 2 sqrt(n-1)/n = " << fmt(closed) << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_rayleigh(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const Params p(c);
  ConeStabilityProblem prob;
  prob.n = m.n;
  prob.kappa = m.kappa;
  prob.B2_link = p.real("B2_link", 0.0, kBig);
  prob.epsilon = p.real("epsilon", 1e-300, 1.0);
  validate(prob);
  const int basis = p.integer("basis_size", 8, 10000000);
  const double value = rayleigh_min(prob, basis);
  const double L = std::log(prob.epsilon);
  const double exact = stability_margin(prob.n, prob.kappa, prob.B2_link) +
                       std::numbers::pi * std::numbers::pi / (L * L);
  const double rel = std::abs(value - exact) / std::max(1e-12, std::abs(exact));
  o.summary << "n\t" << prob.n << '\n'
            << "kappa\t" << fmt(prob.kappa) << '\n'
            << "epsilon\t" << fmt(prob.epsilon) << '\n'
            << "rayleigh_min\t" << fmt(value) << '\n'
            << "closed_form\t" << fmt(exact) << '\n'
            << "relative_error\t" << fmt(rel) << '\n'
            << "sign\t" << (value >= 0.0 ? "nonnegative" : "negative") << '\n';
  Table t({"basis_size", "rayleigh_min", "closed_form"});
  for (int b = 8; b < basis; b *= 2)
    t.add({std::to_string(b), fmt(rayleigh_min(prob, b)), fmt(exact)});
  t.add({std::to_string(basis), fmt(value), fmt(exact)});
  o.table = std::move(t);
  if (rel > p.real("tolerance", 0.0, kBig)) {
    o.errors << "check failed: Rayleigh minimum off the closed form by "
             << fmt(rel) << " relative\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_eigen(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const Params p(c);
  const double eps = p.real("epsilon", 1e-300, 1.0);
  const int k_max = p.integer("k_max", 1, 100000);
  const int points = p.integer("grid_points", 64, 100000000);
  const double tol = p.real("tolerance", 0.0, kBig);
  o.summary << "n\t" << m.n << '\n'
            << "epsilon\t" << fmt(eps) << '\n'
            << "grid_points\t" << points << '\n';
  Table t({"k", "value_fd", "value_exact", "relative_error", "sign_changes"});
  double worst = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    const DiscreteMode fd = radial_eigenvalue_fd(m.n, eps, k, points);
    const double exact = radial_eigenvalue(m.n, eps, k).value;
    const double rel = std::abs(fd.value - exact) / exact;
    worst = std::max(worst, rel);
    t.add({std::to_string(k), fmt(fd.value), fmt(exact), fmt(rel),
           std::to_string(fd.sign_changes)});
  }
  o.summary << "worst_relative_error\t" << fmt(worst) << '\n';
  o.table = std::move(t);
  if (worst > tol) {
    o.errors << "check failed: eigenvalue error " << fmt(worst)
             << " above tolerance " << fmt(tol) << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

MinimizeOptions minimize_options(const Params& p) {
  MinimizeOptions mo;
  mo.max_iter = p.integer("max_iter", 1, 100000000);
  mo.grad_tol = p.real("grad_tol", 0.0, kBig);
  mo.verdict_tol = p.real("verdict_tol", 0.0, kBig);
  return mo;
}

int cmd_areamin_solve(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const Params p(c);
  const double W = p.real("W", 1e-300, kBig);
  const int cells = p.integer("grid_size", 8, 10000000);
  const EquivariantAreaProblem prob = make_area_problem(conformal(m), m.n, W, cells);
  const MinimizationResult r =
      minimize(prob, seed_perturbation(prob.grid, m.n, W), minimize_options(p));
  o.summary << "metric\t" << prob.metric->describe() << '\n'
            << "area_flat\t" << fmt(r.area_flat) << '\n'
            << "area_descent\t" << fmt(r.area_descent) << '\n'
            << "area_min\t" << fmt(r.area_min) << '\n'
            << "gap\t" << fmt((r.area_flat - r.area_min) / r.area_flat) << '\n'
            << "verdict\t" << to_string(r.verdict) << '\n'
            << "scope\tflat minimizes among equivariant graphs only\n"
            << "converged\t" << (r.converged ? "yes" : "no") << '\n'
            << "iterations\t" << r.iterations << '\n'
            << "saddle_escapes\t" << r.saddle_escapes << '\n'
            << "grad_norm\t" << fmt(r.grad_norm) << '\n';
  if (o.verbose)
    for (const TracePoint& tp : r.trace)
      o.summary << "trace\t" << tp.iteration << '\t' << fmt(tp.area) << '\t'
                << fmt(tp.grad_norm) << '\n';
  Table t({"w", "u"});
  for (std::size_t i = 0; i < prob.grid.size(); ++i)
    t.add({fmt(prob.grid[i]), fmt(r.u_star[i])});
  o.table = std::move(t);
  return kExitOk;
}

int cmd_areamin_scan(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const Params p(c);
  ScanOptions so;
  so.W = p.real("W", 1e-300, kBig);
  so.grid_size = p.integer("grid_size", 8, 10000000);
  so.minimize = minimize_options(p);
  if (m.kind != "cone") {
    Metric base = m;
    so.metric = [base](double kappa) {
      Metric mk = base;
      mk.kappa = kappa;
      return conformal(mk);
    };
  }
  const ScanReport rep = threshold_scan(m.n, kappa_grid(p), so);
  const double ks = kappa_star(m.n);
  const double band = p.real("band", 0.0, kBig);
  o.summary << "n\t" << m.n << '\n'
            << "kind\t" << m.kind << '\n'
            << "kappa_star\t" << fmt(ks) << '\n'
            << "kappa_hat\t" << fmt(rep.kappa_hat) << '\n'
            << "monotone\t" << (rep.monotone ? "yes" : "no") << '\n';
  Table t({"kappa", "area_flat", "area_min", "gap", "verdict"});
  for (const ScanRow& r : rep.rows) {
    t.add({fmt(r.kappa), fmt(r.area_flat), fmt(r.area_min), fmt(r.gap),
           to_string(r.verdict)});
    if (o.verbose)
      o.summary << "row\t" << fmt(r.kappa) << '\t' << (r.converged ? "converged" : "unconverged")
                << '\t' << r.iterations << '\n';
  }
  o.table = std::move(t);
  int code = kExitOk;
  if (!rep.monotone) {
    o.errors << "check failed: verdicts are not monotone in kappa "
                "(discretization too coarse)\n";
    code = kExitCheckFailed;
  }
  if (std::isnan(rep.kappa_hat)) {
    o.errors << "check failed: no verdict transition on the kappa grid\n";
    code = kExitCheckFailed;
  } else if (std::abs(rep.kappa_hat - ks) > band) {
    o.errors << "check failed: transition " << fmt(rep.kappa_hat)
             << " is farther than " << fmt(band) << " from kappa* = " << fmt(ks)
             << '\n';
    code = kExitCheckFailed;
  }
  return code;
}

int cmd_kprime(const RunConfig& c, Output& o) {
  const Metric m = read_metric(c);
  const Params p(c);
  const auto prof = warped(m);
  const KappaPrime kp = nonradial_ricci_constant(*prof, p.integer("k_max", 2, 60));
  const double hardy = 0.25 * (m.n - 2) * (m.n - 2);
  o.summary << "metric\t" << prof->describe() << '\n'
            << "kappa_prime\t" << fmt(kp.value) << '\n'
            << "converged\t" << (kp.converged ? "yes" : "no") << '\n'
            << "hardy_constant\t" << fmt(hardy) << '\n'
            << "verdict\t" << to_string(nonexistence_verdict(kp.value, m.n)) << '\n';
  Table t({"rho", "rho2_ricci", "extrapolant"});
  for (std::size_t k = 0; k < kp.samples.size(); ++k)
    t.add({fmt(kp.radii[k]), fmt(kp.samples[k]),
           k < kp.extrapolants.size() ? fmt(kp.extrapolants[k]) : "nan"});
  o.table = std::move(t);
  if (!kp.converged) {
    o.errors << "check failed: rho^2 Ric did not settle on the ladder\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

const KeyInfo* find_key(const std::string& key, const std::string& section) {
  for (const KeyInfo& k : kKeys)
    if (k.key == key && k.section == section) return &k;
  return nullptr;
}

}  // namespace

const std::vector<KeyInfo>& known_keys() { return kKeys; }
const std::vector<std::string>& command_names() { return kCommands; }

RunConfig::RunConfig() {
  for (const KeyInfo& k : kKeys) values_[storage_key(k)] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value,
                    const std::string& section) {
  const KeyInfo* info = nullptr;
  if (section.empty()) {
    info = find_key(key, "run");
    if (!info) info = find_key(key, "metric");
    if (!info) {
      // Bare command key: belongs to the selected command.
      info = find_key(key, command());
      if (!info)
        throw ConfigError("unknown key '" + key + "' for command " + command());
    }
  } else {
    if (section != "run" && section != "metric" &&
        std::find(kCommands.begin(), kCommands.end(), section) == kCommands.end())
      throw ConfigError("unknown section [" + section + "]");
    info = find_key(key, section);
    if (!info)
      throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
  }
  if (info->key == "command" &&
      std::find(kCommands.begin(), kCommands.end(), value) == kCommands.end())
    throw ConfigError("unknown command '" + value + "'");
  values_[storage_key(*info)] = value;
}

const std::string& RunConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

std::string RunConfig::command() const { return raw("command"); }

double RunConfig::real(const std::string& key, double lo, double hi) const {
  const std::string& s = raw(key);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v))
    throw ConfigError(key + " = '" + s + "' is not a finite number");
  if (v < lo || v > hi)
    throw ConfigError(key + " = " + s + " lies outside [" + fmt(lo) + ", " +
                      fmt(hi) + "]");
  return v;
}

int RunConfig::integer(const std::string& key, int lo, int hi) const {
  const std::string& s = raw(key);
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw ConfigError(key + " = '" + s + "' is not an integer");
  if (v < lo || v > hi)
    throw ConfigError(key + " = " + s + " lies outside [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& s = raw(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + " = '" + s + "' is not a boolean");
}

std::string RunConfig::dump() const {
  std::ostringstream os;
  std::string section;
  for (const KeyInfo& k : kKeys) {
    if (k.section != section) {
      section = k.section;
      os << '[' << section << "]\n";
    }
    os << k.key << " = " << values_.at(storage_key(k)) << '\n';
  }
  return os.str();
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  struct Entry {
    int line;
    std::string section, key, value;
  };
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string line, section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = origin + ":" + std::to_string(number) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    entries.push_back({number, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1))});
  }
  RunConfig cfg;
  // The command decides where bare command keys go, so it is applied first.
  for (const Entry& e : entries)
    if (e.key == "command" && (e.section.empty() || e.section == "run"))
      cfg.set(e.key, e.value, e.section);
  for (const Entry& e : entries) {
    try {
      cfg.set(e.key, e.value, e.section);
    } catch (const ConfigError& err) {
      throw ConfigError(origin + ":" + std::to_string(e.line) + ": " + err.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

int run(const RunConfig& config, std::ostream& summary, std::ostream& errors) {
  Output o{summary, errors, false, std::nullopt};
  int code = kExitOk;
  try {
    o.verbose = config.flag("verbose");
    const std::string cmd = config.command();
    o.summary << "command\t" << cmd << '\n';
    if (cmd == "metric-show") code = cmd_metric_show(config, o);
    else if (cmd == "metric-check") code = cmd_metric_check(config, o);
    else if (cmd == "curvature-sweep") code = cmd_curvature_sweep(config, o);
    else if (cmd == "barrier-verify") code = cmd_barrier_verify(config, o);
    else if (cmd == "stability-threshold") code = cmd_stability_threshold(config, o);
    else if (cmd == "rayleigh") code = cmd_rayleigh(config, o);
    else if (cmd == "eigen") code = cmd_eigen(config, o);
    else if (cmd == "areamin-solve") code = cmd_areamin_solve(config, o);
    else if (cmd == "areamin-scan") code = cmd_areamin_scan(config, o);
    else code = cmd_kprime(config, o);
  } catch (const ConfigError& e) {
    errors << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ThresholdViolation& e) {
    errors << "precondition failed: " << e.what();
    if (std::string(e.what()).find("kappa*") == std::string::npos)
      errors << " (kappa* = " << fmt(e.kappa_star()) << ")";
    errors << '\n';
    return kExitUsage;
  } catch (const PreconditionViolation& e) {
    errors << "precondition failed: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    errors << "parameter out of range: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IntegrationFailure& e) {
    errors << "check failed: " << e.what() << " (r = " << fmt(e.offending_r())
           << ")\n";
    return kExitCheckFailed;
  } catch (const std::runtime_error& e) {
    errors << "check failed: " << e.what() << '\n';
    return kExitCheckFailed;
  }

  if (o.table) {
    const std::string& path = config.raw("out");
    if (path.empty()) {
      o.table->write(summary);
    } else {
      std::ofstream out(path);
      if (!out) {
        errors << "configuration error: cannot write '" << path << "'\n";
        return kExitUsage;
      }
      o.table->write(out);
      summary << "table\t" << path << '\n';
    }
  }
  return code;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"mcs-lab: minimal hypersurfaces in conical metrics"};
  std::string config_path, out;
  std::optional<long> seed;
  bool verbose = false, list_keys = false;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", out, "table output path");
  app.add_option("--seed", seed, "seed for randomized suites");
  app.add_flag("--verbose", verbose, "print progress details");
  app.add_option("--set", sets, "extra key=value (or section.key=value) settings");
  app.add_flag("--list-keys", list_keys, "print every key with its default and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    RunConfig cfg = config_path.empty() ? RunConfig() : load_config(config_path);
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      std::string key = trim(s.substr(0, eq)), section;
      const std::string value = trim(s.substr(eq + 1));
      const auto dot = key.rfind('.');
      if (dot != std::string::npos) {
        section = key.substr(0, dot);
        key = key.substr(dot + 1);
      }
      cfg.set(key, value, section);
    }
    if (!out.empty()) cfg.set("out", out);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (verbose) cfg.set("verbose", "true");
    if (list_keys) {
      for (const KeyInfo& k : kKeys)
        std::cout << '[' << k.section << "]\t" << k.key << "\t"
                  << (k.default_value.empty() ? "(empty)" : k.default_value) << '\t'
                  << k.help << '\n';
      return kExitOk;
    }
    return run(cfg, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace mcs::cli

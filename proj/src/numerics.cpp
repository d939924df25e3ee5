#include "mcs/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "mcs/errors.hpp"

namespace mcs::num {

namespace {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const RealFn& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double fsum = f(c - dx) + f(c + dx);
    resk += kWgk[j] * fsum;
    if (j % 2 == 1) resg += kWg[j / 2] * fsum;
  }
  return {a, b, resk * h, std::abs((resk - resg) * h)};
}

struct GaussLegendre20 {
  std::array<double, 20> x{};
  std::array<double, 20> w{};
  GaussLegendre20() {
    constexpr int n = 20;
    for (int i = 0; i < n; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

const GaussLegendre20& gl20() {
  static const GaussLegendre20 rule;
  return rule;
}

}  // namespace

const double Gauss5::nodes[5] = {-0.906179845938663992797626878299393,
                                 -0.538469310105683091036314420700208, 0.0,
                                 0.538469310105683091036314420700208,
                                 0.906179845938663992797626878299393};
const double Gauss5::weights[5] = {0.236926885056189087514264040719918,
                                   0.478628670499366468041291514835639,
                                   0.568888888888888888888888888888889,
                                   0.478628670499366468041291514835639,
                                   0.236926885056189087514264040719918};

QuadratureResult integrate(const RealFn& f, double a, double b,
                           const QuadratureOptions& opts) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<Panel> heap;
  Panel first = gk15(f, a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  std::size_t panels = 1;
  auto done = [&] {
    return total_err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
  };
  while (!done() && panels < opts.max_panels) {
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {  // cannot split further
      heap.push(worst);
      break;
    }
    Panel left = gk15(f, worst.a, mid);
    Panel right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum to drop accumulated update error.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = total_err;
  out.panels = panels;
  out.converged = std::isfinite(total) && done();
  return out;
}

double integrate_checked(const RealFn& f, double a, double b,
                         const QuadratureOptions& opts) {
  const QuadratureResult r = integrate(f, a, b, opts);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "quadrature on [" << a << ", " << b << "] did not converge: value "
        << r.value << ", error estimate " << r.error << " after " << r.panels
        << " panels";
    throw QuadratureDivergence(msg.str());
  }
  return r.value;
}

double gauss_legendre20(const RealFn& f, double a, double b) {
  const auto& rule = gl20();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 20; ++i) sum += rule.w[i] * f(c + h * rule.x[i]);
  return sum * h;
}

double safeguarded_newton(const std::function<ValueAndSlope(double)>& fdf,
                          double lo, double hi, double tol, int max_iter) {
  ValueAndSlope flo = fdf(lo);
  ValueAndSlope fhi = fdf(hi);
  if (flo.f == 0.0) return lo;
  if (fhi.f == 0.0) return hi;
  if ((flo.f > 0.0) == (fhi.f > 0.0)) {
    std::ostringstream msg;
    msg << "no sign change on bracket [" << lo << ", " << hi << "]: f(lo) = "
        << flo.f << ", f(hi) = " << fhi.f;
    throw InversionFailure(msg.str());
  }
  // Orient so that f(lo) < 0 < f(hi).
  if (flo.f > 0.0) std::swap(lo, hi);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    const ValueAndSlope v = fdf(x);
    if (v.f == 0.0) return x;
    if (v.f < 0.0)
      lo = x;
    else
      hi = x;
    double next = x - v.f / v.df;
    const bool inside = std::isfinite(next) &&
                        ((next - lo) * (next - hi) < 0.0);
    if (!inside) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= tol || std::abs(hi - lo) <= tol) return x;
  }
  std::ostringstream msg;
  msg << "safeguarded Newton did not converge; final bracket [" << lo << ", "
      << hi << "]";
  throw InversionFailure(msg.str());
}

MonotoneIntegral::MonotoneIntegral(RealFn integrand, std::vector<double> nodes,
                                   double cell_tol)
    : f_(std::move(integrand)), nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw DomainError("MonotoneIntegral needs >= 2 nodes");
  cumulative_.assign(nodes_.size(), 0.0);
  QuadratureOptions opts;
  opts.abs_tol = cell_tol;
  opts.rel_tol = 1e-15;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1]))
      throw DomainError("MonotoneIntegral nodes must be strictly increasing");
    const double cell = integrate_checked(f_, nodes_[i - 1], nodes_[i], opts);
    if (!(cell > 0.0)) {
      std::ostringstream msg;
      msg << "integrand not positive on [" << nodes_[i - 1] << ", "
          << nodes_[i] << "]";
      throw InversionFailure(msg.str());
    }
    cumulative_[i] = cumulative_[i - 1] + cell;
  }
}

std::size_t MonotoneIntegral::cell_of_x(double x) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, nodes_.size() - 2);
}

double MonotoneIntegral::value(double x) const {
  const std::size_t i = cell_of_x(x);
  if (x == nodes_[i]) return cumulative_[i];
  return cumulative_[i] + gauss_legendre20(f_, nodes_[i], x);
}

double MonotoneIntegral::inverse(double v, double tol) const {
  if (v <= 0.0) return nodes_.front();
  if (v >= cumulative_.back()) return nodes_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), v);
  const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  const double a = nodes_[i];
  const double b = nodes_[i + 1];
  const double base = cumulative_[i];
  auto fdf = [&](double x) {
    return ValueAndSlope{base + gauss_legendre20(f_, a, x) - v, f_(x)};
  };
  return safeguarded_newton(fdf, a, b, tol);
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 3 || y_.size() != n)
    throw DomainError("cubic spline needs >= 3 matching (x, y) pairs");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1]))
      throw DomainError("cubic spline abscissae must be strictly increasing");
  // Natural end conditions: m_0 = m_{n-1} = 0.
  m_.assign(n, 0.0);
  Tridiagonal sys;
  sys.diag.resize(n - 2);
  sys.off.resize(n > 3 ? n - 3 : 0);
  std::vector<double> rhs(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    sys.diag[i - 1] = (h0 + h1) / 3.0;
    if (i + 2 < n) sys.off[i - 1] = h1 / 6.0;
    rhs[i - 1] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
  }
  const std::vector<double> inner = solve_tridiagonal(sys, rhs);
  std::copy(inner.begin(), inner.end(), m_.begin() + 1);
}

CubicSpline::Sample CubicSpline::operator()(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  i = std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, x_.size() - 2);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  const double value = a * y_[i] + b * y_[i + 1] +
                       ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) *
                           h * h / 6.0;
  const double d1 = (y_[i + 1] - y_[i]) / h -
                    (3.0 * a * a - 1.0) * h * m_[i] / 6.0 +
                    (3.0 * b * b - 1.0) * h * m_[i + 1] / 6.0;
  const double d2 = a * m_[i] + b * m_[i + 1];
  return {value, d1, d2};
}

LadderLimit richardson_ladder(std::span<const double> samples, double rel_tol) {
  LadderLimit out;
  out.samples.assign(samples.begin(), samples.end());
  if (samples.empty()) return out;
  std::vector<double> row(samples.begin(), samples.end());
  out.extrapolants.push_back(row.back());
  double factor = 1.0;
  // Each level removes the next power of 1/radius.
  while (row.size() > 1) {
    factor *= 2.0;
    std::vector<double> next(row.size() - 1);
    for (std::size_t k = 0; k + 1 < row.size(); ++k)
      next[k] = (factor * row[k + 1] - row[k]) / (factor - 1.0);
    row = std::move(next);
    out.extrapolants.push_back(row.back());
  }
  // Take the first level where successive extrapolants agree.
  out.value = out.extrapolants.back();
  for (std::size_t j = 1; j < out.extrapolants.size(); ++j) {
    const double a = out.extrapolants[j - 1];
    const double b = out.extrapolants[j];
    if (std::abs(b - a) <= rel_tol * std::max(std::abs(b), 1e-300) ||
        (a == 0.0 && b == 0.0)) {
      out.value = b;
      out.converged = true;
      break;
    }
  }
  return out;
}

namespace {

std::size_t inertia_count(const std::vector<double>& diag,
                          const std::vector<double>& off) {
  std::size_t negatives = 0;
  double d = 0.0;
  const double tiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < diag.size(); ++i) {
    d = diag[i] - (i == 0 ? 0.0 : off[i - 1] * off[i - 1] / d);
    if (d == 0.0) d = -tiny;
    if (d < 0.0) ++negatives;
  }
  return negatives;
}

double gershgorin_radius(const Tridiagonal& m) {
  double r = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double row = std::abs(m.diag[i]);
    if (i > 0) row += std::abs(m.off[i - 1]);
    if (i < m.off.size()) row += std::abs(m.off[i]);
    r = std::max(r, row);
  }
  return r;
}

}  // namespace

std::size_t count_below(const Tridiagonal& a, const Tridiagonal& b, double mu) {
  std::vector<double> d(a.size()), e(a.off.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a.diag[i] - mu * b.diag[i];
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = a.off[i] - mu * b.off[i];
  return inertia_count(d, e);
}

std::size_t count_below(const Tridiagonal& a, double mu) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a.diag[i] - mu;
  return inertia_count(d, a.off);
}

bool positive_definite(const Tridiagonal& m) {
  double d = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    d = m.diag[i] - (i == 0 ? 0.0 : m.off[i - 1] * m.off[i - 1] / d);
    if (!(d > 0.0)) return false;
  }
  return true;
}

double pencil_eigenvalue(const Tridiagonal& a, const Tridiagonal& b,
                         std::size_t k, double rel_tol) {
  if (k == 0 || k > a.size()) throw DomainError("eigenvalue index out of range");
  if (!positive_definite(b))
    throw SolverFailure("mass matrix is not positive definite");
  double scale = std::max(gershgorin_radius(a), 1.0);
  double lo = -scale, hi = scale;
  for (int i = 0; count_below(a, b, lo) >= k; ++i) {
    lo *= 2.0;
    if (i > 200) throw SolverFailure("could not bracket eigenvalue from below");
  }
  for (int i = 0; count_below(a, b, hi) < k; ++i) {
    hi *= 2.0;
    if (i > 200) throw SolverFailure("could not bracket eigenvalue from above");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(a, b, mid) >= k)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= rel_tol * std::max(std::abs(lo), std::abs(hi)) ||
        hi - lo <= std::numeric_limits<double>::min())
      break;
  }
  return 0.5 * (lo + hi);
}

double tridiagonal_eigenvalue(const Tridiagonal& a, std::size_t k,
                              double rel_tol) {
  Tridiagonal identity;
  identity.diag.assign(a.size(), 1.0);
  identity.off.assign(a.off.size(), 0.0);
  return pencil_eigenvalue(a, identity, k, rel_tol);
}

std::vector<double> solve_tridiagonal(const Tridiagonal& m,
                                      std::span<const double> rhs) {
  const std::size_t n = m.size();
  std::vector<double> c(n, 0.0), d(rhs.begin(), rhs.end());
  double denom = m.diag[0];
  if (denom == 0.0) throw SolverFailure("zero pivot in tridiagonal solve");
  if (n > 1) c[0] = m.off[0] / denom;
  d[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = m.diag[i] - m.off[i - 1] * c[i - 1];
    if (denom == 0.0) throw SolverFailure("zero pivot in tridiagonal solve");
    if (i + 1 < n) c[i] = m.off[i] / denom;
    d[i] = (d[i] - m.off[i - 1] * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
  return d;
}

std::vector<double> tridiagonal_eigenvector(const Tridiagonal& a,
                                            double eigenvalue) {
  const std::size_t n = a.size();
  Tridiagonal shifted = a;
  const double shift =
      eigenvalue + 1e-10 * std::max(std::abs(eigenvalue), 1.0);
  for (double& d : shifted.diag) d -= shift;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * std::sin(1.0 + i);
  for (int it = 0; it < 4; ++it) {
    v = solve_tridiagonal(shifted, v);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::vector<double> linspace(double a, double b, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i)
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  out.back() = b;
  return out;
}

std::vector<double> logspace(double a, double b, std::size_t count) {
  std::vector<double> out = linspace(std::log(a), std::log(b), count);
  for (double& x : out) x = std::exp(x);
  out.front() = a;
  out.back() = b;
  return out;
}

}  // namespace mcs::num

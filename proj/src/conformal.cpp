#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcs/errors.hpp"
#include "mcs/radial_metric.hpp"

namespace mcs {

// The conversion integrates d(log r) = d rho / lambda in a log parameter z:
//   areal profiles:  z = log lambda, d(log r)/dz = arc_rate(e^z)
//   generic:         z = log rho,    d(log r)/dz = rho / lambda(rho)
// Both integrands stay inside [1, 1/kappa] for admissible profiles, so the
// tabulated integral is well conditioned down to the pole.

namespace {

constexpr double kZLow = -20.0;
constexpr double kZHighCap = 27.6;  // log(1e12)
constexpr double kZStep = 0.05;

std::vector<double> z_nodes(double lo, double hi) {
  const auto cells =
      static_cast<std::size_t>(std::max(8.0, std::ceil((hi - lo) / kZStep)));
  return num::linspace(lo, hi, cells + 1);
}

}  // namespace

WarpedConformal::WarpedConformal(WarpedProfilePtr profile,
                                 const ConversionOptions& opts)
    : ConformalProfile(profile->n_ambient(),
                       opts.kappa ? opts.kappa : profile->asymptotic_slope()),
      profile_(std::move(profile)) {
  if (!kappa_hint())
    throw DomainError(
        "warped_to_conformal: asymptotic slope kappa unknown for " +
        profile_->describe());
  kappa_ = *kappa_hint();
  if (!(kappa_ > 0.0 && kappa_ <= 1.0))
    throw DomainError("warped_to_conformal: kappa must lie in (0, 1]");
  areal_ = profile_->areal();
  tail_ = profile_->linear_tail();
  if (tail_ && std::abs(tail_->slope - kappa_) > 1e-12)
    throw DomainError("warped_to_conformal: tail slope differs from kappa");

  // Parameter range covered by the table.
  if (areal_) {
    z_lo_ = kZLow;
    z_hi_ = tail_ ? std::log(tail_->lambda0)
                  : std::min(kZHighCap, std::log(areal_->s_end()));
  } else {
    const double lo = profile_->domain_min();
    z_lo_ = lo > 0.0 ? std::log(lo) : kZLow;
    const double hi = tail_ ? tail_->rho0 : std::min(profile_->domain_max(), 1e12);
    z_hi_ = std::log(hi);
  }
  if (!(z_hi_ > z_lo_))
    throw DomainError("warped_to_conformal: empty parameter range");

  try {
    table_ = std::make_unique<num::MonotoneIntegral>(
        [this](double z) { return integrand(z); }, z_nodes(z_lo_, z_hi_));
  } catch (const InversionFailure& e) {
    throw IntegrationFailure(
        std::string("conformal radius is not monotone: ") + e.what(),
        std::numeric_limits<double>::quiet_NaN());
  }

  // Scale normalisation: lambda = kappa r^kappa at the reference point (the
  // start of the linear tail when there is one).
  if (tail_) {
    z_ref_ = z_hi_;
    log_r_ref_ = std::log(tail_->lambda0 / kappa_) / kappa_;
    r_match_ = std::exp(log_r_ref_);
  } else {
    double rho_ref = opts.rho_ref;
    if (!areal_) {
      rho_ref = std::clamp(rho_ref, std::exp(z_lo_), std::exp(z_hi_));
      z_ref_ = std::log(rho_ref);
      log_r_ref_ = std::log(profile_->at(rho_ref).lambda / kappa_) / kappa_;
    } else {
      z_ref_ = std::clamp(0.0, z_lo_, z_hi_);  // lambda = 1
      log_r_ref_ = (z_ref_ - std::log(kappa_)) / kappa_;
    }
    r_match_ = std::numeric_limits<double>::infinity();
  }

  // Sampled check of monotonicity and of -2(1-kappa)/r <= Phi' <= 0.
  const double log_r_lo = log_r_of_z(z_lo_);
  const double log_r_hi = log_r_of_z(z_hi_);
  double prev_rho = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double log_r = log_r_lo + (log_r_hi - log_r_lo) * i / 400.0;
    const double r = std::exp(log_r);
    const ConformalSample c = at(r);
    const double lower = -2.0 * (1.0 - kappa_) / r - opts.bound_tol / r;
    const double upper = opts.bound_tol / r;
    if (!(c.d_phi >= lower && c.d_phi <= upper)) {
      std::ostringstream msg;
      msg << "conformal exponent bound -2(1-kappa)/r <= Phi' <= 0 violated at r = "
          << r << " (Phi' r = " << c.d_phi * r << ", kappa = " << kappa_ << ")";
      throw IntegrationFailure(msg.str(), r);
    }
    const double rho = rho_of_r(r);
    if (!(rho > prev_rho)) {
      std::ostringstream msg;
      msg << "radius map r -> rho is not increasing at r = " << r;
      throw IntegrationFailure(msg.str(), r);
    }
    prev_rho = rho;
  }
}

double WarpedConformal::integrand(double z) const {
  if (areal_) return areal_->arc_rate(std::exp(z));
  const double rho = std::exp(z);
  return rho / profile_->at(rho).lambda;
}

WarpSample WarpedConformal::warp_at_z(double z) const {
  if (!areal_) return profile_->at(std::exp(z));
  const double s = std::exp(z);
  const double sigma = areal_->arc_rate(s);
  WarpSample w;
  w.lambda = s;
  w.d_lambda = 1.0 / sigma;
  w.dd_lambda = -areal_->d_arc_rate(s) / (sigma * sigma * sigma);
  w.one_minus_slope_sq = areal_->arc_rate_sq_minus_one(s) / (sigma * sigma);
  return w;
}

double WarpedConformal::log_r_of_z(double z) const {
  const double base = log_r_ref_ - table_->value(z_ref_);
  if (z < z_lo_) return base + (z - z_lo_) * integrand(z_lo_);
  if (z > z_hi_) return base + table_->total() + (z - z_hi_) * integrand(z_hi_);
  return base + table_->value(z);
}

double WarpedConformal::z_of_log_r(double log_r) const {
  const double base = log_r_ref_ - table_->value(z_ref_);
  const double v = log_r - base;
  if (v < 0.0) return z_lo_ + v / integrand(z_lo_);
  if (v > table_->total()) {
    if (!tail_ && !areal_ && profile_->domain_max() < 1e12) {
      std::ostringstream msg;
      msg << "conformal radius exp(" << log_r << ") maps beyond the profile's "
          << "domain (rho > " << std::exp(z_hi_) << ")";
      throw DomainError(msg.str());
    }
    return z_hi_ + (v - table_->total()) / integrand(z_hi_);
  }
  return table_->inverse(v, 1e-13);
}

bool WarpedConformal::singular_at_origin() const {
  return !profile_->pole_regular();
}

ConformalSample WarpedConformal::at(double r) const {
  if (!(r > 0.0)) {
    if (r == 0.0 && profile_->pole_regular()) {
      const ConformalSample c = at(1e-300);
      return {c.phi, 0.0, c.dd_phi};
    }
    throw DomainError("conformal profile evaluated at r <= 0");
  }
  const double log_r = std::log(r);
  if (tail_ && r >= r_match_) {
    const double a = 2.0 * (1.0 - kappa_);
    return {2.0 * std::log(kappa_) - a * log_r, -a / r, a / (r * r)};
  }
  const double z = z_of_log_r(log_r);
  const WarpSample w = warp_at_z(z);
  const double log_lambda = areal_ ? z : std::log(w.lambda);
  // 1 - lambda' written through 1 - lambda'^2 to keep the pole accurate.
  const double deficit = w.one_minus_slope_sq / (1.0 + w.d_lambda);
  ConformalSample c;
  c.phi = 2.0 * (log_lambda - log_r);
  c.d_phi = -2.0 * deficit / r;
  c.dd_phi = 2.0 * (w.lambda * w.dd_lambda + deficit) / (r * r);
  return c;
}

double WarpedConformal::rho_of_r(double r) const {
  if (r <= 0.0) return 0.0;
  if (tail_ && r >= r_match_) {
    const double lambda = kappa_ * std::pow(r, kappa_);
    return tail_->rho0 + (lambda - tail_->lambda0) / kappa_;
  }
  const double z = z_of_log_r(std::log(r));
  if (areal_) return areal_->rho_of_s(std::exp(z));
  return std::exp(z);
}

std::string WarpedConformal::describe() const {
  std::ostringstream s;
  s << "conformal[" << profile_->describe() << "]";
  return s.str();
}

std::shared_ptr<const WarpedConformal> warped_to_conformal(
    WarpedProfilePtr profile, const ConversionOptions& opts) {
  return std::make_shared<WarpedConformal>(std::move(profile), opts);
}

}  // namespace mcs

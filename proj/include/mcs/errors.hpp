#pragma once

#include <stdexcept>
#include <string>

namespace mcs {

// Bad argument outside an operation's documented range (kappa outside (0,1],
// grid too small, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A hypothesis of a theorem-level check does not hold (e.g. kappa below the
// barrier threshold, conformal exponent bound violated).
class PreconditionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// kappa below 2 sqrt(n-1)/n where the barrier exponent needs a real root.
class ThresholdViolation : public PreconditionViolation {
 public:
  ThresholdViolation(const std::string& what, double kappa_star)
      : PreconditionViolation(what), kappa_star_(kappa_star) {}
  double kappa_star() const noexcept { return kappa_star_; }

 private:
  double kappa_star_;
};

// Adaptive quadrature hit its panel cap or produced a non-finite value.
class QuadratureDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Monotone inversion could not bracket or converge.
class InversionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Conformal conversion produced a non-monotone radius map or broke the
// exponent bound; carries the offending conformal radius.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, double r)
      : std::runtime_error(what), r_(r) {}
  double offending_r() const noexcept { return r_; }

 private:
  double r_;
};

// Eigen/linear-algebra breakdown (indefinite mass matrix, no bracket, ...).
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcs

#include "fbq/special_functions.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fbq/error.hpp"

namespace fbq {

namespace {

void check_shape(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("incomplete gamma shape must be positive");
}

}  // namespace

IncompleteGammaPair incomplete_gamma(double a, double x) {
  check_shape(a);
  if (!(x >= 0.0)) throw DomainError("incomplete gamma argument must be nonnegative");
  IncompleteGammaPair r;
  r.a = a;
  r.x = x;
  const double full = std::tgamma(a);
  if (std::isinf(x)) {
    r.lower = full;
    r.upper = 0.0;
  } else if (x == 0.0) {
    r.lower = 0.0;
    r.upper = full;
  } else {
    r.lower = boost::math::tgamma_lower(a, x);
    r.upper = boost::math::tgamma(a, x);
  }
  return r;
}

double inverse_upper_gamma(double a, double target) {
  check_shape(a);
  const double full = std::tgamma(a);
  if (!(target > 0.0) || target > full) throw InfeasibleError("no finite threshold");
  if (target == full) return 0.0;
  return boost::math::gamma_q_inv(a, target / full);
}

double gamma_p(double a, double x) {
  check_shape(a);
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(a, x);
}

double gamma_q(double a, double x) {
  check_shape(a);
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(a, x);
}

double log_gamma_p(double a, double log_x) {
  check_shape(a);
  if (log_x < -30.0) {
    // P(a,x) = x^a e^{-x} / Gamma(a+1) * (1 + x/(a+1) + ...); x < 1e-13 here.
    const double x = std::exp(log_x);
    return a * log_x - x - std::lgamma(a + 1.0) + std::log1p(x / (a + 1.0));
  }
  const double p = gamma_p(a, std::exp(log_x));
  if (p > 0.0) return std::log(p);
  return a * log_x - std::exp(log_x) - std::lgamma(a + 1.0);
}

double gamma_p_inv(double a, double p) {
  check_shape(a);
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::gamma_p_inv(a, p);
}

double gamma_q_inv(double a, double q) {
  check_shape(a);
  if (q >= 1.0) return 0.0;
  if (q <= 0.0) return std::numeric_limits<double>::infinity();
  return boost::math::gamma_q_inv(a, q);
}

double expint_e1(double x) {
  if (!(x > 0.0)) throw DomainError("E1 requires x > 0");
  if (std::isinf(x)) return 0.0;
  return boost::math::expint(1, x);
}

double expint_e1_inv(double y) {
  if (!(y > 0.0)) throw InfeasibleError("no finite threshold");
  // E1 is decreasing; bisect on log x.
  double lo = -745.0;
  double hi = 7.0;
  while (expint_e1(std::exp(hi)) > y) hi += 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (expint_e1(std::exp(mid)) > y) lo = mid;
    else hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

double student_t_quantile(double dof, double p) {
  if (!(dof > 0.0)) throw DomainError("Student-t needs positive degrees of freedom");
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, p);
}

}  // namespace fbq

#pragma once

namespace fbq {

// Unregularized incomplete gamma integrals at (a, x).
struct IncompleteGammaPair {
  double a = 0.0;
  double x = 0.0;
  double lower = 0.0;  // integral_0^x t^{a-1} e^{-t} dt
  double upper = 0.0;  // integral_x^inf t^{a-1} e^{-t} dt
};

// a > 0, x >= 0 (x may be +inf).
IncompleteGammaPair incomplete_gamma(double a, double x);

// Solves upper(a, x) = target for x. Throws InfeasibleError("no finite threshold")
// when target is outside (0, Gamma(a)].
double inverse_upper_gamma(double a, double target);

// Regularized forms P(a,x) and Q(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// log P(a, e^{log_x}); stays finite when P underflows.
double log_gamma_p(double a, double log_x);

// Inverses of the regularized forms.
double gamma_p_inv(double a, double p);
double gamma_q_inv(double a, double q);

// E1(x) = integral_x^inf e^{-t}/t dt, x > 0.
double expint_e1(double x);

// Inverse of E1 on (0, inf).
double expint_e1_inv(double y);

// Two-sided Student-t quantile used for confidence intervals.
double student_t_quantile(double dof, double p);

}  // namespace fbq

#pragma once

namespace mfpca::special {

/// Standard normal upper tail P(Z > z).
double normal_upper_tail(double z);

/// Regularized incomplete beta I_x(a, b), absolute accuracy ~1e-14.
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value P(|T| > |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

/// Asymptotic Kolmogorov distribution P(sqrt(n) D > x).
double kolmogorov_upper_tail(double x);

} // namespace mfpca::special

#pragma once

namespace maleval::stats {

/// Regularized incomplete beta function I_x(a, b) via Lentz's continued
/// fraction; absolute accuracy ~1e-12 on the tested domain.
double reg_incomplete_beta(double a, double b, double x);

/// P(T > t) for Student's t with `df` degrees of freedom.
double student_t_sf(double t, double df);

/// Two-sided p-value P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);

}  // namespace maleval::stats

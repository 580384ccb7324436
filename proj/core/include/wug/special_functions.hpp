#ifndef WUG_SPECIAL_FUNCTIONS_HPP
#define WUG_SPECIAL_FUNCTIONS_HPP

namespace wug {

// Regularized incomplete beta I_x(a, b), continued fraction with the
// modified Lentz algorithm.
double incomplete_beta(double a, double b, double x);

// Regularized lower incomplete gamma P(a, x) and upper Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Two-sided p-value for a Student-t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

// Upper tail of the chi-squared distribution.
double chi2_sf(double x, double df);

} // namespace wug

#endif

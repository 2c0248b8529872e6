#pragma once

namespace magic {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double chisq_cdf(double x, int df);
// Upper tail 1 - F(x); evaluated directly so small p-values keep precision.
double chisq_sf(double x, int df);
// Upper-alpha critical value: the (1 - alpha) quantile, so chisq_sf(result) = alpha.
double chisq_quantile(double alpha, int df);

// z with P(|N(0,1)| <= z) = level, from the df=1 chi-square quantile.
double normal_critical(double level);

}  // namespace magic

#pragma once

// Special functions for the distribution layer. Accuracy target is 1e-10
// absolute on probabilities; log_gamma is good to ~1e-15 relative.

namespace survtest::special {

/// ln Γ(x) for x > 0 (Lanczos, g = 7, reflection for x < 0.5).
double log_gamma(double x);

/// Regularized lower incomplete gamma P(a, x). Series for x < a + 1,
/// Lentz continued fraction for the complement otherwise.
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Same as gamma_p with a precomputed ln Γ(a), for hot loops.
double gamma_p(double a, double x, double log_gamma_a);

double normal_cdf(double x);

/// Upper tail 1 - Φ(x), accurate for large x.
double normal_sf(double x);

/// Φ^{-1}(p) for p in (0,1): Acklam's rational approximation refined by one Halley step.
double normal_quantile(double p);

/// Chi-square CDF; df > 0.
double chisq_cdf(double df, double x);

}  // namespace survtest::special

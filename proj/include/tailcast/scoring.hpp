#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tailcast/distributions.hpp"

namespace tailcast {

enum class CrpsBranch { BelowU, AboveU };

/// Decomposition of the mixture CRPS into the censored-body part (F1) and the
/// spliced-tail part (F2). total == crps_f1_part + crps_f2_part.
struct CrpsBreakdown {
  double crps_f1_part = 0.0;
  double crps_f2_part = 0.0;
  double total = 0.0;
  CrpsBranch branch = CrpsBranch::BelowU;
};

/// CRPS of the standardized censored normal with point masses: body
/// p + (1-p)*Phi on [c,u), a jump of size p + (1-p)*Phi(c) at c and
/// (1-p)*(1-Phi(u)) at u. Arguments are in standardized space (mu=0, sigma=1).
double crps_f1_standard(double p, double c, double u, double y);

/// Location-scale form: sigma * crps_f1_standard on standardized arguments.
double crps_f1(double p, double mu, double sigma, double c, double u, double y);

/// Specialized closed form for the observation sitting exactly at u.
double crps_f1_at_u(double p, double mu, double sigma, double c, double u);

/// CRPS of the GPD with point mass M at the threshold u, evaluated at y >= u.
/// Requires xi < 1 (the closed form does not exist otherwise).
double crps_f2(double m, double u, double sigma_u, double xi, double y);

/// CRPS(F2, u) = sigma_u * (1-M)^2 / (2-xi).
double crps_f2_at_u(double m, double sigma_u, double xi);

/// Full mixture CRPS: CRPS(F1,y) + CRPS(F2,u) below the threshold,
/// CRPS(F1,u) + CRPS(F2,y) above. Observations must satisfy y >= c.
CrpsBreakdown crps_mixture(const TailedMixtureParams& params, double y);

/// Classic closed form sigma*(z*(2*Phi(z)-1) + 2*phi(z) - 1/sqrt(pi)).
double crps_normal(double mu, double sigma, double y);

/// CRPS dispatched by variant: plain normal closed form, or the mixture
/// closed form (whose tail part vanishes when u is effectively unbounded).
double variant_crps(const DistributionVariant& v, double y);

/// Empirical-CDF CRPS: mean|X_i - y| - sum_ij |X_i - X_j| / (2 m^2).
double crps_ensemble(std::span<const double> members, double y);

/// Squared probability error for a binary event.
double brier_score(double prob, bool occurred);

/// Pinball loss (1{y<=q} - alpha) * (q - y), unscaled.
double quantile_score(double q, double y, double alpha);

/// Numeric CRPS oracle: adaptive Simpson integration of (F(x) - 1{y<=x})^2
/// over [lower, upper], split at y and at any supplied breakpoints (jump or
/// kink locations of F). Throws numeric_error when the tolerance cannot be
/// reached. Anything outside [lower, upper] is the caller's responsibility.
double crps_quadrature_oracle(const std::function<double(double)>& cdf, double y,
                              double lower, double upper,
                              std::span<const double> breakpoints = {},
                              double abs_tol = 1e-8);

/// Oracle specialized to the mixture: integrates on
/// [c-1, max(y, u, quantile(1-1e-9))] with breakpoints at c, y, u plus
/// geometrically spaced tail splits, and adds the analytic GPD tail remainder
/// integral of (1-F)^2 above the cutoff in closed form.
double crps_mixture_quadrature(const TailedMixtureParams& params, double y);

}  // namespace tailcast

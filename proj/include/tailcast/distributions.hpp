#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tailcast/normal.hpp"

namespace tailcast {

inline constexpr double kDefaultEpsilonMm = 0.01;
inline constexpr double kDefaultCensor = -4.605170185988091;  // log(0.01)
inline constexpr double kThresholdGap = 1e-6;                 // u must exceed c by this
inline constexpr double kSigmaFloor = 1e-3;
// Stand-in for an unbounded censor/threshold in the degenerate variants.
inline constexpr double kUnboundedLimit = 1e8;

/// Predictive distribution of log-transformed precipitation: a point mass p at
/// the censor point c = log(epsilon), a censored normal body on [c,u], and a
/// generalized Pareto tail above u.
struct TailedMixtureParams {
  double p = 0.0;        // point mass at c
  double mu = 0.0;       // normal location
  double sigma = 1.0;    // normal scale, > 0
  double u = 1.0;        // GPD threshold, > c
  double sigma_u = 1.0;  // GPD scale, > 0
  double xi = 0.0;       // GPD shape, < 1
  double c = kDefaultCensor;
};

/// Throws std::domain_error if the invariants (sigma > 0, sigma_u > 0,
/// p in [0,1], u > c + 1e-6, xi < 1) do not hold.
void validate(const TailedMixtureParams& params);

enum class VariantTag { PlainNormal, NormalPointMass, NormalPointMassGPD };

/// Baseline/full-model selector. PlainNormal reads only (mu, sigma);
/// NormalPointMass reads (p, mu, sigma, c); NormalPointMassGPD reads all.
struct DistributionVariant {
  VariantTag tag = VariantTag::NormalPointMassGPD;
  TailedMixtureParams params;
};

const char* variant_name(VariantTag tag);
VariantTag variant_from_name(const std::string& name);

/// CDF of the GPD with threshold u, scale sigma_u and shape xi, evaluated at
/// y >= u. Negative xi is supported; beyond the finite upper endpoint the
/// value clamps to 1.
double gpd_cdf(double u, double sigma_u, double xi, double y);

/// Inverse of the standard excess GPD: returns the excess z >= 0 with
/// GPD cdf equal to q in [0,1).
double gpd_quantile_excess(double sigma_u, double xi, double q);

/// Mixture CDF per the piecewise definition: 0 below c, p + (1-p)*Phi on
/// [c,u], spliced GPD above u. Right-continuous with a jump of size
/// p + (1-p)*Phi((c-mu)/sigma) at c.
double mixture_cdf(const TailedMixtureParams& params, double y);

/// Smallest y with mixture_cdf(y) >= tau, tau in (0,1). Analytic inversion in
/// every branch (no root finding).
double mixture_quantile(const TailedMixtureParams& params, double tau);

/// P[rain > threshold_raw mm] = 1 - F(log(threshold_raw + epsilon)).
double exceedance_probability(const TailedMixtureParams& params,
                              double threshold_raw_mm, double epsilon_mm);

/// n i.i.d. draws by inverse transform on uniform variates; bit-identical
/// sequences for a fixed seed.
std::vector<double> mixture_sample(const TailedMixtureParams& params,
                                   std::uint64_t rng_seed, std::size_t n);

// Variant-dispatched forms used by evaluation and the CLI.
double variant_cdf(const DistributionVariant& v, double y);
double variant_quantile(const DistributionVariant& v, double tau);
double variant_exceedance(const DistributionVariant& v, double threshold_raw_mm,
                          double epsilon_mm);

}  // namespace tailcast

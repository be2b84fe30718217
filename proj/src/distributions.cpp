#include "tailcast/distributions.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

namespace tailcast {

void validate(const TailedMixtureParams& params) {
  if (!(params.sigma > 0.0)) {
    throw std::domain_error("TailedMixtureParams: sigma must be > 0");
  }
  if (!(params.sigma_u > 0.0)) {
    throw std::domain_error("TailedMixtureParams: sigma_u must be > 0");
  }
  if (!(params.p >= 0.0 && params.p <= 1.0)) {
    throw std::domain_error("TailedMixtureParams: p must lie in [0,1]");
  }
  if (!(params.u > params.c + kThresholdGap)) {
    throw std::domain_error("TailedMixtureParams: threshold u must exceed c + 1e-6");
  }
  if (!(params.xi < 1.0)) {
    throw std::domain_error("TailedMixtureParams: xi must be < 1");
  }
}

const char* variant_name(VariantTag tag) {
  switch (tag) {
    case VariantTag::PlainNormal: return "normal";
    case VariantTag::NormalPointMass: return "normal_point_mass";
    case VariantTag::NormalPointMassGPD: return "normal_point_mass_gpd";
  }
  return "unknown";
}

VariantTag variant_from_name(const std::string& name) {
  if (name == "normal") return VariantTag::PlainNormal;
  if (name == "normal_point_mass") return VariantTag::NormalPointMass;
  if (name == "normal_point_mass_gpd") return VariantTag::NormalPointMassGPD;
  throw std::invalid_argument("unknown distribution variant: " + name);
}

double gpd_cdf(double u, double sigma_u, double xi, double y) {
  if (!(sigma_u > 0.0)) throw std::domain_error("gpd_cdf: sigma_u must be > 0");
  if (y < u) throw std::domain_error("gpd_cdf: y must be >= u");
  const double z = (y - u) / sigma_u;
  if (xi == 0.0) return 1.0 - std::exp(-z);
  const double t = 1.0 + xi * z;
  if (t <= 0.0) return 1.0;  // beyond the upper endpoint for xi < 0
  return 1.0 - std::pow(t, -1.0 / xi);
}

double gpd_quantile_excess(double sigma_u, double xi, double q) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw std::domain_error("gpd_quantile_excess: q must lie in [0,1)");
  }
  if (xi == 0.0) return -sigma_u * std::log1p(-q);
  return sigma_u / xi * (std::pow(1.0 - q, -xi) - 1.0);
}

namespace {

// F~(y) = p + (1-p) * Phi((y-mu)/sigma), the uncensored body.
double body_cdf(const TailedMixtureParams& pr, double y) {
  return pr.p + (1.0 - pr.p) * normal_cdf((y - pr.mu) / pr.sigma);
}

}  // namespace

double mixture_cdf(const TailedMixtureParams& params, double y) {
  validate(params);
  if (y < params.c) return 0.0;
  if (y <= params.u) return body_cdf(params, y);
  const double m = body_cdf(params, params.u);
  return m + (1.0 - m) * gpd_cdf(params.u, params.sigma_u, params.xi, y);
}

double mixture_quantile(const TailedMixtureParams& params, double tau) {
  validate(params);
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::domain_error("mixture_quantile: tau must lie strictly in (0,1)");
  }
  const double jump = body_cdf(params, params.c);
  if (tau <= jump) return params.c;
  const double m = body_cdf(params, params.u);
  if (tau <= m) {
    const double inner = (tau - params.p) / (1.0 - params.p);
    return params.mu + params.sigma * normal_quantile(inner);
  }
  const double q = (tau - m) / (1.0 - m);
  return params.u + gpd_quantile_excess(params.sigma_u, params.xi, q);
}

double exceedance_probability(const TailedMixtureParams& params,
                              double threshold_raw_mm, double epsilon_mm) {
  if (!(threshold_raw_mm >= 0.0)) {
    throw std::domain_error("exceedance_probability: threshold must be >= 0 mm");
  }
  if (!(epsilon_mm > 0.0)) {
    throw std::domain_error("exceedance_probability: epsilon must be > 0 mm");
  }
  const double t = std::log(threshold_raw_mm + epsilon_mm);
  if (t < params.c) {
    validate(params);
    return 1.0;
  }
  return 1.0 - mixture_cdf(params, t);
}

std::vector<double> mixture_sample(const TailedMixtureParams& params,
                                   std::uint64_t rng_seed, std::size_t n) {
  validate(params);
  std::mt19937_64 rng(rng_seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // uniform strictly inside (0,1); resolution 2^-64
    const double tau = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    out.push_back(mixture_quantile(params, tau));
  }
  return out;
}

double variant_cdf(const DistributionVariant& v, double y) {
  const TailedMixtureParams& pr = v.params;
  switch (v.tag) {
    case VariantTag::PlainNormal:
      return normal_cdf((y - pr.mu) / pr.sigma);
    case VariantTag::NormalPointMass: {
      if (y < pr.c) return 0.0;
      return pr.p + (1.0 - pr.p) * normal_cdf((y - pr.mu) / pr.sigma);
    }
    case VariantTag::NormalPointMassGPD:
      return mixture_cdf(pr, y);
  }
  return 0.0;
}

double variant_quantile(const DistributionVariant& v, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::domain_error("variant_quantile: tau must lie strictly in (0,1)");
  }
  const TailedMixtureParams& pr = v.params;
  switch (v.tag) {
    case VariantTag::PlainNormal:
      return pr.mu + pr.sigma * normal_quantile(tau);
    case VariantTag::NormalPointMass: {
      const double jump = pr.p + (1.0 - pr.p) * normal_cdf((pr.c - pr.mu) / pr.sigma);
      if (tau <= jump) return pr.c;
      return pr.mu + pr.sigma * normal_quantile((tau - pr.p) / (1.0 - pr.p));
    }
    case VariantTag::NormalPointMassGPD:
      return mixture_quantile(pr, tau);
  }
  return 0.0;
}

double variant_exceedance(const DistributionVariant& v, double threshold_raw_mm,
                          double epsilon_mm) {
  if (!(threshold_raw_mm >= 0.0)) {
    throw std::domain_error("variant_exceedance: threshold must be >= 0 mm");
  }
  const double t = std::log(threshold_raw_mm + epsilon_mm);
  return 1.0 - variant_cdf(v, t);
}

}  // namespace tailcast

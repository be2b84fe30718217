#pragma once

#include <cmath>

namespace tailcast {

inline constexpr double kInvSqrt2Pi = 0.3989422804014327;   // 1/sqrt(2*pi)
inline constexpr double kInvSqrt2 = 0.7071067811865476;     // 1/sqrt(2)
inline constexpr double kInvSqrtPi = 0.5641895835477563;    // 1/sqrt(pi)
inline constexpr double kSqrt2 = 1.4142135623730951;

/// Standard normal density.
inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Standard normal CDF via the complementary error function (full double
/// precision across the whole real line, no lookup tables).
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

/// Inverse standard normal CDF (Wichura's AS 241 rational approximation,
/// absolute error well below 1e-9). Throws std::domain_error outside (0,1).
double normal_quantile(double p);

}  // namespace tailcast

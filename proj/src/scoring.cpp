#include "tailcast/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tailcast/errors.hpp"

namespace tailcast {

namespace {

// G(x) = int_{-inf}^x t phi(t) dt = -phi(x).
double big_g(double x) { return -normal_pdf(x); }

// int_c^u G(x) phi(x) dx = -(Phi(sqrt2*u) - Phi(sqrt2*c)) / (2 sqrt(pi)).
double g_phi_integral(double c, double u) {
  return -0.5 * kInvSqrtPi * (normal_cdf(kSqrt2 * u) - normal_cdf(kSqrt2 * c));
}

}  // namespace

double crps_f1_standard(double p, double c, double u, double y) {
  if (!(c < u)) throw std::domain_error("crps_f1_standard: requires c < u");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("crps_f1_standard: p must lie in [0,1]");
  }
  const double q = 1.0 - p;
  const double pc = p + q * normal_cdf(c);
  const double pu = q * (1.0 - normal_cdf(u));
  double f1y;
  if (y < c) {
    f1y = 0.0;
  } else if (y < u) {
    f1y = p + q * normal_cdf(y);
  } else {
    f1y = 1.0;
  }
  double branch;
  if (y < c) {
    branch = q * big_g(c) - c * pc;
  } else if (y < u) {
    branch = q * big_g(y);
  } else {
    branch = q * big_g(u) + u * pu;
  }
  return y * (2.0 * f1y - 1.0) - c * pc * pc + u * pu * pu +
         2.0 * q * (big_g(c) * pc + big_g(u) * pu) - 2.0 * branch +
         2.0 * q * q * g_phi_integral(c, u);
}

double crps_f1(double p, double mu, double sigma, double c, double u, double y) {
  if (!(sigma > 0.0)) throw std::domain_error("crps_f1: sigma must be > 0");
  return sigma * crps_f1_standard(p, (c - mu) / sigma, (u - mu) / sigma,
                                  (y - mu) / sigma);
}

double crps_f1_at_u(double p, double mu, double sigma, double c, double u) {
  if (!(sigma > 0.0)) throw std::domain_error("crps_f1_at_u: sigma must be > 0");
  const double cs = (c - mu) / sigma;
  const double us = (u - mu) / sigma;
  if (!(cs < us)) throw std::domain_error("crps_f1_at_u: requires c < u");
  const double q = 1.0 - p;
  const double pc = p + q * normal_cdf(cs);
  const double pu = q * (1.0 - normal_cdf(us));
  const double val = us - cs * pc * pc + us * pu * pu +
                     2.0 * q * (big_g(cs) * pc + big_g(us) * pu) -
                     2.0 * (q * big_g(us) + us * pu) -
                     q * q * kInvSqrtPi *
                         (normal_cdf(kSqrt2 * us) - normal_cdf(kSqrt2 * cs));
  return sigma * val;
}

double crps_f2(double m, double u, double sigma_u, double xi, double y) {
  if (!(xi < 1.0)) throw std::domain_error("crps_f2: closed form requires xi < 1");
  if (!(sigma_u > 0.0)) throw std::domain_error("crps_f2: sigma_u must be > 0");
  if (y < u) throw std::domain_error("crps_f2: y must be >= u");
  if (!(m >= 0.0 && m <= 1.0)) throw std::domain_error("crps_f2: M must lie in [0,1]");
  const double z = (y - u) / sigma_u;
  // (1 - F_xi(z))^(1-xi), written to stay finite as the survival underflows
  double surv_pow;
  if (xi == 0.0) {
    surv_pow = std::exp(-(1.0 - xi) * z);
  } else {
    const double t = 1.0 + xi * z;
    surv_pow = (t <= 0.0) ? (xi < 0.0 ? 0.0 : 1.0)
                          : std::pow(t, -(1.0 - xi) / xi);
  }
  return sigma_u * (z - 2.0 * (1.0 - m) / (1.0 - xi) * (1.0 - surv_pow) +
                    (1.0 - m) * (1.0 - m) / (2.0 - xi));
}

double crps_f2_at_u(double m, double sigma_u, double xi) {
  if (!(xi < 1.0)) throw std::domain_error("crps_f2_at_u: closed form requires xi < 1");
  if (!(sigma_u > 0.0)) throw std::domain_error("crps_f2_at_u: sigma_u must be > 0");
  return sigma_u * (1.0 - m) * (1.0 - m) / (2.0 - xi);
}

CrpsBreakdown crps_mixture(const TailedMixtureParams& params, double y) {
  validate(params);
  if (y < params.c) {
    throw std::domain_error("crps_mixture: observations live in [c, inf)");
  }
  const double m =
      params.p + (1.0 - params.p) * normal_cdf((params.u - params.mu) / params.sigma);
  CrpsBreakdown out;
  if (y < params.u) {
    out.branch = CrpsBranch::BelowU;
    out.crps_f1_part = crps_f1(params.p, params.mu, params.sigma, params.c, params.u, y);
    out.crps_f2_part = crps_f2_at_u(m, params.sigma_u, params.xi);
  } else {
    out.branch = CrpsBranch::AboveU;
    out.crps_f1_part = crps_f1_at_u(params.p, params.mu, params.sigma, params.c, params.u);
    out.crps_f2_part = crps_f2(m, params.u, params.sigma_u, params.xi, y);
  }
  out.total = out.crps_f1_part + out.crps_f2_part;
  return out;
}

double crps_normal(double mu, double sigma, double y) {
  if (!(sigma > 0.0)) throw std::domain_error("crps_normal: sigma must be > 0");
  const double z = (y - mu) / sigma;
  return sigma * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - kInvSqrtPi);
}

double variant_crps(const DistributionVariant& v, double y) {
  if (v.tag == VariantTag::PlainNormal) {
    return crps_normal(v.params.mu, v.params.sigma, y);
  }
  return crps_mixture(v.params, y).total;
}

double crps_ensemble(std::span<const double> members, double y) {
  if (members.empty()) throw std::domain_error("crps_ensemble: empty ensemble");
  const std::size_t m = members.size();
  double term1 = 0.0;
  for (double x : members) term1 += std::fabs(x - y);
  term1 /= static_cast<double>(m);
  double term2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      term2 += std::fabs(members[i] - members[j]);
    }
  }
  term2 /= 2.0 * static_cast<double>(m) * static_cast<double>(m);
  return term1 - term2;
}

double brier_score(double prob, bool occurred) {
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw std::domain_error("brier_score: prob must lie in [0,1]");
  }
  const double d = prob - (occurred ? 1.0 : 0.0);
  return d * d;
}

double quantile_score(double q, double y, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("quantile_score: alpha must lie strictly in (0,1)");
  }
  return ((y <= q ? 1.0 : 0.0) - alpha) * (q - y);
}

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double fa,
                        double b, double fb, double fm, double whole, double tol,
                        int depth, bool& converged) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double err = left + right - whole;
  if (std::fabs(err) <= 15.0 * tol || (b - a) < 1e-14 * (1.0 + std::fabs(a))) {
    return left + right + err / 15.0;
  }
  if (depth <= 0) {
    converged = false;
    return left + right + err / 15.0;
  }
  return adaptive_simpson(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1, converged) +
         adaptive_simpson(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1, converged);
}

double integrate_segment(const std::function<double(double)>& f, double a, double b,
                         double tol, bool& converged) {
  if (!(b > a)) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = simpson(a, fa, b, fb, fm);
  return adaptive_simpson(f, a, fa, b, fb, fm, whole, tol, 52, converged);
}

}  // namespace

double crps_quadrature_oracle(const std::function<double(double)>& cdf, double y,
                              double lower, double upper,
                              std::span<const double> breakpoints, double abs_tol) {
  if (!(upper > lower)) {
    throw std::domain_error("crps_quadrature_oracle: requires lower < upper");
  }
  std::vector<double> pts{lower, upper};
  if (y > lower && y < upper) pts.push_back(y);
  for (double b : breakpoints) {
    if (b > lower && b < upper) pts.push_back(b);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  // Evaluate just inside each segment so jumps at segment ends do not leak in.
  const auto integrand = [&](double x) {
    const double fx = cdf(x);
    const double ind = (y <= x) ? 1.0 : 0.0;
    const double d = fx - ind;
    return d * d;
  };
  double total = 0.0;
  bool converged = true;
  const double tol_per = abs_tol / static_cast<double>(pts.size());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double a = pts[i];
    double b = pts[i + 1];
    // nudge off the jump points; the sliver lost is O(1e-12 * |F| width)
    const double eps_a = 1e-12 * (1.0 + std::fabs(a));
    const double eps_b = 1e-12 * (1.0 + std::fabs(b));
    if (b - a <= eps_a + eps_b) continue;
    total += integrate_segment(integrand, a + eps_a, b - eps_b, tol_per, converged);
  }
  if (!converged) {
    throw numeric_error("crps_quadrature_oracle: adaptive integration did not converge");
  }
  return total;
}

double crps_mixture_quadrature(const TailedMixtureParams& params, double y) {
  validate(params);
  const double c = params.c;
  const double u = params.u;
  // upper cutoff: everything observable plus the 1-1e-9 quantile of the tail
  double cutoff = std::max({y, u, mixture_quantile(params, 1.0 - 1e-9)});
  std::vector<double> breaks{c, u};
  // geometric splits keep the polynomially decaying tail cheap to integrate
  for (double step = params.sigma_u; u + step < cutoff; step *= 2.0) {
    breaks.push_back(u + step);
  }
  const auto cdf = [&](double x) { return mixture_cdf(params, x); };
  const double body = crps_quadrature_oracle(cdf, y, c - 1.0, cutoff, breaks, 1e-9);

  // analytic remainder: int_cutoff^inf (1-F)^2 dx for the GPD tail
  const double m =
      params.p + (1.0 - params.p) * normal_cdf((params.u - params.mu) / params.sigma);
  const double surv = 1.0 - m;
  double rem;
  if (params.xi == 0.0) {
    rem = surv * surv * params.sigma_u * 0.5 *
          std::exp(-2.0 * (cutoff - u) / params.sigma_u);
  } else {
    const double t0 = 1.0 + params.xi * (cutoff - u) / params.sigma_u;
    rem = surv * surv * params.sigma_u * std::pow(t0, 1.0 - 2.0 / params.xi) /
          (2.0 - params.xi);
  }
  return body + rem;
}

}  // namespace tailcast

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "tailcast/errors.hpp"
#include "tailcast/normal.hpp"
#include "tailcast/pipeline.hpp"

namespace tailcast {

namespace {

// uniform strictly inside (0,1)
double next_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double next_normal(std::mt19937_64& rng) { return normal_quantile(next_uniform(rng)); }

// days-from-civil (proleptic Gregorian), round trip for ISO date strings
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

void civil_from_days(long z, int& y, int& m, int& d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long yy = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

std::string iso_datetime(long serial_day) {
  int y, m, d;
  civil_from_days(serial_day, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT00:00:00Z", y, m, d);
  return buf;
}

long parse_date(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3) {
    throw validation_error("synthetic: start_date must be YYYY-MM-DD, got " + s);
  }
  return days_from_civil(y, m, d);
}

// Forecastable part of the wet log-intensity: a normal-shaped body driven by
// the (clamped) wet-conditional score v.
double wet_body_log(double v, double scale, double body_sd) {
  v = std::min(std::max(v, 1e-9), 1.0 - 1e-9);
  return std::log(scale) + body_sd * normal_quantile(v);
}

// Unforecastable surprise: a GPD(sigma_log, xi) excess in log space. The
// uniform variate is kept away from 1 so the inverse transform stays finite.
double surprise_log(double w, double sigma_log, double xi) {
  w = std::min(w, 1.0 - 1e-3);
  if (xi == 0.0) return -sigma_log * std::log1p(-w);
  return sigma_log / xi * (std::pow(1.0 - w, -xi) - 1.0);
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.n_stations < 1 || cfg.n_days < 1 || cfg.n_ens < 1 || cfg.n_features < 1 ||
      cfg.lead_hours.empty()) {
    throw validation_error("synthetic: counts must all be >= 1");
  }
  if (!(cfg.dry_fraction >= 0.0 && cfg.dry_fraction <= 1.0)) {
    throw validation_error("synthetic: dry_fraction must lie in [0,1]");
  }
  std::mt19937_64 rng(seed);
  SyntheticData out;

  // station map
  out.stations.reserve(cfg.n_stations);
  for (int i = 0; i < cfg.n_stations; ++i) {
    Station s;
    char id[16];
    std::snprintf(id, sizeof(id), "S%04d", i);
    s.id = id;
    s.latitude = cfg.lat_min + (cfg.lat_max - cfg.lat_min) * next_uniform(rng);
    s.longitude = cfg.lon_min + (cfg.lon_max - cfg.lon_min) * next_uniform(rng);
    s.altitude = 1500.0 * next_uniform(rng);
    out.stations.push_back(std::move(s));
  }

  // Cholesky factor of the latent spatial correlation
  const int n = cfg.n_stations;
  Eigen::MatrixXd corr(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d =
          (i == j) ? 0.0 : geodesic_distance_km(out.stations[i], out.stations[j]);
      corr(i, j) = std::exp(-d / cfg.corr_length_km);
    }
  }
  corr.diagonal().array() += 1e-8;
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) {
    throw numeric_error("synthetic: latent correlation matrix is not positive definite");
  }
  const Eigen::MatrixXd chol = llt.matrixL();
  const double latent_sd = std::sqrt(1.0 + 1e-8);

  // feature layout; column 0 carries the raw member precipitation forecast
  std::vector<std::string> names = {"tp6_fc",  "latent_fc", "log1p_tp6", "alt_km",
                                    "lat_deg", "lon_deg",   "doy_sin",   "doy_cos"};
  while (static_cast<int>(names.size()) < cfg.n_features) {
    names.push_back("noise_" + std::to_string(names.size()));
  }
  names.resize(cfg.n_features);
  out.data.feature_names = names;

  const long day0 = parse_date(cfg.start_date);
  const double day_shift_sd = 0.5;
  Eigen::VectorXd gauss(n), latent(n);

  for (int day = 0; day < cfg.n_days; ++day) {
    const std::string init = iso_datetime(day0 + day);
    const double doy_angle =
        2.0 * 3.14159265358979323846 * static_cast<double>(day % 365) / 365.0;
    for (int lead : cfg.lead_hours) {
      for (int i = 0; i < n; ++i) gauss[i] = next_normal(rng);
      const double shift = day_shift_sd * next_normal(rng);
      latent = chol * gauss;
      // member noise grows with lead; station latents are exactly N(0,1)
      const double noise_sd = cfg.member_noise * (1.0 + static_cast<double>(lead) / 48.0);
      const double member_norm = std::sqrt(latent_sd * latent_sd +
                                           day_shift_sd * day_shift_sd +
                                           noise_sd * noise_sd);
      const double obs_norm = std::sqrt(latent_sd * latent_sd +
                                        day_shift_sd * day_shift_sd +
                                        cfg.obs_noise * cfg.obs_noise);
      for (int i = 0; i < n; ++i) {
        // the observation deviates from the scene by unforecastable
        // station-scale noise; marginally it stays exactly standard normal
        const double z_obs = (latent[i] + shift + cfg.obs_noise * next_normal(rng)) /
                             obs_norm;
        const double uq = normal_cdf(z_obs);
        const double w_surprise = next_uniform(rng);
        double obs = 0.0;
        if (uq >= cfg.dry_fraction && cfg.dry_fraction < 1.0) {
          const double v = (uq - cfg.dry_fraction) / (1.0 - cfg.dry_fraction);
          const double t = wet_body_log(v, cfg.wet_scale_mm, cfg.body_log_sd) +
                           surprise_log(w_surprise, cfg.tail_log_scale, cfg.tail_xi);
          obs = std::exp(t) - cfg.epsilon_mm;
        }
        for (int mem = 0; mem < cfg.n_ens; ++mem) {
          const double zm = (latent[i] + shift + noise_sd * next_normal(rng)) / member_norm;
          const double uqm = normal_cdf(zm);
          double member_precip = 0.0;
          if (uqm >= cfg.dry_fraction && cfg.dry_fraction < 1.0) {
            // members forecast the body only; the surprise is unforecastable
            const double vm = (uqm - cfg.dry_fraction) / (1.0 - cfg.dry_fraction);
            member_precip = std::min(
                std::exp(wet_body_log(vm, cfg.wet_scale_mm, cfg.body_log_sd)) -
                    cfg.epsilon_mm,
                cfg.feature_cap_mm);
          }
          ForecastRecord rec;
          rec.station_id = out.stations[i].id;
          rec.init_time = init;
          rec.lead_hours = lead;
          rec.member = mem;
          rec.obs_precip_mm = obs;
          rec.features.resize(cfg.n_features);
          for (int f = 0; f < cfg.n_features; ++f) {
            double val = 0.0;
            switch (f) {
              case 0: val = member_precip; break;
              case 1: val = zm; break;
              case 2: val = std::log1p(member_precip); break;
              case 3: val = out.stations[i].altitude / 1000.0; break;
              case 4: val = out.stations[i].latitude; break;
              case 5: val = out.stations[i].longitude; break;
              case 6: val = std::sin(doy_angle); break;
              case 7: val = std::cos(doy_angle); break;
              default: val = next_normal(rng); break;
            }
            rec.features[f] = val;
          }
          out.data.records.push_back(std::move(rec));
        }
      }
    }
  }
  return out;
}

}  // namespace tailcast

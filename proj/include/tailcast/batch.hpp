#pragma once

#include <Eigen/Dense>
#include <string>

namespace tailcast {

/// One (init_time, lead) slice of the dataset with stations ordered exactly
/// as in the graph. Features are standardized with training-set statistics;
/// observations are stored both raw (mm) and log-transformed.
struct EnsembleBatch {
  std::string init_time;
  int lead_hours = 0;
  int n_stations = 0;
  int n_ens = 0;
  Eigen::MatrixXd features;    // (n_stations * n_ens) x F, station-major rows
  Eigen::ArrayXd y;            // transformed obs, length n_stations
  Eigen::ArrayXd obs_raw_mm;   // raw obs, length n_stations
  Eigen::MatrixXd ens_raw_mm;  // n_stations x n_ens raw member precipitation
};

}  // namespace tailcast

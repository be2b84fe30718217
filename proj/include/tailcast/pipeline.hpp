#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tailcast/batch.hpp"
#include "tailcast/graph.hpp"
#include "tailcast/model.hpp"

namespace tailcast {

struct ForecastRecord {
  std::string station_id;
  std::string init_time;  // ISO-8601; lexicographic order == chronological
  int lead_hours = 0;
  int member = 0;
  Eigen::VectorXd features;
  double obs_precip_mm = 0.0;  // accumulation over the lead window, >= 0
};

struct ForecastDataset {
  std::vector<std::string> feature_names;
  std::vector<ForecastRecord> records;
};

/// Chronological train/test ranges (inclusive on init_time); the validation
/// set is carved off the trailing fraction of the training init times unless
/// explicit bounds are given.
struct SplitSpec {
  std::string train_begin, train_end;
  std::string test_begin, test_end;
  double validation_fraction = 0.15;
  std::string val_begin, val_end;  // optional explicit range

  bool has_explicit_validation() const { return !val_begin.empty(); }
};

void validate(const SplitSpec& split);

/// h(y) = log(y + epsilon); equals the censor point exactly at y = 0.
double transform_obs(double raw_mm, double epsilon_mm);

/// Type-7 (linear interpolation between order statistics) empirical quantile.
double empirical_quantile(std::vector<double> values, double alpha);

/// 90th percentile of the transformed training observations. Throws
/// validation_error when it degenerates onto the censor point (all-dry data).
double fit_global_threshold(const std::vector<double>& train_obs_transformed,
                            double censor);

// ------------------------------------------------------------ synthetic data

struct SyntheticConfig {
  int n_stations = 50;
  int n_days = 300;
  std::vector<int> lead_hours = {24};
  int n_ens = 11;
  int n_features = 10;
  double dry_fraction = 0.45;    // marginal probability of zero precipitation
  double corr_length_km = 250.0; // e-folding scale of the latent field
  // Wet log-intensity = forecastable normal-ish body + an unforecastable
  // GPD-distributed surprise, so the conditional upper tail stays heavy no
  // matter how informative the ensemble is.
  double body_log_sd = 0.8;      // spread of the forecastable body (log space)
  double tail_xi = 0.35;         // log-space GPD shape of the surprise
  double tail_log_scale = 0.5;   // log-space GPD scale of the surprise
  double wet_scale_mm = 2.0;     // intensity scale at the median body
  // member forecast values saturate here; keeps the feature columns bounded
  // while observations keep the full heavy tail
  double feature_cap_mm = 250.0;
  double member_noise = 0.3;     // forecast error at lead 0, grows with lead
  // station-scale variability the ensemble cannot see; keeps the dry
  // probability a smooth function of the latent intensity and the
  // conditional upper tail genuinely heavy
  double obs_noise = 0.5;
  double epsilon_mm = kDefaultEpsilonMm;
  std::string start_date = "2017-01-01";
  // continental-scale map: station density keeps the 300 km graph sparse
  double lat_min = 40.0, lat_max = 55.0;
  double lon_min = -5.0, lon_max = 20.0;
};

struct SyntheticData {
  std::vector<Station> stations;
  ForecastDataset data;
};

/// Spatially correlated zero-inflated rain scenes with GPD-tailed wet
/// intensities and lead-dependent ensemble noise; byte-stable per seed.
SyntheticData generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------- batching

struct FeatureStats {
  Eigen::ArrayXd mean, stdev;
};

/// Per-feature moments over the member rows of the given init-time range.
FeatureStats compute_feature_stats(const ForecastDataset& data, int lead_hours,
                                   const std::string& lo, const std::string& hi);

struct BatchOptions {
  int lead_hours = 24;
  double epsilon_mm = kDefaultEpsilonMm;
  int ens_feature = 0;
  FeatureStats stats;
  std::string init_lo, init_hi;  // inclusive init_time bounds; empty = all
};

/// Groups records into per-init-time batches aligned with the graph station
/// order. Missing stations or ragged member indices are validation errors.
std::vector<EnsembleBatch> make_batches(const ForecastDataset& data,
                                        const StationGraph& graph,
                                        const BatchOptions& opt);

std::vector<std::string> init_times_in(const ForecastDataset& data, int lead_hours,
                                       const std::string& lo, const std::string& hi);

// ----------------------------------------------------------------- training

struct TrainConfig {
  int epochs = 25;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  int lead_hours = 24;
  double epsilon_mm = kDefaultEpsilonMm;
  int ens_feature = 0;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_crps = 0.0;
  double val_crps = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;  // parameters of the best-validation epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;  // 0 = initialization (only when epochs == 0)
  std::vector<std::string> warnings;
};

/// Adam on the mean transformed-space CRPS, one model per lead time, early
/// stopping by minimum validation CRPS over at most `epochs` epochs.
TrainResult train_model(ModelConfig cfg, const TrainConfig& tc, const SplitSpec& split,
                        const StationGraph& graph, const ForecastDataset& data);

// --------------------------------------------------------------- evaluation

struct StationScore {
  std::string station_id;
  long n = 0;
  double crps = 0.0, brier = 0.0, qs99 = 0.0;  // means over records
};

struct ScoreReport {
  std::string variant;
  int lead_hours = 0;
  double crps = 0.0, brier = 0.0, qs99 = 0.0;
  long n_records = 0;
  std::string space = "log-transformed";
  std::string percentile_convention = "linear_interpolation_type7";
  std::string brier_threshold = "raw_mm<0.01";
  std::vector<StationScore> per_station;
};

/// Scores a trained checkpoint on the test range: mean CRPS (closed form),
/// Brier for the no-rain event at F(log(0.01+eps)), pinball loss of the 0.99
/// quantile. Deterministic for any `jobs` value.
ScoreReport evaluate_checkpoint(const Checkpoint& ckpt, const ForecastDataset& data,
                                const StationGraph& graph, const SplitSpec& split,
                                int jobs = 1);

/// The ENS baseline: empirical-CDF CRPS over transformed members, member
/// fraction below 0.01 mm for Brier, type-7 member quantile for QS.
ScoreReport evaluate_ens_baseline(const ForecastDataset& data, const StationGraph& graph,
                                  const SplitSpec& split, int lead_hours,
                                  double epsilon_mm, int ens_feature, int jobs = 1);

std::string report_to_json(const ScoreReport& report);
void save_report_json(const ScoreReport& report, const std::string& path);
void save_per_station_csv(const ScoreReport& report, const StationGraph& graph,
                          const std::string& path);

// ---------------------------------------------------------------- file IO

ForecastDataset load_forecast_csv(const std::string& path);
void save_forecast_csv(const ForecastDataset& data, const std::string& path);

}  // namespace tailcast

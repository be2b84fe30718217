#include "tailcast/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "tailcast/errors.hpp"
#include "tailcast/scoring.hpp"

namespace tailcast {

using json = nlohmann::ordered_json;

void validate(const SplitSpec& split) {
  if (split.train_begin.empty() || split.train_end.empty() || split.test_begin.empty() ||
      split.test_end.empty()) {
    throw validation_error("SplitSpec: all four range bounds are required");
  }
  if (split.train_begin > split.train_end || split.test_begin > split.test_end) {
    throw validation_error("SplitSpec: range bounds are reversed");
  }
  const bool overlap = !(split.train_end < split.test_begin ||
                         split.test_end < split.train_begin);
  if (overlap) throw validation_error("SplitSpec: train and test ranges overlap");
  if (!(split.validation_fraction >= 0.0 && split.validation_fraction < 1.0)) {
    throw validation_error("SplitSpec: validation_fraction must lie in [0,1)");
  }
}

double transform_obs(double raw_mm, double epsilon_mm) {
  if (!(raw_mm >= 0.0)) {
    throw validation_error("transform_obs: negative precipitation");
  }
  if (!(epsilon_mm > 0.0)) {
    throw validation_error("transform_obs: epsilon must be > 0");
  }
  return std::log(raw_mm + epsilon_mm);
}

double empirical_quantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw validation_error("empirical_quantile: empty sample");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::domain_error("empirical_quantile: alpha must lie in [0,1]");
  }
  std::sort(values.begin(), values.end());
  const double h = alpha * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double fit_global_threshold(const std::vector<double>& train_obs_transformed,
                            double censor) {
  if (train_obs_transformed.empty()) {
    throw validation_error("fit_global_threshold: empty training sample");
  }
  const double u = empirical_quantile(train_obs_transformed, 0.9);
  if (!(u > censor + kThresholdGap)) {
    throw validation_error(
        "fit_global_threshold: degenerate threshold (90th percentile sits on the "
        "censor point; training data is essentially dry)");
  }
  return u;
}

// ------------------------------------------------------------------ batching

std::vector<std::string> init_times_in(const ForecastDataset& data, int lead_hours,
                                       const std::string& lo, const std::string& hi) {
  std::vector<std::string> out;
  for (const auto& r : data.records) {
    if (r.lead_hours != lead_hours) continue;
    if (!lo.empty() && r.init_time < lo) continue;
    if (!hi.empty() && r.init_time > hi) continue;
    out.push_back(r.init_time);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

FeatureStats compute_feature_stats(const ForecastDataset& data, int lead_hours,
                                   const std::string& lo, const std::string& hi) {
  const Eigen::Index f =
      data.records.empty() ? 0 : data.records.front().features.size();
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(f);
  Eigen::ArrayXd sum2 = Eigen::ArrayXd::Zero(f);
  long n = 0;
  for (const auto& r : data.records) {
    if (r.lead_hours != lead_hours) continue;
    if (!lo.empty() && r.init_time < lo) continue;
    if (!hi.empty() && r.init_time > hi) continue;
    sum += r.features.array();
    sum2 += r.features.array().square();
    ++n;
  }
  if (n == 0) throw validation_error("compute_feature_stats: no records in range");
  FeatureStats st;
  st.mean = sum / static_cast<double>(n);
  st.stdev = (sum2 / static_cast<double>(n) - st.mean.square()).max(0.0).sqrt();
  for (Eigen::Index i = 0; i < st.stdev.size(); ++i) {
    if (st.stdev[i] < 1e-12) st.stdev[i] = 1.0;  // constant feature carries no signal
  }
  return st;
}

std::vector<EnsembleBatch> make_batches(const ForecastDataset& data,
                                        const StationGraph& graph,
                                        const BatchOptions& opt) {
  if (opt.stats.mean.size() == 0) {
    throw validation_error("make_batches: feature statistics are required");
  }
  std::unordered_map<std::string, int> station_index;
  for (int i = 0; i < graph.size(); ++i) station_index[graph.stations[i].id] = i;

  // (init_time -> station -> member records)
  std::map<std::string, std::vector<std::vector<const ForecastRecord*>>> groups;
  for (const auto& r : data.records) {
    if (r.lead_hours != opt.lead_hours) continue;
    if (!opt.init_lo.empty() && r.init_time < opt.init_lo) continue;
    if (!opt.init_hi.empty() && r.init_time > opt.init_hi) continue;
    const auto it = station_index.find(r.station_id);
    if (it == station_index.end()) {
      throw validation_error("make_batches: record station " + r.station_id +
                             " is not in the graph");
    }
    auto& slot = groups[r.init_time];
    if (slot.empty()) slot.resize(static_cast<std::size_t>(graph.size()));
    slot[static_cast<std::size_t>(it->second)].push_back(&r);
  }

  std::vector<EnsembleBatch> out;
  out.reserve(groups.size());
  const Eigen::Index f = opt.stats.mean.size();
  for (auto& [init, per_station] : groups) {
    EnsembleBatch b;
    b.init_time = init;
    b.lead_hours = opt.lead_hours;
    b.n_stations = graph.size();
    int n_ens = -1;
    for (int i = 0; i < graph.size(); ++i) {
      auto& rows = per_station[static_cast<std::size_t>(i)];
      if (rows.empty()) {
        throw validation_error("make_batches: init " + init + " is missing station " +
                               graph.stations[static_cast<std::size_t>(i)].id);
      }
      std::sort(rows.begin(), rows.end(),
                [](const ForecastRecord* a, const ForecastRecord* b2) {
                  return a->member < b2->member;
                });
      for (std::size_t m = 0; m < rows.size(); ++m) {
        if (rows[m]->member != static_cast<int>(m)) {
          throw validation_error("make_batches: member indices not dense for station " +
                                 rows[m]->station_id + " at " + init);
        }
      }
      if (n_ens < 0) {
        n_ens = static_cast<int>(rows.size());
      } else if (n_ens != static_cast<int>(rows.size())) {
        throw validation_error("make_batches: ragged ensemble size at " + init);
      }
    }
    b.n_ens = n_ens;
    b.features.resize(static_cast<Eigen::Index>(b.n_stations) * n_ens, f);
    b.y.resize(b.n_stations);
    b.obs_raw_mm.resize(b.n_stations);
    b.ens_raw_mm.resize(b.n_stations, n_ens);
    for (int i = 0; i < b.n_stations; ++i) {
      const auto& rows = per_station[static_cast<std::size_t>(i)];
      b.obs_raw_mm[i] = rows.front()->obs_precip_mm;
      b.y[i] = transform_obs(rows.front()->obs_precip_mm, opt.epsilon_mm);
      for (int m = 0; m < n_ens; ++m) {
        const auto& rec = *rows[static_cast<std::size_t>(m)];
        if (rec.features.size() != f) {
          throw validation_error("make_batches: inconsistent feature count at " + init);
        }
        b.ens_raw_mm(i, m) = rec.features[opt.ens_feature];
        b.features.row(static_cast<Eigen::Index>(i) * n_ens + m) =
            ((rec.features.array() - opt.stats.mean) / opt.stats.stdev).matrix();
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

// ------------------------------------------------------------------ training

namespace {

void deterministic_shuffle(std::vector<int>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

double forward_loss(const EnsembleBatch& batch, const StationGraph& graph,
                    const NetworkParameters& net, const ModelConfig& cfg) {
  ad::Tape tape;
  const ParamNodes nodes = build_forward(tape, batch, graph, net, cfg, false);
  return build_crps_loss(tape, nodes, batch.y, cfg).scalar();
}

}  // namespace

TrainResult train_model(ModelConfig cfg, const TrainConfig& tc, const SplitSpec& split,
                        const StationGraph& graph, const ForecastDataset& data) {
  validate(split);
  if (tc.epochs < 0) throw validation_error("train: epochs must be >= 0");
  if (data.records.empty()) throw validation_error("train: empty dataset");
  cfg.n_features = static_cast<int>(data.records.front().features.size());
  cfg.censor = std::log(tc.epsilon_mm);

  // chronological validation carve from the training range
  std::vector<std::string> train_times =
      init_times_in(data, tc.lead_hours, split.train_begin, split.train_end);
  if (train_times.empty()) throw validation_error("train: no training init times");
  std::vector<std::string> val_times;
  if (split.has_explicit_validation()) {
    val_times = init_times_in(data, tc.lead_hours, split.val_begin, split.val_end);
  } else {
    const auto n_val = static_cast<std::size_t>(
        std::floor(split.validation_fraction * static_cast<double>(train_times.size())));
    if (n_val > 0) {
      val_times.assign(train_times.end() - static_cast<long>(n_val), train_times.end());
      train_times.resize(train_times.size() - n_val);
    }
  }
  if (train_times.empty()) throw validation_error("train: validation carve ate the training set");

  const FeatureStats stats = compute_feature_stats(
      data, tc.lead_hours, train_times.front(), train_times.back());
  BatchOptions opt;
  opt.lead_hours = tc.lead_hours;
  opt.epsilon_mm = tc.epsilon_mm;
  opt.ens_feature = tc.ens_feature;
  opt.stats = stats;
  opt.init_lo = train_times.front();
  opt.init_hi = train_times.back();
  std::vector<EnsembleBatch> train_batches = make_batches(data, graph, opt);
  std::vector<EnsembleBatch> val_batches;
  if (!val_times.empty()) {
    opt.init_lo = val_times.front();
    opt.init_hi = val_times.back();
    val_batches = make_batches(data, graph, opt);
  }

  TrainResult result;
  if (cfg.variant == VariantTag::NormalPointMassGPD &&
      cfg.threshold_mode == ThresholdMode::GlobalFixed) {
    std::vector<double> train_obs;
    for (const auto& b : train_batches) {
      for (Eigen::Index i = 0; i < b.y.size(); ++i) train_obs.push_back(b.y[i]);
    }
    cfg.u_global = fit_global_threshold(train_obs, cfg.censor);
    long n_exceed = 0;
    for (double y : train_obs) {
      if (y > cfg.u_global) ++n_exceed;
    }
    if (n_exceed == 0) {
      result.warnings.push_back(
          "no training observations exceed the global threshold; the GPD branch "
          "stays inactive below u");
    }
  }
  validate(cfg);

  NetworkParameters net = init_network(cfg, tc.seed);
  std::vector<ParamRef> refs = parameter_refs(net);
  std::vector<ad::AdamState> adam(refs.size());
  ad::AdamConfig adam_cfg;
  adam_cfg.lr = tc.learning_rate;

  NetworkParameters best = net;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  std::vector<int> order(train_batches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 shuffle_rng(tc.seed ^ 0xD1B54A32D192ED03ULL);

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    deterministic_shuffle(order, shuffle_rng);
    double train_sum = 0.0;
    for (int bi : order) {
      const EnsembleBatch& batch = train_batches[static_cast<std::size_t>(bi)];
      try {
        ad::Tape tape;
        std::vector<ad::DiffTensor> leaves;
        const ParamNodes nodes = build_forward(tape, batch, graph, net, cfg, true, &leaves);
        const ad::DiffTensor loss = build_crps_loss(tape, nodes, batch.y, cfg);
        train_sum += loss.scalar();
        tape.backward(loss);
        for (std::size_t k = 0; k < refs.size(); ++k) {
          if (refs[k].name.rfind("gine", 0) == 0 &&
              refs[k].name.find(".eps") != std::string::npos &&
              !cfg.learnable_gine_epsilon) {
            continue;
          }
          Eigen::Map<Eigen::MatrixXd> param(refs[k].data, refs[k].rows, refs[k].cols);
          ad::Array p = param.array();
          ad::adam_step(p, leaves[k].grad(), adam[k], adam_cfg);
          param = p.matrix();
        }
      } catch (const numeric_error& e) {
        throw numeric_error("training aborted at epoch " + std::to_string(epoch) +
                            ", batch init_time=" + batch.init_time + ": " + e.what());
      }
    }
    EpochLog lg;
    lg.epoch = epoch;
    lg.train_crps = train_sum / static_cast<double>(train_batches.size());
    if (!val_batches.empty()) {
      double val_sum = 0.0;
      for (const auto& b : val_batches) val_sum += forward_loss(b, graph, net, cfg);
      lg.val_crps = val_sum / static_cast<double>(val_batches.size());
    } else {
      lg.val_crps = lg.train_crps;  // no validation batches: fall back to train
    }
    result.log.push_back(lg);
    if (lg.val_crps < best_val) {
      best_val = lg.val_crps;
      best = net;
      best_epoch = epoch;
    }
  }

  result.best_epoch = best_epoch;
  result.checkpoint.config = cfg;
  result.checkpoint.net = (tc.epochs == 0) ? net : best;
  result.checkpoint.feature_names = data.feature_names;
  result.checkpoint.feature_mean = stats.mean;
  result.checkpoint.feature_std = stats.stdev;
  result.checkpoint.epsilon_mm = tc.epsilon_mm;
  result.checkpoint.ens_feature = tc.ens_feature;
  result.checkpoint.lead_hours = tc.lead_hours;
  return result;
}

// ---------------------------------------------------------------- evaluation

namespace {

struct RecordScores {
  Eigen::ArrayXd crps, brier, qs;
};

void parallel_over(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min<int>(jobs, static_cast<int>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

ScoreReport assemble_report(const std::string& variant, int lead,
                            const StationGraph& graph,
                            const std::vector<RecordScores>& scores) {
  ScoreReport rep;
  rep.variant = variant;
  rep.lead_hours = lead;
  const int n = graph.size();
  std::vector<StationScore> per(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    per[static_cast<std::size_t>(i)].station_id =
        graph.stations[static_cast<std::size_t>(i)].id;
  }
  double crps_sum = 0.0, brier_sum = 0.0, qs_sum = 0.0;
  long total = 0;
  for (const auto& s : scores) {
    for (int i = 0; i < n; ++i) {
      auto& st = per[static_cast<std::size_t>(i)];
      st.n += 1;
      st.crps += s.crps[i];
      st.brier += s.brier[i];
      st.qs99 += s.qs[i];
      crps_sum += s.crps[i];
      brier_sum += s.brier[i];
      qs_sum += s.qs[i];
      ++total;
    }
  }
  for (auto& st : per) {
    if (st.n > 0) {
      st.crps /= static_cast<double>(st.n);
      st.brier /= static_cast<double>(st.n);
      st.qs99 /= static_cast<double>(st.n);
    }
  }
  rep.per_station = std::move(per);
  rep.n_records = total;
  if (total > 0) {
    rep.crps = crps_sum / static_cast<double>(total);
    rep.brier = brier_sum / static_cast<double>(total);
    rep.qs99 = qs_sum / static_cast<double>(total);
  }
  return rep;
}

}  // namespace

ScoreReport evaluate_checkpoint(const Checkpoint& ckpt, const ForecastDataset& data,
                                const StationGraph& graph, const SplitSpec& split,
                                int jobs) {
  validate(split);
  if (data.feature_names != ckpt.feature_names) {
    std::string expect, got;
    for (const auto& s : ckpt.feature_names) expect += s + ",";
    for (const auto& s : data.feature_names) got += s + ",";
    throw validation_error("evaluate: feature names do not match the checkpoint (expected " +
                           expect + " got " + got + ")");
  }
  BatchOptions opt;
  opt.lead_hours = ckpt.lead_hours;
  opt.epsilon_mm = ckpt.epsilon_mm;
  opt.ens_feature = ckpt.ens_feature;
  opt.stats = FeatureStats{ckpt.feature_mean, ckpt.feature_std};
  opt.init_lo = split.test_begin;
  opt.init_hi = split.test_end;
  const std::vector<EnsembleBatch> batches = make_batches(data, graph, opt);
  if (batches.empty()) throw validation_error("evaluate: no test batches in range");

  const double rain_threshold_t = std::log(0.01 + ckpt.epsilon_mm);
  std::vector<RecordScores> scores(batches.size());
  parallel_over(batches.size(), jobs, [&](std::size_t bi) {
    const EnsembleBatch& b = batches[bi];
    const auto params = predict_params(b, graph, ckpt.net, ckpt.config);
    RecordScores rs;
    rs.crps.resize(b.n_stations);
    rs.brier.resize(b.n_stations);
    rs.qs.resize(b.n_stations);
    for (int i = 0; i < b.n_stations; ++i) {
      const DistributionVariant v{ckpt.config.variant, params[static_cast<std::size_t>(i)]};
      const double y = b.y[i];
      rs.crps[i] = variant_crps(v, y);
      rs.brier[i] = brier_score(variant_cdf(v, rain_threshold_t), b.obs_raw_mm[i] < 0.01);
      rs.qs[i] = quantile_score(variant_quantile(v, 0.99), y, 0.99);
    }
    scores[bi] = std::move(rs);
  });
  return assemble_report(variant_name(ckpt.config.variant), opt.lead_hours, graph, scores);
}

ScoreReport evaluate_ens_baseline(const ForecastDataset& data, const StationGraph& graph,
                                  const SplitSpec& split, int lead_hours,
                                  double epsilon_mm, int ens_feature, int jobs) {
  validate(split);
  BatchOptions opt;
  opt.lead_hours = lead_hours;
  opt.epsilon_mm = epsilon_mm;
  opt.ens_feature = ens_feature;
  // standardization is irrelevant for the baseline; identity stats
  const Eigen::Index f = data.records.empty()
                             ? 0
                             : data.records.front().features.size();
  opt.stats.mean = Eigen::ArrayXd::Zero(f);
  opt.stats.stdev = Eigen::ArrayXd::Ones(f);
  opt.init_lo = split.test_begin;
  opt.init_hi = split.test_end;
  const std::vector<EnsembleBatch> batches = make_batches(data, graph, opt);
  if (batches.empty()) throw validation_error("evaluate: no test batches in range");

  std::vector<RecordScores> scores(batches.size());
  parallel_over(batches.size(), jobs, [&](std::size_t bi) {
    const EnsembleBatch& b = batches[bi];
    RecordScores rs;
    rs.crps.resize(b.n_stations);
    rs.brier.resize(b.n_stations);
    rs.qs.resize(b.n_stations);
    std::vector<double> members(static_cast<std::size_t>(b.n_ens));
    for (int i = 0; i < b.n_stations; ++i) {
      int dry = 0;
      for (int m = 0; m < b.n_ens; ++m) {
        const double raw = std::max(0.0, b.ens_raw_mm(i, m));
        members[static_cast<std::size_t>(m)] = std::log(raw + epsilon_mm);
        if (b.ens_raw_mm(i, m) < 0.01) ++dry;
      }
      const double y = b.y[i];
      rs.crps[i] = crps_ensemble(members, y);
      rs.brier[i] = brier_score(static_cast<double>(dry) / b.n_ens,
                                b.obs_raw_mm[i] < 0.01);
      rs.qs[i] = quantile_score(empirical_quantile(members, 0.99), y, 0.99);
    }
    scores[bi] = std::move(rs);
  });
  return assemble_report("ens", lead_hours, graph, scores);
}

std::string report_to_json(const ScoreReport& report) {
  json j;
  j["variant"] = report.variant;
  j["lead_hours"] = report.lead_hours;
  j["crps"] = report.crps;
  j["brier"] = report.brier;
  j["qs99"] = report.qs99;
  j["n_records"] = report.n_records;
  j["space"] = report.space;
  j["conventions"] = {{"percentile", report.percentile_convention},
                      {"brier_threshold", report.brier_threshold}};
  return j.dump(1) + "\n";
}

void save_report_json(const ScoreReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write report: " + path);
  out << report_to_json(report);
}

void save_per_station_csv(const ScoreReport& report, const StationGraph& graph,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write per-station scores: " + path);
  out << "station_id,lat,lon,n,crps,brier,qs99\n";
  char buf[256];
  for (std::size_t i = 0; i < report.per_station.size(); ++i) {
    const auto& st = report.per_station[i];
    const auto& s = graph.stations[i];
    std::snprintf(buf, sizeof(buf), "%s,%.*g,%.*g,%ld,%.*g,%.*g,%.*g\n", st.station_id.c_str(),
                  17, s.latitude, 17, s.longitude, st.n, 17, st.crps, 17, st.brier, 17,
                  st.qs99);
    out << buf;
  }
}

// ------------------------------------------------------------------- file IO

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

ForecastDataset load_forecast_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open forecast file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw validation_error("empty forecast file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  const std::vector<std::string> fixed_head = {"station_id", "init_time", "lead_hours",
                                               "member"};
  if (header.size() < fixed_head.size() + 2) {
    throw validation_error("forecast CSV header too short in " + path);
  }
  for (std::size_t i = 0; i < fixed_head.size(); ++i) {
    if (header[i] != fixed_head[i]) {
      throw validation_error("forecast CSV: expected column '" + fixed_head[i] +
                             "' at position " + std::to_string(i + 1) + ", got '" +
                             header[i] + "'");
    }
  }
  if (header.back() != "obs_precip_mm") {
    throw validation_error("forecast CSV: last column must be 'obs_precip_mm', got '" +
                           header.back() + "'");
  }
  ForecastDataset data;
  data.feature_names.assign(header.begin() + 4, header.end() - 1);
  const std::size_t n_fields = header.size();
  const Eigen::Index n_features = static_cast<Eigen::Index>(data.feature_names.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != n_fields) {
      throw validation_error("forecast CSV: wrong field count at line " +
                             std::to_string(line_no) + " in " + path);
    }
    ForecastRecord rec;
    rec.station_id = fields[0];
    rec.init_time = fields[1];
    try {
      rec.lead_hours = std::stoi(fields[2]);
      rec.member = std::stoi(fields[3]);
      rec.features.resize(n_features);
      for (Eigen::Index k = 0; k < n_features; ++k) {
        rec.features[k] = std::stod(fields[4 + static_cast<std::size_t>(k)]);
      }
      rec.obs_precip_mm = std::stod(fields[n_fields - 1]);
    } catch (const std::exception&) {
      throw validation_error("forecast CSV: unparseable number at line " +
                             std::to_string(line_no) + " in " + path);
    }
    if (rec.lead_hours <= 0) {
      throw validation_error("forecast CSV: lead_hours must be > 0 at line " +
                             std::to_string(line_no));
    }
    if (!(rec.obs_precip_mm >= 0.0) || !std::isfinite(rec.obs_precip_mm)) {
      throw validation_error("forecast CSV: column 'obs_precip_mm' must be finite and "
                             ">= 0 at line " + std::to_string(line_no));
    }
    data.records.push_back(std::move(rec));
  }
  return data;
}

void save_forecast_csv(const ForecastDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write forecast file: " + path);
  out << "station_id,init_time,lead_hours,member";
  for (const auto& name : data.feature_names) out << "," << name;
  out << ",obs_precip_mm\n";
  char buf[64];
  for (const auto& r : data.records) {
    out << r.station_id << ',' << r.init_time << ',' << r.lead_hours << ',' << r.member;
    for (Eigen::Index k = 0; k < r.features.size(); ++k) {
      std::snprintf(buf, sizeof(buf), ",%.*g", 17, r.features[k]);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.*g\n", 17, r.obs_precip_mm);
    out << buf;
  }
}

}  // namespace tailcast

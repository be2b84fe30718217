// tailcast CLI: synth | graph | train | eval | exceed
//
// One declarative JSON config drives every subcommand; flags override the
// config; each run writes its fully-resolved config next to its outputs.
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numeric failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tailcast/distributions.hpp"
#include "tailcast/errors.hpp"
#include "tailcast/graph.hpp"
#include "tailcast/model.hpp"
#include "tailcast/pipeline.hpp"
#include "tailcast/scoring.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tailcast;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw validation_error(std::string("malformed config JSON: ") + e.what());
  }
}

std::string data_root() {
  const char* env = std::getenv("TAILCAST_DATA_ROOT");
  return env == nullptr ? std::string() : std::string(env);
}

std::string resolve_path(const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  const std::string root = data_root();
  if (root.empty()) return p;
  return (fs::path(root) / p).string();
}

template <typename T>
T cfg_get(const json& j, const std::string& section, const std::string& key, T fallback) {
  if (j.contains(section) && j.at(section).contains(key)) {
    return j.at(section).at(key).get<T>();
  }
  return fallback;
}

struct Resolved {
  json cfg;  // fully-resolved values (what the run actually used)
  std::uint64_t seed = 0;
  int jobs = 1;
  fs::path out;
};

Resolved resolve_common(const CommonArgs& args) {
  Resolved r;
  r.cfg = load_config(args.config_path);
  r.seed = args.seed.value_or(r.cfg.value("seed", std::uint64_t{42}));
  r.jobs = args.jobs.value_or(r.cfg.value("jobs", 1));
  const std::string out = args.out_dir.value_or(r.cfg.value("out_dir", std::string("runs/out")));
  r.out = fs::path(out);
  r.cfg["seed"] = r.seed;
  r.cfg["jobs"] = r.jobs;
  r.cfg["out_dir"] = out;
  std::error_code ec;
  fs::create_directories(r.out, ec);
  if (ec) throw io_error("cannot create output directory: " + out);
  return r;
}

void write_resolved(const Resolved& r, const std::string& command) {
  const fs::path path = r.out / ("resolved_config_" + command + ".json");
  std::ofstream out(path);
  if (!out) throw io_error("cannot write resolved config: " + path.string());
  out << r.cfg.dump(1) << "\n";
}

std::uint64_t fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot hash file: " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

SyntheticConfig synthetic_from_cfg(const json& j) {
  SyntheticConfig s;
  s.n_stations = cfg_get(j, "synthetic", "n_stations", s.n_stations);
  s.n_days = cfg_get(j, "synthetic", "n_days", s.n_days);
  s.lead_hours = cfg_get(j, "synthetic", "lead_hours", s.lead_hours);
  s.n_ens = cfg_get(j, "synthetic", "n_ens", s.n_ens);
  s.n_features = cfg_get(j, "synthetic", "n_features", s.n_features);
  s.dry_fraction = cfg_get(j, "synthetic", "dry_fraction", s.dry_fraction);
  s.corr_length_km = cfg_get(j, "synthetic", "corr_length_km", s.corr_length_km);
  s.body_log_sd = cfg_get(j, "synthetic", "body_log_sd", s.body_log_sd);
  s.tail_xi = cfg_get(j, "synthetic", "tail_xi", s.tail_xi);
  s.tail_log_scale = cfg_get(j, "synthetic", "tail_log_scale", s.tail_log_scale);
  s.wet_scale_mm = cfg_get(j, "synthetic", "wet_scale_mm", s.wet_scale_mm);
  s.feature_cap_mm = cfg_get(j, "synthetic", "feature_cap_mm", s.feature_cap_mm);
  s.member_noise = cfg_get(j, "synthetic", "member_noise", s.member_noise);
  s.obs_noise = cfg_get(j, "synthetic", "obs_noise", s.obs_noise);
  s.start_date = cfg_get(j, "synthetic", "start_date", s.start_date);
  s.epsilon_mm = j.value("epsilon_mm", s.epsilon_mm);
  return s;
}

json synthetic_to_cfg(const SyntheticConfig& s) {
  json j;
  j["n_stations"] = s.n_stations;
  j["n_days"] = s.n_days;
  j["lead_hours"] = s.lead_hours;
  j["n_ens"] = s.n_ens;
  j["n_features"] = s.n_features;
  j["dry_fraction"] = s.dry_fraction;
  j["corr_length_km"] = s.corr_length_km;
  j["body_log_sd"] = s.body_log_sd;
  j["tail_xi"] = s.tail_xi;
  j["tail_log_scale"] = s.tail_log_scale;
  j["wet_scale_mm"] = s.wet_scale_mm;
  j["feature_cap_mm"] = s.feature_cap_mm;
  j["member_noise"] = s.member_noise;
  j["obs_noise"] = s.obs_noise;
  j["start_date"] = s.start_date;
  return j;
}

struct DataPaths {
  std::string forecasts;
  std::string stations;
};

DataPaths data_paths(const json& cfg, const Resolved& r) {
  DataPaths d;
  d.forecasts = resolve_path(cfg_get(cfg, "data", "forecasts",
                                     (r.out / "forecasts.csv").string()));
  d.stations = resolve_path(cfg_get(cfg, "data", "stations",
                                    (r.out / "stations.csv").string()));
  return d;
}

StationGraph graph_from_cfg(const json& cfg, const std::string& stations_path) {
  const double d_max = cfg_get(cfg, "graph", "d_max_km", 300.0);
  const std::string norm =
      cfg_get(cfg, "graph", "weight_normalization", std::string("global_max"));
  const WeightNormalization wn = norm == "per_node_max"
                                     ? WeightNormalization::PerNodeMax
                                     : WeightNormalization::GlobalMax;
  return build_graph(load_stations_csv(stations_path), d_max, wn);
}

SplitSpec split_from_cfg(const json& cfg) {
  SplitSpec s;
  s.train_begin = cfg_get(cfg, "split", "train_begin", std::string());
  s.train_end = cfg_get(cfg, "split", "train_end", std::string());
  s.test_begin = cfg_get(cfg, "split", "test_begin", std::string());
  s.test_end = cfg_get(cfg, "split", "test_end", std::string());
  s.validation_fraction = cfg_get(cfg, "split", "validation_fraction", 0.15);
  s.val_begin = cfg_get(cfg, "split", "val_begin", std::string());
  s.val_end = cfg_get(cfg, "split", "val_end", std::string());
  return s;
}

// Derives a chronological 70/30 split from the data when none is configured.
SplitSpec split_or_default(const json& cfg, const ForecastDataset& data, int lead) {
  SplitSpec s = split_from_cfg(cfg);
  if (!s.train_begin.empty()) return s;
  const auto times = init_times_in(data, lead, "", "");
  if (times.size() < 4) throw validation_error("not enough init times to split");
  const std::size_t n_train = times.size() - times.size() / 3;
  s.train_begin = times.front();
  s.train_end = times[n_train - 1];
  s.test_begin = times[n_train];
  s.test_end = times.back();
  return s;
}

json split_to_cfg(const SplitSpec& s) {
  json j;
  j["train_begin"] = s.train_begin;
  j["train_end"] = s.train_end;
  j["test_begin"] = s.test_begin;
  j["test_end"] = s.test_end;
  j["validation_fraction"] = s.validation_fraction;
  if (!s.val_begin.empty()) {
    j["val_begin"] = s.val_begin;
    j["val_end"] = s.val_end;
  }
  return j;
}

ModelConfig model_from_cfg(const json& cfg, double epsilon_mm) {
  ModelConfig m;
  m.variant = variant_from_name(
      cfg_get(cfg, "model", "variant", std::string("normal_point_mass_gpd")));
  m.embed_dim = cfg_get(cfg, "model", "embed_dim", m.embed_dim);
  m.hidden_dim = cfg_get(cfg, "model", "hidden_dim", m.hidden_dim);
  m.gnn_layers = cfg_get(cfg, "model", "gnn_layers", m.gnn_layers);
  const std::string tm =
      cfg_get(cfg, "model", "threshold_mode", std::string("global_fixed"));
  m.threshold_mode = tm == "learned_per_station" ? ThresholdMode::LearnedPerStation
                                                 : ThresholdMode::GlobalFixed;
  const std::string xm = cfg_get(cfg, "model", "xi_mode", std::string("fixed"));
  m.xi_mode = xm == "learned_sigmoid" ? XiMode::LearnedSigmoid : XiMode::Fixed;
  m.xi_fixed = cfg_get(cfg, "model", "xi_fixed", m.xi_fixed);
  m.sigma_floor = cfg_get(cfg, "model", "sigma_floor", m.sigma_floor);
  m.aggregation = cfg_get(cfg, "model", "aggregation", std::string("sum")) == "mean"
                      ? SetAggregation::Mean
                      : SetAggregation::Sum;
  m.censor = std::log(epsilon_mm);
  m.u_global = 1.0;  // placeholder above the censor; fitted during training
  return m;
}

json model_to_cfg(const ModelConfig& m) {
  json j;
  j["variant"] = variant_name(m.variant);
  j["embed_dim"] = m.embed_dim;
  j["hidden_dim"] = m.hidden_dim;
  j["gnn_layers"] = m.gnn_layers;
  j["threshold_mode"] = m.threshold_mode == ThresholdMode::LearnedPerStation
                            ? "learned_per_station"
                            : "global_fixed";
  j["xi_mode"] = m.xi_mode == XiMode::LearnedSigmoid ? "learned_sigmoid" : "fixed";
  j["xi_fixed"] = m.xi_fixed;
  j["sigma_floor"] = m.sigma_floor;
  j["aggregation"] = m.aggregation == SetAggregation::Mean ? "mean" : "sum";
  return j;
}

int resolve_ens_feature(const json& cfg, const ForecastDataset& data) {
  const std::string name = cfg_get(cfg, "train", "ens_feature", std::string());
  if (name.empty()) return 0;
  for (std::size_t i = 0; i < data.feature_names.size(); ++i) {
    if (data.feature_names[i] == name) return static_cast<int>(i);
  }
  throw validation_error("config train.ens_feature names unknown feature: " + name);
}

std::string ckpt_name(VariantTag v, int lead) {
  return "checkpoint_" + std::string(variant_name(v)) + "_" + std::to_string(lead) +
         "h.json";
}

// ------------------------------------------------------------------ commands

int cmd_synth(const CommonArgs& args) {
  Resolved r = resolve_common(args);
  const SyntheticConfig sc = synthetic_from_cfg(r.cfg);
  const SyntheticData data = generate_synthetic(sc, r.seed);

  const fs::path forecasts = r.out / "forecasts.csv";
  const fs::path stations = r.out / "stations.csv";
  save_forecast_csv(data.data, forecasts.string());
  save_stations_csv(data.stations, stations.string());

  json manifest;
  manifest["seed"] = r.seed;
  manifest["rows"] = data.data.records.size();
  manifest["stations"] = data.stations.size();
  manifest["files"] = {
      {"forecasts.csv", hex64(fnv1a64_file(forecasts))},
      {"stations.csv", hex64(fnv1a64_file(stations))},
  };
  std::ofstream mf(r.out / "manifest.json");
  if (!mf) throw io_error("cannot write manifest");
  mf << manifest.dump(1) << "\n";

  r.cfg["synthetic"] = synthetic_to_cfg(sc);
  r.cfg["epsilon_mm"] = sc.epsilon_mm;
  write_resolved(r, "synth");
  std::cout << "wrote " << data.data.records.size() << " rows for "
            << data.stations.size() << " stations to " << r.out.string() << "\n";
  return 0;
}

int cmd_graph(const CommonArgs& args) {
  Resolved r = resolve_common(args);
  const DataPaths paths = data_paths(r.cfg, r);
  const StationGraph g = graph_from_cfg(r.cfg, paths.stations);

  const fs::path edges_path = r.out / "graph_edges.csv";
  std::ofstream out(edges_path);
  if (!out) throw io_error("cannot write graph edges: " + edges_path.string());
  out << "src,dst,distance_km,weight\n";
  char buf[256];
  for (const auto& [i, j] : g.edges) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.*g,%.*g\n",
                  g.stations[static_cast<std::size_t>(i)].id.c_str(),
                  g.stations[static_cast<std::size_t>(j)].id.c_str(), 17,
                  g.distance_km(i, j), 17, g.weight(i, j));
    out << buf;
  }
  json summary;
  summary["n_stations"] = g.size();
  summary["n_directed_edges"] = g.edges.size();
  summary["d_max_km"] = g.d_max_km;
  std::ofstream sf(r.out / "graph_summary.json");
  sf << summary.dump(1) << "\n";
  r.cfg["graph"] = {{"d_max_km", g.d_max_km}};
  write_resolved(r, "graph");
  std::cout << "graph: " << g.size() << " stations, " << g.edges.size()
            << " directed edges\n";
  return 0;
}

int cmd_train(const CommonArgs& args, const std::optional<std::string>& variant_flag,
              std::optional<int> lead_flag, std::optional<int> epochs_flag) {
  Resolved r = resolve_common(args);
  const DataPaths paths = data_paths(r.cfg, r);
  const ForecastDataset data = load_forecast_csv(paths.forecasts);
  const StationGraph graph = graph_from_cfg(r.cfg, paths.stations);
  const double epsilon_mm = r.cfg.value("epsilon_mm", kDefaultEpsilonMm);

  TrainConfig tc;
  tc.epochs = epochs_flag.value_or(cfg_get(r.cfg, "train", "epochs", 25));
  tc.learning_rate = cfg_get(r.cfg, "train", "learning_rate", 1e-4);
  tc.seed = r.seed;
  tc.lead_hours = lead_flag.value_or(cfg_get(r.cfg, "train", "lead_hours", 24));
  tc.epsilon_mm = epsilon_mm;
  tc.ens_feature = resolve_ens_feature(r.cfg, data);

  ModelConfig mc = model_from_cfg(r.cfg, epsilon_mm);
  if (variant_flag) mc.variant = variant_from_name(*variant_flag);
  const SplitSpec split = split_or_default(r.cfg, data, tc.lead_hours);

  const TrainResult res = train_model(mc, tc, split, graph, data);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

  Checkpoint ckpt = res.checkpoint;
  const fs::path ckpt_path = r.out / ckpt_name(mc.variant, tc.lead_hours);
  save_checkpoint(ckpt, ckpt_path.string());

  const fs::path log_path =
      r.out / ("train_log_" + std::string(variant_name(mc.variant)) + "_" +
               std::to_string(tc.lead_hours) + "h.csv");
  std::ofstream lf(log_path);
  if (!lf) throw io_error("cannot write training log: " + log_path.string());
  lf << "epoch,train_crps,val_crps\n";
  char buf[128];
  for (const auto& e : res.log) {
    std::snprintf(buf, sizeof(buf), "%d,%.*g,%.*g\n", e.epoch, 17, e.train_crps, 17,
                  e.val_crps);
    lf << buf;
  }

  r.cfg["model"] = model_to_cfg(ckpt.config);
  r.cfg["model"]["u_global"] = ckpt.config.u_global;
  r.cfg["split"] = split_to_cfg(split);
  r.cfg["train"] = {{"epochs", tc.epochs},
                    {"learning_rate", tc.learning_rate},
                    {"lead_hours", tc.lead_hours},
                    {"ens_feature", data.feature_names.empty()
                                        ? std::string()
                                        : data.feature_names[static_cast<std::size_t>(
                                              tc.ens_feature)]}};
  r.cfg["epsilon_mm"] = epsilon_mm;
  write_resolved(r, "train");
  std::cout << "trained " << variant_name(mc.variant) << " for lead " << tc.lead_hours
            << "h; best epoch " << res.best_epoch << "; checkpoint " << ckpt_path.string()
            << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, std::optional<int> lead_flag) {
  Resolved r = resolve_common(args);
  const DataPaths paths = data_paths(r.cfg, r);
  const ForecastDataset data = load_forecast_csv(paths.forecasts);
  const StationGraph graph = graph_from_cfg(r.cfg, paths.stations);
  const double epsilon_mm = r.cfg.value("epsilon_mm", kDefaultEpsilonMm);
  const int lead = lead_flag.value_or(cfg_get(r.cfg, "train", "lead_hours", 24));

  std::vector<std::string> variants = cfg_get(
      r.cfg, "evaluate", "variants",
      std::vector<std::string>{"ens", "normal", "normal_point_mass",
                               "normal_point_mass_gpd"});
  const SplitSpec split = split_or_default(r.cfg, data, lead);

  for (const std::string& v : variants) {
    ScoreReport rep;
    if (v == "ens") {
      rep = evaluate_ens_baseline(data, graph, split, lead, epsilon_mm,
                                  resolve_ens_feature(r.cfg, data), r.jobs);
    } else {
      const fs::path ckpt_path = r.out / ckpt_name(variant_from_name(v), lead);
      if (!fs::exists(ckpt_path)) {
        throw io_error("missing checkpoint for variant " + v + ": " + ckpt_path.string());
      }
      const Checkpoint ckpt = load_checkpoint(ckpt_path.string());
      rep = evaluate_checkpoint(ckpt, data, graph, split, r.jobs);
    }
    const std::string stem = v + "_" + std::to_string(lead) + "h";
    save_report_json(rep, (r.out / ("report_" + stem + ".json")).string());
    save_per_station_csv(rep, graph, (r.out / ("per_station_" + stem + ".csv")).string());
    std::cout << "variant " << v << ": crps=" << rep.crps << " brier=" << rep.brier
              << " qs99=" << rep.qs99 << " (n=" << rep.n_records << ")\n";
  }
  r.cfg["split"] = split_to_cfg(split);
  r.cfg["evaluate"] = {{"variants", variants}};
  r.cfg["epsilon_mm"] = epsilon_mm;
  write_resolved(r, "eval");
  return 0;
}

int cmd_exceed(const CommonArgs& args, std::optional<double> threshold_flag,
               const std::optional<std::string>& init_flag, std::optional<int> lead_flag) {
  Resolved r = resolve_common(args);
  const DataPaths paths = data_paths(r.cfg, r);
  const ForecastDataset data = load_forecast_csv(paths.forecasts);
  const StationGraph graph = graph_from_cfg(r.cfg, paths.stations);
  const double epsilon_mm = r.cfg.value("epsilon_mm", kDefaultEpsilonMm);

  const double threshold_mm =
      threshold_flag.value_or(cfg_get(r.cfg, "exceedance", "threshold_mm", 25.0));
  const int lead = lead_flag.value_or(cfg_get(
      r.cfg, "exceedance", "lead_hours", cfg_get(r.cfg, "train", "lead_hours", 24)));
  std::string init = init_flag.value_or(
      cfg_get(r.cfg, "exceedance", "init_time", std::string()));
  const std::string variant = cfg_get(
      r.cfg, "exceedance", "variant",
      cfg_get(r.cfg, "model", "variant", std::string("normal_point_mass_gpd")));

  const auto times = init_times_in(data, lead, init, init.empty() ? "" : init);
  if (init.empty()) {
    const auto all = init_times_in(data, lead, "", "");
    if (all.empty()) throw validation_error("no data for lead " + std::to_string(lead));
    init = all.back();
  } else if (times.empty()) {
    throw validation_error("init_time " + init + " not present for lead " +
                           std::to_string(lead));
  }

  const fs::path ckpt_path = r.out / ckpt_name(variant_from_name(variant), lead);
  if (!fs::exists(ckpt_path)) {
    throw io_error("missing checkpoint: " + ckpt_path.string());
  }
  const Checkpoint ckpt = load_checkpoint(ckpt_path.string());

  BatchOptions opt;
  opt.lead_hours = lead;
  opt.epsilon_mm = ckpt.epsilon_mm;
  opt.ens_feature = ckpt.ens_feature;
  opt.stats = FeatureStats{ckpt.feature_mean, ckpt.feature_std};
  opt.init_lo = init;
  opt.init_hi = init;
  const auto batches = make_batches(data, graph, opt);
  if (batches.empty()) throw validation_error("no batch for init_time " + init);
  const EnsembleBatch& b = batches.front();
  const auto params = predict_params(b, graph, ckpt.net, ckpt.config);

  const fs::path out_path =
      r.out / ("exceedance_" + std::to_string(lead) + "h.csv");
  std::ofstream out(out_path);
  if (!out) throw io_error("cannot write exceedance table: " + out_path.string());
  out << "station_id,lat,lon,prob,ens_frac\n";
  char buf[256];
  for (int i = 0; i < b.n_stations; ++i) {
    const DistributionVariant dv{ckpt.config.variant, params[static_cast<std::size_t>(i)]};
    const double prob = variant_exceedance(dv, threshold_mm, ckpt.epsilon_mm);
    int above = 0;
    for (int m = 0; m < b.n_ens; ++m) {
      if (b.ens_raw_mm(i, m) > threshold_mm) ++above;
    }
    const double ens_frac = static_cast<double>(above) / b.n_ens;
    const auto& s = graph.stations[static_cast<std::size_t>(i)];
    std::snprintf(buf, sizeof(buf), "%s,%.*g,%.*g,%.*g,%.*g\n", s.id.c_str(), 17,
                  s.latitude, 17, s.longitude, 17, prob, 17, ens_frac);
    out << buf;
  }
  r.cfg["exceedance"] = {{"threshold_mm", threshold_mm},
                         {"lead_hours", lead},
                         {"init_time", init},
                         {"variant", variant}};
  write_resolved(r, "exceed");
  std::cout << "exceedance table for " << init << " lead " << lead << "h at "
            << threshold_mm << " mm: " << out_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble precipitation post-processing with tailed mixture "
               "distributions over a station graph"};
  app.require_subcommand(1);

  CommonArgs common;
  std::optional<std::string> variant_flag, init_flag;
  std::optional<int> lead_flag, epochs_flag;
  std::optional<double> threshold_flag;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "JSON config file");
    cmd->add_option("--seed", common.seed, "RNG seed (overrides config)");
    cmd->add_option("--jobs", common.jobs, "evaluation parallelism");
    cmd->add_option("--out", common.out_dir, "output directory");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  add_common(synth);
  CLI::App* graphc = app.add_subcommand("graph", "build the station graph and export it");
  add_common(graphc);
  CLI::App* train = app.add_subcommand("train", "train one variant for one lead time");
  add_common(train);
  train->add_option("--variant", variant_flag,
                    "normal | normal_point_mass | normal_point_mass_gpd");
  train->add_option("--lead", lead_flag, "lead time in hours");
  train->add_option("--epochs", epochs_flag, "training epochs");
  CLI::App* eval = app.add_subcommand("eval", "score variants on the test range");
  add_common(eval);
  eval->add_option("--lead", lead_flag, "lead time in hours");
  CLI::App* exceed =
      app.add_subcommand("exceed", "per-station threshold exceedance probabilities");
  add_common(exceed);
  exceed->add_option("--threshold-mm", threshold_flag, "raw threshold in mm");
  exceed->add_option("--init-time", init_flag, "forecast init time (ISO-8601)");
  exceed->add_option("--lead", lead_flag, "lead time in hours");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) return cmd_synth(common);
    if (graphc->parsed()) return cmd_graph(common);
    if (train->parsed()) return cmd_train(common, variant_flag, lead_flag, epochs_flag);
    if (eval->parsed()) return cmd_eval(common, lead_flag);
    if (exceed->parsed()) return cmd_exceed(common, threshold_flag, init_flag, lead_flag);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

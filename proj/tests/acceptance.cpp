// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line each. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "tailcast/autodiff.hpp"
#include "tailcast/distributions.hpp"
#include "tailcast/graph.hpp"
#include "tailcast/model.hpp"
#include "tailcast/pipeline.hpp"
#include "tailcast/scoring.hpp"

using namespace tailcast;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double unif(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

TailedMixtureParams random_params(std::mt19937_64& rng) {
  TailedMixtureParams p;
  p.p = unif(rng, 0.0, 0.95);
  p.mu = unif(rng, -2.0, 2.0);
  p.sigma = unif(rng, 0.1, 3.0);
  p.u = p.mu + unif(rng, 0.5, 3.0) * p.sigma;
  p.sigma_u = unif(rng, 0.1, 3.0);
  p.xi = unif(rng, 0.0, 0.9);
  p.c = kDefaultCensor;
  if (!(p.u > p.c + 1e-3)) p.u = p.c + 1e-3;
  return p;
}

EnsembleBatch random_batch(const StationGraph& g, int n_ens, int n_features,
                           std::mt19937_64& rng) {
  EnsembleBatch b;
  b.init_time = "t0";
  b.lead_hours = 24;
  b.n_stations = g.size();
  b.n_ens = n_ens;
  b.features.resize(static_cast<Eigen::Index>(g.size()) * n_ens, n_features);
  for (Eigen::Index i = 0; i < b.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < n_features; ++j) b.features(i, j) = unif(rng, -2, 2);
  }
  b.y.resize(g.size());
  b.obs_raw_mm.resize(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const bool dry = unif(rng, 0, 1) < 0.4;
    b.obs_raw_mm[i] = dry ? 0.0 : unif(rng, 0.05, 20.0);
    b.y[i] = std::log(b.obs_raw_mm[i] + kDefaultEpsilonMm);
  }
  b.ens_raw_mm = Eigen::MatrixXd::Zero(g.size(), n_ens);
  return b;
}

StationGraph toy_graph(int n, std::mt19937_64& rng) {
  std::vector<Station> st;
  for (int i = 0; i < n; ++i) {
    st.push_back({"S" + std::to_string(i), 47.0 + unif(rng, 0, 4), 6.0 + unif(rng, 0, 6),
                  unif(rng, 0, 1500)});
  }
  return build_graph(st, 300.0);
}

// ------------------------------------------------------------- criterion 1

Outcome criterion_crps_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const TailedMixtureParams p = random_params(rng);
    const double jump = mixture_cdf(p, p.c);
    const double tau = unif(rng, 0.0, 1.0);
    const double y = (tau <= jump) ? p.c : mixture_quantile(p, tau);
    const double closed = crps_mixture(p, y).total;
    const double quad = crps_mixture_quadrature(p, y);
    worst = std::max(worst, std::fabs(closed - quad));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max|closed-quadrature|=%.3g over 1000 draws in %.1fs",
                worst, secs);
  return {worst < 1e-5 && secs < 60.0, buf};
}

// ------------------------------------------------------------- criterion 2

Outcome criterion_limiting_cases() {
  std::mt19937_64 rng(1002);
  double worst_normal = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double mu = unif(rng, -2, 2), sg = unif(rng, 0.1, 3), y = unif(rng, -6, 6);
    const double f1 = crps_f1(0.0, mu, sg, -kUnboundedLimit, kUnboundedLimit, y);
    worst_normal = std::max(worst_normal, std::fabs(f1 - crps_normal(mu, sg, y)));
  }
  double worst_exp = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double m = unif(rng, 0, 0.95), u = unif(rng, -1, 1);
    const double su = unif(rng, 0.2, 2.5);
    const double y = u + unif(rng, 0, 3) * su;
    const auto cdf = [&](double x) {
      if (x < u) return 0.0;
      return m + (1.0 - m) * (1.0 - std::exp(-(x - u) / su));
    };
    const double cutoff = u + 30.0 * su;
    std::vector<double> breaks{u, y};
    double quad = crps_quadrature_oracle(cdf, y, u - 1.0, cutoff, breaks, 1e-9);
    quad += (1.0 - m) * (1.0 - m) * su * 0.5 * std::exp(-2.0 * (cutoff - u) / su);
    worst_exp = std::max(worst_exp, std::fabs(crps_f2(m, u, su, 0.0, y) - quad));
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "normal limit max=%.3g, exponential tail max=%.3g",
                worst_normal, worst_exp);
  return {worst_normal < 1e-6 && worst_exp < 1e-6, buf};
}

// ------------------------------------------------------------- criterion 3

Outcome criterion_gradcheck() {
  std::mt19937_64 rng(1003);
  const StationGraph g = toy_graph(5, rng);
  ModelConfig cfg;
  cfg.variant = VariantTag::NormalPointMassGPD;
  cfg.n_features = 4;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 12;
  cfg.gnn_layers = 2;
  cfg.threshold_mode = ThresholdMode::LearnedPerStation;
  cfg.xi_mode = XiMode::LearnedSigmoid;
  NetworkParameters net = init_network(cfg, 4242);
  const EnsembleBatch b = random_batch(g, 3, 4, rng);

  ad::Tape tape;
  std::vector<ad::DiffTensor> leaves;
  const ParamNodes nodes = build_forward(tape, b, g, net, cfg, true, &leaves);
  const ad::DiffTensor loss = build_crps_loss(tape, nodes, b.y, cfg);
  tape.backward(loss);

  const auto refs = parameter_refs(net);
  const double step = 1e-5;
  double worst_rel = 0.0;
  long n_checked = 0;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    Eigen::Map<Eigen::MatrixXd> param(refs[k].data, refs[k].rows, refs[k].cols);
    const ad::Array& an = leaves[k].grad();
    for (Eigen::Index r = 0; r < refs[k].rows; ++r) {
      for (Eigen::Index c = 0; c < refs[k].cols; ++c) {
        const double keep = param(r, c);
        param(r, c) = keep + step;
        ad::Tape th;
        const double fh =
            build_crps_loss(th, build_forward(th, b, g, net, cfg, false), b.y, cfg).scalar();
        param(r, c) = keep - step;
        ad::Tape tl;
        const double fl =
            build_crps_loss(tl, build_forward(tl, b, g, net, cfg, false), b.y, cfg).scalar();
        param(r, c) = keep;
        const double fd = (fh - fl) / (2.0 * step);
        const double av = an(r, c);
        ++n_checked;
        if (std::fabs(fd) < 1e-6 && std::fabs(av) < 1e-6) continue;
        worst_rel = std::max(
            worst_rel, std::fabs(fd - av) / std::max(std::fabs(fd), std::fabs(av)));
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max relative error %.3g over %ld parameters",
                worst_rel, n_checked);
  return {worst_rel < 1e-3 && n_checked >= 500, buf};
}

// ------------------------------------------------------------- criterion 4

Outcome criterion_permutation() {
  std::mt19937_64 rng(1004);
  const StationGraph g = toy_graph(6, rng);
  ModelConfig cfg;
  cfg.variant = VariantTag::NormalPointMassGPD;
  cfg.n_features = 4;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 12;
  cfg.gnn_layers = 2;
  cfg.u_global = 1.0;
  NetworkParameters net = init_network(cfg, 777);
  EnsembleBatch b = random_batch(g, 7, 4, rng);
  const auto base = predict_params(b, g, net, cfg);

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    EnsembleBatch p = b;
    for (int s = 0; s < b.n_stations; ++s) {
      std::vector<int> perm(static_cast<std::size_t>(b.n_ens));
      for (int m = 0; m < b.n_ens; ++m) perm[static_cast<std::size_t>(m)] = m;
      for (std::size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng() % i)]);
      }
      for (int m = 0; m < b.n_ens; ++m) {
        p.features.row(static_cast<Eigen::Index>(s) * b.n_ens + m) =
            b.features.row(static_cast<Eigen::Index>(s) * b.n_ens +
                           perm[static_cast<std::size_t>(m)]);
      }
    }
    const auto out = predict_params(p, g, net, cfg);
    for (int s = 0; s < b.n_stations; ++s) {
      const auto& a = base[static_cast<std::size_t>(s)];
      const auto& q = out[static_cast<std::size_t>(s)];
      worst = std::max({worst, std::fabs(a.p - q.p), std::fabs(a.mu - q.mu),
                        std::fabs(a.sigma - q.sigma), std::fabs(a.sigma_u - q.sigma_u)});
    }
  }

  // node-permutation equivariance of the full GINE stack
  std::vector<Station> st = g.stations;
  double worst_eq = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> perm(st.size());
    for (std::size_t i = 0; i < st.size(); ++i) perm[i] = static_cast<int>(i);
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng() % i)]);
    }
    std::vector<Station> st_p(st.size());
    for (std::size_t i = 0; i < st.size(); ++i) st_p[static_cast<std::size_t>(perm[i])] = st[i];
    const StationGraph gp = build_graph(st_p, 300.0);
    EnsembleBatch bp = b;
    for (std::size_t i = 0; i < st.size(); ++i) {
      const int q = perm[i];
      bp.features.middleRows(static_cast<Eigen::Index>(q) * b.n_ens, b.n_ens) =
          b.features.middleRows(static_cast<Eigen::Index>(i) * b.n_ens, b.n_ens);
      bp.y[q] = b.y[static_cast<Eigen::Index>(i)];
      bp.obs_raw_mm[q] = b.obs_raw_mm[static_cast<Eigen::Index>(i)];
    }
    const auto out = predict_params(bp, gp, net, cfg);
    for (std::size_t i = 0; i < st.size(); ++i) {
      const auto& a = base[i];
      const auto& q = out[static_cast<std::size_t>(perm[i])];
      worst_eq = std::max({worst_eq, std::fabs(a.mu - q.mu), std::fabs(a.sigma - q.sigma),
                           std::fabs(a.p - q.p)});
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "member-shuffle max drift %.3g, node-permutation max drift %.3g", worst,
                worst_eq);
  return {worst < 1e-5 && worst_eq < 1e-5, buf};
}

// ------------------------------------------------------------- criterion 5

struct BenchScores {
  double crps = 0, brier = 0, qs99 = 0;
};

BenchScores run_variant(VariantTag variant, const SyntheticData& data,
                        const StationGraph& graph, const SplitSpec& split,
                        std::uint64_t seed) {
  ModelConfig mc;
  mc.variant = variant;
  mc.embed_dim = 16;
  mc.hidden_dim = 32;
  mc.gnn_layers = 2;
  mc.threshold_mode = ThresholdMode::GlobalFixed;
  mc.xi_mode = XiMode::Fixed;
  mc.xi_fixed = 0.5;
  TrainConfig tc;
  tc.epochs = 25;
  tc.learning_rate = 1e-4;
  tc.seed = seed;
  tc.lead_hours = 120;
  const TrainResult r = train_model(mc, tc, split, graph, data.data);
  const ScoreReport rep = evaluate_checkpoint(r.checkpoint, data.data, graph, split, 2);
  return {rep.crps, rep.brier, rep.qs99};
}

Outcome criterion_model_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  int pm_beats_normal = 0;
  int gpd_qs_le_pm = 0;
  const int n_seeds = 5;
  for (int s = 0; s < n_seeds; ++s) {
    SyntheticConfig sc;
    sc.n_stations = 50;
    sc.n_days = 300;
    sc.n_ens = 11;
    sc.n_features = 10;
    sc.dry_fraction = 0.45;
    // the 120h lead: the low-predictability regime where the tail model earns
    // its keep (the short-lead regime favors the sharp conditional body)
    sc.lead_hours = {120};
    const SyntheticData data = generate_synthetic(sc, 9000 + static_cast<std::uint64_t>(s));
    const StationGraph graph = build_graph(data.stations, 300.0);
    SplitSpec split;
    split.train_begin = "2017-01-01";
    split.train_end = "2017-08-08T23:59:59Z";  // 220 days
    split.test_begin = "2017-08-09";
    split.test_end = "2018-12-31";

    const std::uint64_t seed = 100 + static_cast<std::uint64_t>(s);
    const BenchScores normal = run_variant(VariantTag::PlainNormal, data, graph, split, seed);
    const BenchScores pm = run_variant(VariantTag::NormalPointMass, data, graph, split, seed);
    const BenchScores gpd =
        run_variant(VariantTag::NormalPointMassGPD, data, graph, split, seed);

    if (pm.crps < normal.crps && pm.brier < normal.brier) ++pm_beats_normal;
    if (gpd.qs99 <= pm.qs99) ++gpd_qs_le_pm;
    std::printf("    seed %d: normal crps=%.4f brier=%.4f | point-mass crps=%.4f "
                "brier=%.4f qs99=%.4f | gpd qs99=%.4f\n",
                s + 1, normal.crps, normal.brier, pm.crps, pm.brier, pm.qs99, gpd.qs99);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "point-mass beats normal on CRPS+Brier in %d/5 seeds (need >=4); GPD qs99 "
                "<= point-mass in %d/5 (need >=3); %.0fs (budget 1800s)",
                pm_beats_normal, gpd_qs_le_pm, secs);
  return {pm_beats_normal >= 4 && gpd_qs_le_pm >= 3 && secs < 1800.0, buf};
}

// ------------------------------------------------------------- criterion 6

Outcome criterion_invariant_fuzz() {
  std::mt19937_64 rng(1006);
  const StationGraph g = toy_graph(4, rng);
  ModelConfig cfg;
  cfg.variant = VariantTag::NormalPointMassGPD;
  cfg.n_features = 3;
  cfg.embed_dim = 6;
  cfg.hidden_dim = 8;
  cfg.gnn_layers = 1;
  cfg.threshold_mode = ThresholdMode::LearnedPerStation;
  cfg.xi_mode = XiMode::LearnedSigmoid;
  NetworkParameters net = init_network(cfg, 1);
  const EnsembleBatch b = random_batch(g, 3, 3, rng);

  long violations = 0;
  long monotone_failures = 0;
  for (int draw = 0; draw < 10000; ++draw) {
    for (const ParamRef& r : parameter_refs(net)) {
      Eigen::Map<Eigen::MatrixXd> m(r.data, r.rows, r.cols);
      for (Eigen::Index i = 0; i < r.rows; ++i) {
        for (Eigen::Index j = 0; j < r.cols; ++j) m(i, j) = unif(rng, -5.0, 5.0);
      }
    }
    std::vector<TailedMixtureParams> params;
    try {
      params = predict_params(b, g, net, cfg);  // validates every station
    } catch (const std::exception&) {
      ++violations;
      continue;
    }
    // monotonicity of the CDF on a dense grid, spot-checked per draw
    const auto& p = params[static_cast<std::size_t>(draw % g.size())];
    const double hi = mixture_quantile(p, 0.9999);
    const double lo = p.c - 1.0;
    double prev = -1.0;
    for (int k = 0; k < 1000; ++k) {
      const double y = lo + (hi - lo) * static_cast<double>(k) / 999.0;
      const double f = mixture_cdf(p, y);
      if (f < prev - 1e-12 || f < 0.0 || f > 1.0) {
        ++monotone_failures;
        break;
      }
      prev = f;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%ld invariant violations, %ld monotonicity failures over 10000 draws",
                violations, monotone_failures);
  return {violations == 0 && monotone_failures == 0, buf};
}

// ------------------------------------------------------------- criterion 7

Outcome criterion_determinism() {
  SyntheticConfig sc;
  sc.n_stations = 10;
  sc.n_days = 60;
  sc.n_ens = 5;
  sc.n_features = 6;
  const SyntheticData data = generate_synthetic(sc, 4711);
  const StationGraph graph = build_graph(data.stations, 300.0);
  SplitSpec split;
  split.train_begin = "2017-01-01";
  split.train_end = "2017-02-11T23:59:59Z";
  split.test_begin = "2017-02-12";
  split.test_end = "2017-12-31";

  ModelConfig mc;
  mc.variant = VariantTag::NormalPointMassGPD;
  mc.embed_dim = 8;
  mc.hidden_dim = 12;
  mc.gnn_layers = 1;
  TrainConfig tc;
  tc.epochs = 4;
  tc.seed = 12;
  tc.lead_hours = 24;

  const TrainResult r1 = train_model(mc, tc, split, graph, data.data);
  const TrainResult r2 = train_model(mc, tc, split, graph, data.data);
  const std::string rep1 =
      report_to_json(evaluate_checkpoint(r1.checkpoint, data.data, graph, split, 3));
  const std::string rep2 =
      report_to_json(evaluate_checkpoint(r2.checkpoint, data.data, graph, split, 1));
  const bool same = rep1 == rep2;
  return {same, same ? "two train+eval runs produced byte-identical reports"
                     : "reports differ between identical runs"};
}

// ------------------------------------------------------------- criterion 8

Outcome criterion_exact_oracles() {
  std::mt19937_64 rng(1008);
  double worst_rt = 0.0;
  for (int i = 0; i < 200; ++i) {
    const TailedMixtureParams p = random_params(rng);
    const double jump = mixture_cdf(p, p.c);
    for (double tau : {0.2, 0.5, 0.9, 0.99, 0.999}) {
      if (tau <= jump) continue;
      const double q = mixture_quantile(p, tau);
      worst_rt = std::max(worst_rt, std::fabs(mixture_cdf(p, q) - tau));
    }
  }
  const std::vector<double> two{0.0, 2.0};
  const double ens = crps_ensemble(two, 1.0);
  const double qs = quantile_score(2.0, 1.0, 0.99);
  const double br = brier_score(0.3, true);
  const bool pass = worst_rt < 1e-8 && ens == 0.5 && std::fabs(qs - 0.01) < 1e-14 &&
                    std::fabs(br - 0.49) < 1e-14;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "quantile round-trip max=%.3g; crps_ens=%.17g; qs=%.17g; brier=%.17g",
                worst_rt, ens, qs, br);
  return {pass, buf};
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {"1. CRPS closed form vs quadrature oracle (1000 draws, <1e-5, <60s)",
       criterion_crps_oracle},
      {"2. limiting cases: unbounded censors -> normal CRPS; xi=0 -> exponential tail",
       criterion_limiting_cases},
      {"3. end-to-end gradient check on the 5-station toy graph (>=500 params)",
       criterion_gradcheck},
      {"4. ensemble permutation invariance and node-permutation equivariance",
       criterion_permutation},
      {"5. model ordering on the synthetic benchmark (5 seeds)", criterion_model_ordering},
      {"6. distribution invariant fuzzing (10000 random weight draws)",
       criterion_invariant_fuzz},
      {"7. byte-identical reports from identical train+eval runs", criterion_determinism},
      {"8. exact score oracles and quantile round trip", criterion_exact_oracles},
  };
  int failures = 0;
  for (const Entry& e : entries) {
    const Outcome o = e.fn();
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", e.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria failed\n", failures);
  }
  return failures;
}

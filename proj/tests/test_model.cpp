#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "tailcast/errors.hpp"
#include "tailcast/model.hpp"
#include "tailcast/scoring.hpp"

using namespace tailcast;
using ad::Array;

namespace {

double unif(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

Station at(const std::string& id, double lat, double lon) {
  return Station{id, lat, lon, 0.0};
}

double lon_for_km(double km) { return km / 111.19492664455873; }

StationGraph toy_graph(int n) {
  std::vector<Station> st;
  for (int i = 0; i < n; ++i) {
    st.push_back(at("S" + std::to_string(i), 48.0, 8.0 + 0.9 * i));
  }
  return build_graph(st, 300.0);
}

EnsembleBatch random_batch(const StationGraph& g, int n_ens, int n_features,
                           std::mt19937_64& rng) {
  EnsembleBatch b;
  b.init_time = "2017-01-01T00:00:00Z";
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

void zero_network(NetworkParameters& net) {
  for (const ParamRef& r : parameter_refs(net)) {
    Eigen::Map<Eigen::MatrixXd>(r.data, r.rows, r.cols).setZero();
  }
}

ModelConfig small_config(VariantTag variant, int n_features) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.n_features = n_features;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 6;
  cfg.gnn_layers = 2;
  cfg.u_global = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("init_network is deterministic and fully enumerated") {
  const ModelConfig cfg = small_config(VariantTag::NormalPointMassGPD, 3);
  NetworkParameters a = init_network(cfg, 7);
  NetworkParameters b = init_network(cfg, 7);
  NetworkParameters c = init_network(cfg, 8);
  const auto ra = parameter_refs(a);
  const auto rb = parameter_refs(b);
  REQUIRE(ra.size() == rb.size());
  bool all_equal = true, any_diff_seed = false;
  const auto rc = parameter_refs(c);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const Eigen::Map<Eigen::MatrixXd> ma(ra[i].data, ra[i].rows, ra[i].cols);
    const Eigen::Map<Eigen::MatrixXd> mb(rb[i].data, rb[i].rows, rb[i].cols);
    const Eigen::Map<Eigen::MatrixXd> mc(rc[i].data, rc[i].rows, rc[i].cols);
    if (ma != mb) all_equal = false;
    if (ma != mc) any_diff_seed = true;
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
  // 6 deepset/psi arrays pairs + per-gine (2 layers + eps) + 6 heads
  CHECK(parameter_count(a) > 0);
}

TEST_CASE("all-zero network emits the activation values at zero") {
  std::mt19937_64 rng(11);
  const StationGraph g = toy_graph(4);
  const ModelConfig cfg = small_config(VariantTag::NormalPointMassGPD, 3);
  NetworkParameters net = init_network(cfg, 1);
  zero_network(net);
  const EnsembleBatch b = random_batch(g, 5, 3, rng);
  const auto params = predict_params(b, g, net, cfg);
  for (const auto& pr : params) {
    CHECK(pr.p == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pr.mu == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pr.sigma ==
          doctest::Approx(std::log(2.0) + cfg.sigma_floor).epsilon(1e-12));
    CHECK(pr.xi == 0.5);           // Fixed mode overrides the head
    CHECK(pr.u == cfg.u_global);   // GlobalFixed mode overrides the head
    CHECK(pr.sigma_u == doctest::Approx(std::log(2.0) + cfg.sigma_floor).epsilon(1e-12));
  }
}

TEST_CASE("mode contracts for xi and u") {
  std::mt19937_64 rng(13);
  const StationGraph g = toy_graph(3);
  ModelConfig cfg = small_config(VariantTag::NormalPointMassGPD, 2);
  const EnsembleBatch b = random_batch(g, 4, 2, rng);

  cfg.xi_mode = XiMode::Fixed;
  cfg.xi_fixed = 0.5;
  cfg.threshold_mode = ThresholdMode::GlobalFixed;
  cfg.u_global = 0.8;
  NetworkParameters net = init_network(cfg, 3);
  for (const auto& pr : predict_params(b, g, net, cfg)) {
    CHECK(pr.xi == 0.5);
    CHECK(pr.u == 0.8);
  }

  cfg.xi_mode = XiMode::LearnedSigmoid;
  cfg.threshold_mode = ThresholdMode::LearnedPerStation;
  for (const auto& pr : predict_params(b, g, net, cfg)) {
    CHECK(pr.xi > 0.0);
    CHECK(pr.xi < 1.0);
    CHECK(pr.u >= cfg.censor + kThresholdGap);
  }
}

TEST_CASE("DeepSet embedding matches a direct double-path evaluation") {
  // one station, no GNN layers: heads act on Psi(sum_n rho(x_n))
  std::mt19937_64 rng(17);
  const StationGraph g = toy_graph(1);
  ModelConfig cfg = small_config(VariantTag::PlainNormal, 3);
  cfg.gnn_layers = 0;
  NetworkParameters net = init_network(cfg, 5);
  EnsembleBatch b = random_batch(g, 4, 3, rng);

  const auto params = predict_params(b, g, net, cfg);
  // independent evaluation with plain Eigen
  Eigen::MatrixXd member_emb = apply_affine(net.rho2, apply_affine(net.rho1, b.features));
  Eigen::MatrixXd pooled = member_emb.colwise().sum();
  Eigen::MatrixXd h = apply_affine(net.psi2, apply_affine(net.psi1, pooled));
  const double mu_expected = (h * net.head_mu.W.transpose())(0, 0) + net.head_mu.b(0);
  CHECK(params[0].mu == doctest::Approx(mu_expected).epsilon(1e-12));

  SUBCASE("single member: the sum has one term") {
    EnsembleBatch b1 = b;
    b1.n_ens = 1;
    b1.features = b.features.topRows(1);
    const auto p1 = predict_params(b1, g, net, cfg);
    Eigen::MatrixXd e1 =
        apply_affine(net.rho2, apply_affine(net.rho1, b1.features));
    Eigen::MatrixXd h1 = apply_affine(net.psi2, apply_affine(net.psi1, e1));
    const double mu1 = (h1 * net.head_mu.W.transpose())(0, 0) + net.head_mu.b(0);
    CHECK(p1[0].mu == doctest::Approx(mu1).epsilon(1e-12));
  }

  SUBCASE("duplicating every member doubles the pooled sum") {
    EnsembleBatch b2 = b;
    b2.n_ens = b.n_ens * 2;
    b2.features.resize(b.features.rows() * 2, b.features.cols());
    b2.features << b.features, b.features;
    const auto p2 = predict_params(b2, g, net, cfg);
    Eigen::MatrixXd h2 = apply_affine(net.psi2, apply_affine(net.psi1, Eigen::MatrixXd(2.0 * pooled)));
    const double mu2 = (h2 * net.head_mu.W.transpose())(0, 0) + net.head_mu.b(0);
    CHECK(p2[0].mu == doctest::Approx(mu2).epsilon(1e-12));
  }
}

TEST_CASE("double-path deepset/gine stack agrees with the differentiable forward") {
  // heads wired to basis vectors expose the hidden state through predict_params
  std::mt19937_64 rng(71);
  const StationGraph g = toy_graph(4);
  ModelConfig cfg = small_config(VariantTag::PlainNormal, 3);
  cfg.gnn_layers = 2;
  NetworkParameters net = init_network(cfg, 83);
  net.gine[0].epsilon = 0.25;
  net.gine[1].epsilon = -0.1;
  net.head_mu.W.setZero();
  net.head_mu.W(0, 1) = 1.0;  // mu head reads h[:, 1]
  const EnsembleBatch b = random_batch(g, 5, 3, rng);

  Eigen::MatrixXd h(g.size(), cfg.embed_dim);
  for (int i = 0; i < g.size(); ++i) {
    h.row(i) = deepset_embed(b.features.middleRows(
                                 static_cast<Eigen::Index>(i) * b.n_ens, b.n_ens),
                             net, cfg)
                   .transpose();
  }
  for (const auto& layer : net.gine) h = gine_layer(h, g, layer);

  const auto params = predict_params(b, g, net, cfg);
  for (int i = 0; i < g.size(); ++i) {
    CHECK(params[static_cast<std::size_t>(i)].mu ==
          doctest::Approx(h(i, 1)).epsilon(1e-12));
  }
}

TEST_CASE("ensemble permutation invariance") {
  std::mt19937_64 rng(19);
  const StationGraph g = toy_graph(5);
  const ModelConfig cfg = small_config(VariantTag::NormalPointMassGPD, 4);
  NetworkParameters net = init_network(cfg, 23);
  EnsembleBatch b = random_batch(g, 6, 4, rng);
  const auto base = predict_params(b, g, net, cfg);

  for (int shuffle = 0; shuffle < 25; ++shuffle) {
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
    const auto shuffled = predict_params(p, g, net, cfg);
    for (int s = 0; s < b.n_stations; ++s) {
      const auto& a = base[static_cast<std::size_t>(s)];
      const auto& q = shuffled[static_cast<std::size_t>(s)];
      CHECK(std::fabs(a.p - q.p) < 1e-5);
      CHECK(std::fabs(a.mu - q.mu) < 1e-5);
      CHECK(std::fabs(a.sigma - q.sigma) < 1e-5);
      CHECK(std::fabs(a.sigma_u - q.sigma_u) < 1e-5);
    }
  }
}

TEST_CASE("GINE update: residual identity with a zero MLP") {
  std::mt19937_64 rng(29);
  const StationGraph g = toy_graph(3);
  ModelConfig cfg = small_config(VariantTag::PlainNormal, 2);
  cfg.gnn_layers = 2;
  NetworkParameters net = init_network(cfg, 31);
  for (auto& layer : net.gine) {
    layer.fc1.W.setZero();
    layer.fc1.b.setZero();
    layer.fc2.W.setZero();
    layer.fc2.b.setZero();
  }
  const EnsembleBatch b = random_batch(g, 3, 2, rng);
  const auto with_layers = predict_params(b, g, net, cfg);

  ModelConfig cfg0 = cfg;
  cfg0.gnn_layers = 0;
  NetworkParameters net0 = init_network(cfg0, 31);  // same deepset/head draw order
  net0.rho1 = net.rho1;
  net0.rho2 = net.rho2;
  net0.psi1 = net.psi1;
  net0.psi2 = net.psi2;
  net0.head_p = net.head_p;
  net0.head_mu = net.head_mu;
  net0.head_sigma = net.head_sigma;
  net0.head_u = net.head_u;
  net0.head_sigma_u = net.head_sigma_u;
  net0.head_xi = net.head_xi;
  const auto without = predict_params(b, g, net0, cfg0);
  for (int i = 0; i < g.size(); ++i) {
    CHECK(with_layers[static_cast<std::size_t>(i)].mu ==
          doctest::Approx(without[static_cast<std::size_t>(i)].mu).epsilon(1e-13));
    CHECK(with_layers[static_cast<std::size_t>(i)].sigma ==
          doctest::Approx(without[static_cast<std::size_t>(i)].sigma).epsilon(1e-13));
  }
}

TEST_CASE("GINE update: hand-composed aggregation with exact edge weights") {
  // stations at 0/100/250 km give normalized weights {1, 2/3, 0.4}
  const StationGraph g = build_graph({at("a", 0, 0), at("b", 0, lon_for_km(100)),
                                      at("c", 0, lon_for_km(250))},
                                     300.0);
  ModelConfig cfg;
  cfg.variant = VariantTag::PlainNormal;
  cfg.n_features = 1;
  cfg.embed_dim = 1;
  cfg.hidden_dim = 1;
  cfg.gnn_layers = 1;
  NetworkParameters net = init_network(cfg, 1);
  zero_network(net);
  net.psi2.b(0) = 0.5;      // deepset output pinned to h0 = 0.5 for every station
  net.gine[0].fc1.W(0, 0) = 1.0;  // MLP = ReLU (identity weights)
  net.gine[0].fc2.W(0, 0) = 1.0;
  net.head_mu.W(0, 0) = 1.0;

  EnsembleBatch b;
  b.init_time = "t";
  b.lead_hours = 24;
  b.n_stations = 3;
  b.n_ens = 1;
  b.features = Eigen::MatrixXd::Zero(3, 1);
  b.y = Eigen::ArrayXd::Zero(3);
  b.obs_raw_mm = Eigen::ArrayXd::Zero(3);
  b.ens_raw_mm = Eigen::MatrixXd::Zero(3, 1);

  const auto params = predict_params(b, g, net, cfg);
  // z_i = h0 + sum_u ReLU(h0 + w_ui) over self loop (1) and neighbors
  const double h0 = 0.5;
  const double z0 = h0 + (std::max(0.0, h0 + 1.0) + std::max(0.0, h0 + 1.0) +
                          std::max(0.0, h0 + 0.4));
  const double z1 = h0 + (std::max(0.0, h0 + 1.0) + std::max(0.0, h0 + 1.0) +
                          std::max(0.0, h0 + 2.0 / 3.0));
  const double z2 = h0 + (std::max(0.0, h0 + 1.0) + std::max(0.0, h0 + 0.4) +
                          std::max(0.0, h0 + 2.0 / 3.0));
  CHECK(params[0].mu == doctest::Approx(h0 + std::max(0.0, z0)).epsilon(1e-12));
  CHECK(params[1].mu == doctest::Approx(h0 + std::max(0.0, z1)).epsilon(1e-12));
  CHECK(params[2].mu == doctest::Approx(h0 + std::max(0.0, z2)).epsilon(1e-12));
}

TEST_CASE("node permutation equivariance of the GINE stack") {
  std::mt19937_64 rng(37);
  std::vector<Station> st;
  for (int i = 0; i < 6; ++i) {
    st.push_back(at("S" + std::to_string(i), 47.0 + unif(rng, 0, 4), 7.0 + unif(rng, 0, 5)));
  }
  const StationGraph g = build_graph(st, 300.0);
  const ModelConfig cfg = small_config(VariantTag::NormalPointMassGPD, 3);
  NetworkParameters net = init_network(cfg, 41);
  EnsembleBatch b = random_batch(g, 4, 3, rng);
  const auto base = predict_params(b, g, net, cfg);

  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> perm(st.size());
    for (std::size_t i = 0; i < st.size(); ++i) perm[i] = static_cast<int>(i);
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng() % i)]);
    }
    // permuted station list and consistently permuted batch
    std::vector<Station> st_p(st.size());
    for (std::size_t i = 0; i < st.size(); ++i) {
      st_p[static_cast<std::size_t>(perm[i])] = st[i];
    }
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
      CHECK(std::fabs(a.mu - q.mu) < 1e-5);
      CHECK(std::fabs(a.sigma - q.sigma) < 1e-5);
      CHECK(std::fabs(a.p - q.p) < 1e-5);
    }
  }
}

TEST_CASE("differentiable loss equals the closed-form scoring path") {
  std::mt19937_64 rng(43);
  const StationGraph g = toy_graph(5);
  for (VariantTag variant : {VariantTag::PlainNormal, VariantTag::NormalPointMass,
                             VariantTag::NormalPointMassGPD}) {
    for (int trial = 0; trial < 8; ++trial) {
      ModelConfig cfg = small_config(variant, 3);
      if (variant == VariantTag::NormalPointMassGPD && (trial % 2 == 1)) {
        cfg.threshold_mode = ThresholdMode::LearnedPerStation;
        cfg.xi_mode = XiMode::LearnedSigmoid;
      }
      NetworkParameters net = init_network(cfg, 100 + static_cast<std::uint64_t>(trial));
      const EnsembleBatch b = random_batch(g, 4, 3, rng);

      ad::Tape tape;
      const ParamNodes nodes = build_forward(tape, b, g, net, cfg, false);
      const double loss = build_crps_loss(tape, nodes, b.y, cfg).scalar();

      const auto params = predict_params(b, g, net, cfg);
      double expected = 0.0;
      for (int i = 0; i < g.size(); ++i) {
        expected += variant_crps({variant, params[static_cast<std::size_t>(i)]}, b.y[i]);
      }
      expected /= g.size();
      CHECK(loss == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("end-to-end gradient check on a small toy graph") {
  std::mt19937_64 rng(47);
  const StationGraph g = toy_graph(4);
  ModelConfig cfg = small_config(VariantTag::NormalPointMassGPD, 3);
  cfg.embed_dim = 3;
  cfg.hidden_dim = 4;
  cfg.gnn_layers = 1;
  cfg.threshold_mode = ThresholdMode::LearnedPerStation;
  cfg.xi_mode = XiMode::LearnedSigmoid;
  NetworkParameters net = init_network(cfg, 53);
  const EnsembleBatch b = random_batch(g, 3, 3, rng);

  ad::Tape tape;
  std::vector<ad::DiffTensor> leaves;
  const ParamNodes nodes = build_forward(tape, b, g, net, cfg, true, &leaves);
  const ad::DiffTensor loss = build_crps_loss(tape, nodes, b.y, cfg);
  tape.backward(loss);

  const auto refs = parameter_refs(net);
  REQUIRE(refs.size() == leaves.size());
  const double step = 1e-5;
  int checked = 0;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    Eigen::Map<Eigen::MatrixXd> param(refs[k].data, refs[k].rows, refs[k].cols);
    const Array& g_an = leaves[k].grad();
    for (Eigen::Index r = 0; r < refs[k].rows; ++r) {
      for (Eigen::Index c = 0; c < refs[k].cols; ++c) {
        const double keep = param(r, c);
        param(r, c) = keep + step;
        ad::Tape t_hi;
        const double f_hi =
            build_crps_loss(t_hi, build_forward(t_hi, b, g, net, cfg, false), b.y, cfg)
                .scalar();
        param(r, c) = keep - step;
        ad::Tape t_lo;
        const double f_lo =
            build_crps_loss(t_lo, build_forward(t_lo, b, g, net, cfg, false), b.y, cfg)
                .scalar();
        param(r, c) = keep;
        const double fd = (f_hi - f_lo) / (2.0 * step);
        const double an = g_an(r, c);
        ++checked;
        if (std::fabs(fd) < 1e-6 && std::fabs(an) < 1e-6) continue;
        const double rel = std::fabs(fd - an) / std::max(std::fabs(fd), std::fabs(an));
        CHECK(rel < 1e-3);
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("random-weight fuzzing never emits invalid parameters") {
  std::mt19937_64 rng(59);
  const StationGraph g = toy_graph(4);
  for (VariantTag variant : {VariantTag::PlainNormal, VariantTag::NormalPointMass,
                             VariantTag::NormalPointMassGPD}) {
    ModelConfig cfg = small_config(variant, 3);
    cfg.threshold_mode = ThresholdMode::LearnedPerStation;
    cfg.xi_mode = XiMode::LearnedSigmoid;
    NetworkParameters net = init_network(cfg, 1);
    const EnsembleBatch b = random_batch(g, 3, 3, rng);
    for (int draw = 0; draw < 100; ++draw) {
      for (const ParamRef& r : parameter_refs(net)) {
        Eigen::Map<Eigen::MatrixXd> m(r.data, r.rows, r.cols);
        for (Eigen::Index i = 0; i < r.rows; ++i) {
          for (Eigen::Index j = 0; j < r.cols; ++j) m(i, j) = unif(rng, -5.0, 5.0);
        }
      }
      const auto params = predict_params(b, g, net, cfg);  // validates internally
      CHECK(params.size() == static_cast<std::size_t>(g.size()));
    }
  }
}

TEST_CASE("checkpoint round trip") {
  namespace fs = std::filesystem;
  std::mt19937_64 rng(61);
  const StationGraph g = toy_graph(3);
  ModelConfig cfg = small_config(VariantTag::NormalPointMassGPD, 2);
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.net = init_network(cfg, 67);
  ckpt.feature_names = {"f0", "f1"};
  ckpt.feature_mean = Eigen::ArrayXd::Zero(2);
  ckpt.feature_std = Eigen::ArrayXd::Ones(2);
  ckpt.epsilon_mm = 0.01;
  ckpt.ens_feature = 0;
  ckpt.lead_hours = 24;

  const fs::path dir = fs::temp_directory_path() / "tailcast_model_test";
  fs::create_directories(dir);
  const std::string path = (dir / "ckpt.json").string();
  save_checkpoint(ckpt, path);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.feature_names == ckpt.feature_names);
  CHECK(loaded.lead_hours == 24);

  const EnsembleBatch b = random_batch(g, 3, 2, rng);
  const auto a = predict_params(b, g, ckpt.net, ckpt.config);
  const auto l = predict_params(b, g, loaded.net, loaded.config);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mu == l[i].mu);
    CHECK(a[i].sigma == l[i].sigma);
    CHECK(a[i].p == l[i].p);
  }

  std::ofstream bad((dir / "bad.json").string());
  bad << "{\"format\": \"other\"}\n";
  bad.close();
  CHECK_THROWS_AS(load_checkpoint((dir / "bad.json").string()), validation_error);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.json").string()), io_error);
  fs::remove_all(dir);
}

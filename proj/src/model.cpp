#include "tailcast/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <utility>

#include <json.hpp>

#include "tailcast/errors.hpp"

namespace tailcast {

using ad::DiffTensor;
using ad::Tape;
using json = nlohmann::ordered_json;

void validate(const ModelConfig& cfg) {
  if (cfg.n_features < 1 || cfg.embed_dim < 1 || cfg.hidden_dim < 1 ||
      cfg.gnn_layers < 0) {
    throw validation_error("ModelConfig: dimensions must be >= 1 (layers >= 0)");
  }
  if (cfg.xi_mode == XiMode::Fixed && !(cfg.xi_fixed > 0.0 && cfg.xi_fixed < 1.0)) {
    throw validation_error("ModelConfig: fixed xi must lie in (0,1)");
  }
  if (!(cfg.sigma_floor > 0.0)) {
    throw validation_error("ModelConfig: sigma_floor must be > 0");
  }
  if (cfg.variant == VariantTag::NormalPointMassGPD &&
      cfg.threshold_mode == ThresholdMode::GlobalFixed &&
      !(cfg.u_global > cfg.censor + kThresholdGap)) {
    throw validation_error("ModelConfig: global threshold must exceed the censor point");
  }
}

Eigen::MatrixXd apply_affine(const AffineLayer& layer, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x * layer.W.transpose();
  out.rowwise() += layer.b.transpose();
  switch (layer.act) {
    case Activation::Identity:
      break;
    case Activation::ReLU:
      out = out.cwiseMax(0.0);
      break;
    case Activation::Softplus:
      out = out.unaryExpr([](double v) {
        if (v > 30.0) return v;
        if (v < -30.0) return std::exp(v);
        return std::log1p(std::exp(v));
      });
      break;
    case Activation::Sigmoid:
      out = out.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
      break;
  }
  return out;
}

namespace {

class GlorotSampler {
 public:
  explicit GlorotSampler(std::uint64_t seed) : rng_(seed) {}

  AffineLayer layer(int out, int in, Activation act) {
    AffineLayer l;
    l.W.resize(out, in);
    const double lim = std::sqrt(6.0 / static_cast<double>(in + out));
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) {
        l.W(r, c) = (2.0 * uniform() - 1.0) * lim;
      }
    }
    l.b = Eigen::VectorXd::Zero(out);
    l.act = act;
    return l;
  }

 private:
  double uniform() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }
  std::mt19937_64 rng_;
};

}  // namespace

NetworkParameters init_network(const ModelConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  GlorotSampler gs(seed);
  NetworkParameters net;
  net.rho1 = gs.layer(cfg.hidden_dim, cfg.n_features, Activation::ReLU);
  net.rho2 = gs.layer(cfg.embed_dim, cfg.hidden_dim, Activation::Identity);
  net.psi1 = gs.layer(cfg.hidden_dim, cfg.embed_dim, Activation::ReLU);
  net.psi2 = gs.layer(cfg.embed_dim, cfg.hidden_dim, Activation::Identity);
  net.gine.resize(cfg.gnn_layers);
  for (auto& g : net.gine) {
    g.fc1 = gs.layer(cfg.hidden_dim, cfg.embed_dim, Activation::ReLU);
    g.fc2 = gs.layer(cfg.embed_dim, cfg.hidden_dim, Activation::Identity);
    g.epsilon = 0.0;
  }
  // zero-initialized heads: predictions start at the activation midpoints
  // (p = 0.5, mu = 0, sigma = softplus(0) + floor) regardless of the state
  // magnitude accumulated by the sum aggregations
  for (AffineLayer* head : {&net.head_p, &net.head_mu, &net.head_sigma, &net.head_u,
                            &net.head_sigma_u, &net.head_xi}) {
    *head = gs.layer(1, cfg.embed_dim, Activation::Identity);
    head->W.setZero();
  }
  return net;
}

Eigen::VectorXd deepset_embed(const Eigen::MatrixXd& member_features,
                              const NetworkParameters& net, const ModelConfig& cfg) {
  if (member_features.rows() < 1 || member_features.cols() != cfg.n_features) {
    throw validation_error("deepset_embed: feature matrix must be n_ens x n_features");
  }
  const Eigen::MatrixXd per_member =
      apply_affine(net.rho2, apply_affine(net.rho1, member_features));
  Eigen::RowVectorXd pooled = per_member.colwise().sum();
  if (cfg.aggregation == SetAggregation::Mean) {
    pooled /= static_cast<double>(member_features.rows());
  }
  return apply_affine(net.psi2, apply_affine(net.psi1, pooled)).transpose();
}

Eigen::MatrixXd gine_layer(const Eigen::MatrixXd& node_states,
                           const StationGraph& graph, const GineLayer& layer) {
  if (node_states.rows() != graph.size()) {
    throw validation_error("gine_layer: state row count must match the graph");
  }
  Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(node_states.rows(), node_states.cols());
  for (const GraphEdge& e : graph.message_edges()) {
    agg.row(e.dst) +=
        (node_states.row(e.src).array() + e.weight).max(0.0).matrix();
  }
  const Eigen::MatrixXd z = (1.0 + layer.epsilon) * node_states + agg;
  return node_states + apply_affine(layer.fc2, apply_affine(layer.fc1, z));
}

namespace {

void push_layer(std::vector<ParamRef>& out, const std::string& name, AffineLayer& l) {
  out.push_back({name + ".W", l.W.data(), l.W.rows(), l.W.cols()});
  out.push_back({name + ".b", l.b.data(), 1, l.b.size()});
}

}  // namespace

std::vector<ParamRef> parameter_refs(NetworkParameters& net) {
  std::vector<ParamRef> out;
  push_layer(out, "rho1", net.rho1);
  push_layer(out, "rho2", net.rho2);
  push_layer(out, "psi1", net.psi1);
  push_layer(out, "psi2", net.psi2);
  for (std::size_t i = 0; i < net.gine.size(); ++i) {
    const std::string base = "gine" + std::to_string(i);
    push_layer(out, base + ".fc1", net.gine[i].fc1);
    push_layer(out, base + ".fc2", net.gine[i].fc2);
    out.push_back({base + ".eps", &net.gine[i].epsilon, 1, 1});
  }
  push_layer(out, "head_p", net.head_p);
  push_layer(out, "head_mu", net.head_mu);
  push_layer(out, "head_sigma", net.head_sigma);
  push_layer(out, "head_u", net.head_u);
  push_layer(out, "head_sigma_u", net.head_sigma_u);
  push_layer(out, "head_xi", net.head_xi);
  return out;
}

std::size_t parameter_count(NetworkParameters& net) {
  std::size_t n = 0;
  for (const auto& r : parameter_refs(net)) {
    n += static_cast<std::size_t>(r.rows * r.cols);
  }
  return n;
}

namespace {

// Eigen matrices are column-major; keep the same mapping in both directions.
ad::Array ref_to_array(const ParamRef& r) {
  return Eigen::Map<const Eigen::MatrixXd>(r.data, r.rows, r.cols).array();
}

struct LayerNodes {
  DiffTensor W, b;
  Activation act;
};

DiffTensor apply_affine_node(DiffTensor x, const LayerNodes& l) {
  DiffTensor out = ad::broadcast_add_row(ad::matmul(x, ad::transpose(l.W)), l.b);
  switch (l.act) {
    case Activation::Identity: return out;
    case Activation::ReLU: return ad::relu(out);
    case Activation::Softplus: return ad::softplus(out);
    case Activation::Sigmoid: return ad::sigmoid(out);
  }
  return out;
}

// Registers every parameter as a node in parameter_refs order so the training
// loop can map gradients back positionally.
struct NodeRegistry {
  std::vector<DiffTensor> nodes;

  static NodeRegistry build(Tape& tape, NetworkParameters& net, bool trainable,
                            std::vector<DiffTensor>* leaves) {
    NodeRegistry reg;
    for (const ParamRef& r : parameter_refs(net)) {
      const ad::Array v = ref_to_array(r);
      DiffTensor n = trainable ? tape.leaf(v) : tape.constant(v, "param");
      reg.nodes.push_back(n);
      if (trainable && leaves != nullptr) leaves->push_back(n);
    }
    return reg;
  }

  LayerNodes layer(std::size_t w_index, Activation act) const {
    return LayerNodes{nodes[w_index], nodes[w_index + 1], act};
  }
};

}  // namespace

ParamNodes build_forward(Tape& tape, const EnsembleBatch& batch,
                         const StationGraph& graph, const NetworkParameters& net,
                         const ModelConfig& cfg, bool trainable,
                         std::vector<DiffTensor>* leaves) {
  validate(cfg);
  const int n = batch.n_stations;
  if (n != graph.size()) {
    throw validation_error("build_forward: batch station count does not match graph");
  }
  if (batch.features.cols() != cfg.n_features) {
    throw validation_error("build_forward: feature dimension does not match config");
  }
  if (batch.features.rows() != static_cast<Eigen::Index>(n) * batch.n_ens ||
      batch.n_ens < 1) {
    throw validation_error("build_forward: feature row count does not match n_ens");
  }

  // mutable alias only for parameter_refs (which needs non-const pointers);
  // values are copied onto the tape, never written through
  auto& net_mut = const_cast<NetworkParameters&>(net);
  NodeRegistry reg = NodeRegistry::build(tape, net_mut, trainable, leaves);

  std::size_t k = 0;
  const LayerNodes rho1 = reg.layer(k, net.rho1.act); k += 2;
  const LayerNodes rho2 = reg.layer(k, net.rho2.act); k += 2;
  const LayerNodes psi1 = reg.layer(k, net.psi1.act); k += 2;
  const LayerNodes psi2 = reg.layer(k, net.psi2.act); k += 2;
  struct GineNodes { LayerNodes fc1, fc2; DiffTensor eps; };
  std::vector<GineNodes> gine;
  for (std::size_t i = 0; i < net.gine.size(); ++i) {
    GineNodes gn{reg.layer(k, net.gine[i].fc1.act),
                 reg.layer(k + 2, net.gine[i].fc2.act), reg.nodes[k + 4]};
    k += 5;
    gine.push_back(gn);
  }
  const LayerNodes head_p = reg.layer(k, Activation::Identity); k += 2;
  const LayerNodes head_mu = reg.layer(k, Activation::Identity); k += 2;
  const LayerNodes head_sigma = reg.layer(k, Activation::Identity); k += 2;
  const LayerNodes head_u = reg.layer(k, Activation::Identity); k += 2;
  const LayerNodes head_sigma_u = reg.layer(k, Activation::Identity); k += 2;
  const LayerNodes head_xi = reg.layer(k, Activation::Identity); k += 2;

  // DeepSet: h0 = Psi(sum_n rho(x_n)), applied before the GNN
  DiffTensor x = tape.constant(batch.features.array(), "features");
  DiffTensor member_emb = apply_affine_node(apply_affine_node(x, rho1), rho2);
  DiffTensor pooled = ad::block_sum_rows(member_emb, batch.n_ens);
  if (cfg.aggregation == SetAggregation::Mean) {
    pooled = pooled * (1.0 / static_cast<double>(batch.n_ens));
  }
  DiffTensor h = apply_affine_node(apply_affine_node(pooled, psi1), psi2);

  // GINE stack with residuals:
  // h_v <- h_v + MLP((1+eps) h_v + sum_u ReLU(h_u + w_uv))
  const std::vector<GraphEdge> edges = graph.message_edges();
  std::vector<int> src, dst;
  Eigen::ArrayXd w(static_cast<Eigen::Index>(edges.size()));
  src.reserve(edges.size());
  dst.reserve(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    src.push_back(edges[e].src);
    dst.push_back(edges[e].dst);
    w[static_cast<Eigen::Index>(e)] = edges[e].weight;
  }
  for (const auto& layer : gine) {
    DiffTensor msg = ad::relu(ad::add_row_scalars(ad::gather_rows(h, src), w));
    DiffTensor agg = ad::scatter_sum_rows(msg, dst, n);
    DiffTensor self = ad::mul(h, layer.eps + 1.0);
    DiffTensor z = self + agg;
    DiffTensor update =
        apply_affine_node(apply_affine_node(z, layer.fc1), layer.fc2);
    h = h + update;
  }

  // heads with constraint activations
  ParamNodes out;
  out.mu = apply_affine_node(h, head_mu);
  out.sigma = ad::softplus(apply_affine_node(h, head_sigma)) + cfg.sigma_floor;

  const ad::Array zeros = ad::Array::Zero(n, 1);
  if (cfg.variant == VariantTag::PlainNormal) {
    out.p = tape.constant(zeros, "p_zero");
  } else {
    out.p = ad::sigmoid(apply_affine_node(h, head_p));
  }

  if (cfg.variant != VariantTag::NormalPointMassGPD) {
    out.u = tape.constant(ad::Array::Constant(n, 1, kUnboundedLimit), "u_unbounded");
    out.sigma_u = tape.constant(ad::Array::Constant(n, 1, 1.0), "sigma_u_inactive");
    out.xi = tape.constant(ad::Array::Constant(n, 1, cfg.xi_fixed), "xi_inactive");
    return out;
  }

  if (cfg.threshold_mode == ThresholdMode::GlobalFixed) {
    out.u = tape.constant(ad::Array::Constant(n, 1, cfg.u_global), "u_global");
  } else {
    // guard the CDF domain: learned thresholds may not collapse onto c
    out.u = ad::clamp_min(apply_affine_node(h, head_u),
                          cfg.censor + 2.0 * kThresholdGap);
  }
  out.sigma_u = ad::softplus(apply_affine_node(h, head_sigma_u)) + cfg.sigma_floor;
  if (cfg.xi_mode == XiMode::Fixed) {
    out.xi = tape.constant(ad::Array::Constant(n, 1, cfg.xi_fixed), "xi_fixed");
  } else {
    // sigmoid squeezed into [1e-7, 1-1e-7]: the CRPS closed form needs xi < 1
    // and the exponent (xi-1)/xi needs xi > 0
    DiffTensor raw = ad::clamp_min(ad::sigmoid(apply_affine_node(h, head_xi)), 1e-7);
    out.xi = 1.0 - ad::clamp_min(1.0 - raw, 1e-7);
  }
  return out;
}

namespace {

DiffTensor phi_node(DiffTensor z) {
  return kInvSqrt2Pi * ad::exp(ad::mul(z, z) * -0.5);
}

DiffTensor cdf_node(DiffTensor z) {
  return 0.5 * (ad::erf(z * kInvSqrt2) + 1.0);
}

struct F1Common {
  DiffTensor zc, zu, pc, pu, gc, gu, gInt, q;  // q = 1 - p
};

// CRPS(F1, y) in standardized space, reused for the y = u specialization.
DiffTensor f1_crps_std(Tape& tape, const F1Common& f, DiffTensor p, DiffTensor zy) {
  const ad::Array lt_c = ad::lt_mask(zy, f.zc);
  const ad::Array lt_u = ad::lt_mask(zy, f.zu);
  DiffTensor body = p + f.q * cdf_node(zy);
  DiffTensor one = tape.constant(1.0);
  DiffTensor zero = tape.constant(0.0);
  DiffTensor f1y = ad::select(lt_c, zero, ad::select(lt_u, body, one));
  DiffTensor branch = ad::select(
      lt_c, f.q * f.gc - f.zc * f.pc,
      ad::select(lt_u, f.q * ad::neg(phi_node(zy)), f.q * f.gu + f.zu * f.pu));
  return zy * (2.0 * f1y - 1.0) - f.zc * f.pc * f.pc + f.zu * f.pu * f.pu +
         2.0 * f.q * (f.gc * f.pc + f.gu * f.pu) - 2.0 * branch +
         2.0 * f.q * f.q * f.gInt;
}

}  // namespace

DiffTensor build_crps_loss(Tape& tape, const ParamNodes& nodes,
                           const Eigen::ArrayXd& y_transformed,
                           const ModelConfig& cfg) {
  const Eigen::Index n = y_transformed.size();
  if (nodes.mu.value().rows() != n) {
    throw validation_error("build_crps_loss: observation count does not match stations");
  }
  DiffTensor y = tape.constant(
      ad::Array(Eigen::Map<const ad::Array>(y_transformed.data(), n, 1)), "obs");
  const double c_eff =
      cfg.variant == VariantTag::PlainNormal ? -kUnboundedLimit : cfg.censor;

  F1Common f;
  f.q = 1.0 - nodes.p;
  f.zc = (c_eff - nodes.mu) / nodes.sigma;
  f.zu = (nodes.u - nodes.mu) / nodes.sigma;
  DiffTensor zy = (y - nodes.mu) / nodes.sigma;
  f.pc = nodes.p + f.q * cdf_node(f.zc);
  f.pu = f.q * (1.0 - cdf_node(f.zu));
  f.gc = ad::neg(phi_node(f.zc));
  f.gu = ad::neg(phi_node(f.zu));
  f.gInt = -0.5 * kInvSqrtPi * (cdf_node(f.zu * kSqrt2) - cdf_node(f.zc * kSqrt2));

  DiffTensor f1_y = nodes.sigma * f1_crps_std(tape, f, nodes.p, zy);
  DiffTensor f1_u = nodes.sigma * f1_crps_std(tape, f, nodes.p, f.zu);

  // tail part; the excess is clamped at 0 so the untaken branch stays finite
  DiffTensor m = nodes.p + f.q * cdf_node(f.zu);
  DiffTensor surv = 1.0 - m;
  DiffTensor f2_at_u = nodes.sigma_u * surv * surv / (2.0 - nodes.xi);
  DiffTensor excess = ad::clamp_min(y - nodes.u, 0.0) / nodes.sigma_u;
  DiffTensor t = 1.0 + nodes.xi * excess;
  DiffTensor surv_pow = ad::pow(t, (nodes.xi - 1.0) / nodes.xi);
  DiffTensor f2_y = nodes.sigma_u * (excess - 2.0 * surv / (1.0 - nodes.xi) *
                                                  (1.0 - surv_pow) +
                                     surv * surv / (2.0 - nodes.xi));

  const ad::Array below_u = ad::lt_mask(y, nodes.u);
  DiffTensor per_station = ad::select(below_u, f1_y + f2_at_u, f1_u + f2_y);
  return ad::mean(per_station);
}

std::vector<TailedMixtureParams> predict_params(const EnsembleBatch& batch,
                                                const StationGraph& graph,
                                                const NetworkParameters& net,
                                                const ModelConfig& cfg) {
  Tape tape;
  const ParamNodes nodes = build_forward(tape, batch, graph, net, cfg, false);
  std::vector<TailedMixtureParams> out;
  out.reserve(static_cast<std::size_t>(batch.n_stations));
  for (int i = 0; i < batch.n_stations; ++i) {
    TailedMixtureParams pr;
    pr.p = nodes.p.value()(i, 0);
    pr.mu = nodes.mu.value()(i, 0);
    pr.sigma = nodes.sigma.value()(i, 0);
    pr.u = nodes.u.value()(i, 0);
    pr.sigma_u = nodes.sigma_u.value()(i, 0);
    pr.xi = nodes.xi.value()(i, 0);
    pr.c = cfg.censor;
    validate(pr);
    out.push_back(pr);
  }
  return out;
}

// ------------------------------------------------------------- checkpoint IO

namespace {

constexpr const char* kCheckpointTag = "tailcast.checkpoint.v1";

const char* threshold_mode_name(ThresholdMode m) {
  return m == ThresholdMode::GlobalFixed ? "global_fixed" : "learned_per_station";
}

ThresholdMode threshold_mode_from(const std::string& s) {
  if (s == "global_fixed") return ThresholdMode::GlobalFixed;
  if (s == "learned_per_station") return ThresholdMode::LearnedPerStation;
  throw validation_error("unknown threshold mode: " + s);
}

const char* xi_mode_name(XiMode m) {
  return m == XiMode::Fixed ? "fixed" : "learned_sigmoid";
}

XiMode xi_mode_from(const std::string& s) {
  if (s == "fixed") return XiMode::Fixed;
  if (s == "learned_sigmoid") return XiMode::LearnedSigmoid;
  throw validation_error("unknown xi mode: " + s);
}

json config_to_json(const ModelConfig& cfg) {
  json j;
  j["variant"] = variant_name(cfg.variant);
  j["n_features"] = cfg.n_features;
  j["embed_dim"] = cfg.embed_dim;
  j["hidden_dim"] = cfg.hidden_dim;
  j["gnn_layers"] = cfg.gnn_layers;
  j["threshold_mode"] = threshold_mode_name(cfg.threshold_mode);
  j["u_global"] = cfg.u_global;
  j["xi_mode"] = xi_mode_name(cfg.xi_mode);
  j["xi_fixed"] = cfg.xi_fixed;
  j["sigma_floor"] = cfg.sigma_floor;
  j["censor"] = cfg.censor;
  j["aggregation"] = cfg.aggregation == SetAggregation::Sum ? "sum" : "mean";
  j["learnable_gine_epsilon"] = cfg.learnable_gine_epsilon;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.variant = variant_from_name(j.at("variant").get<std::string>());
  cfg.n_features = j.at("n_features").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.hidden_dim = j.at("hidden_dim").get<int>();
  cfg.gnn_layers = j.at("gnn_layers").get<int>();
  cfg.threshold_mode = threshold_mode_from(j.at("threshold_mode").get<std::string>());
  cfg.u_global = j.at("u_global").get<double>();
  cfg.xi_mode = xi_mode_from(j.at("xi_mode").get<std::string>());
  cfg.xi_fixed = j.at("xi_fixed").get<double>();
  cfg.sigma_floor = j.at("sigma_floor").get<double>();
  cfg.censor = j.at("censor").get<double>();
  cfg.aggregation = j.at("aggregation").get<std::string>() == "mean"
                        ? SetAggregation::Mean
                        : SetAggregation::Sum;
  cfg.learnable_gine_epsilon = j.at("learnable_gine_epsilon").get<bool>();
  return cfg;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json j;
  j["format"] = kCheckpointTag;
  j["config"] = config_to_json(ckpt.config);
  j["feature_names"] = ckpt.feature_names;
  j["feature_mean"] = std::vector<double>(ckpt.feature_mean.data(),
                                          ckpt.feature_mean.data() + ckpt.feature_mean.size());
  j["feature_std"] = std::vector<double>(ckpt.feature_std.data(),
                                         ckpt.feature_std.data() + ckpt.feature_std.size());
  j["epsilon_mm"] = ckpt.epsilon_mm;
  j["ens_feature"] = ckpt.ens_feature;
  j["lead_hours"] = ckpt.lead_hours;
  json weights = json::object();
  auto& net_mut = const_cast<Checkpoint&>(ckpt).net;
  for (const ParamRef& r : parameter_refs(net_mut)) {
    json w;
    w["shape"] = {r.rows, r.cols};
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(r.rows * r.cols));
    Eigen::Map<const Eigen::MatrixXd> m(r.data, r.rows, r.cols);
    for (Eigen::Index i = 0; i < r.rows; ++i) {       // row-major on disk
      for (Eigen::Index c = 0; c < r.cols; ++c) data.push_back(m(i, c));
    }
    w["data"] = data;
    weights[r.name] = w;
  }
  j["weights"] = weights;
  std::ofstream out(path);
  if (!out) throw io_error("cannot write checkpoint: " + path);
  out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw validation_error(std::string("malformed checkpoint JSON: ") + e.what());
  }
  if (j.value("format", "") != kCheckpointTag) {
    throw validation_error("unsupported checkpoint format tag");
  }
  Checkpoint ckpt;
  ckpt.config = config_from_json(j.at("config"));
  ckpt.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  const auto mean = j.at("feature_mean").get<std::vector<double>>();
  const auto stdv = j.at("feature_std").get<std::vector<double>>();
  ckpt.feature_mean = Eigen::Map<const Eigen::ArrayXd>(mean.data(),
                                                       static_cast<Eigen::Index>(mean.size()));
  ckpt.feature_std = Eigen::Map<const Eigen::ArrayXd>(stdv.data(),
                                                      static_cast<Eigen::Index>(stdv.size()));
  ckpt.epsilon_mm = j.at("epsilon_mm").get<double>();
  ckpt.ens_feature = j.at("ens_feature").get<int>();
  ckpt.lead_hours = j.at("lead_hours").get<int>();
  ckpt.net = init_network(ckpt.config, 0);
  const json& weights = j.at("weights");
  for (const ParamRef& r : parameter_refs(ckpt.net)) {
    if (!weights.contains(r.name)) {
      throw validation_error("checkpoint missing weight array: " + r.name);
    }
    const json& w = weights.at(r.name);
    const auto shape = w.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2 || shape[0] != r.rows || shape[1] != r.cols) {
      throw validation_error("checkpoint weight shape mismatch: " + r.name);
    }
    const auto data = w.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != r.rows * r.cols) {
      throw validation_error("checkpoint weight size mismatch: " + r.name);
    }
    Eigen::Map<Eigen::MatrixXd> m(r.data, r.rows, r.cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < r.rows; ++i) {
      for (Eigen::Index c = 0; c < r.cols; ++c) m(i, c) = data[k++];
    }
  }
  return ckpt;
}

}  // namespace tailcast

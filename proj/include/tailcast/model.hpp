#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tailcast/autodiff.hpp"
#include "tailcast/batch.hpp"
#include "tailcast/distributions.hpp"
#include "tailcast/graph.hpp"

namespace tailcast {

enum class ThresholdMode { GlobalFixed, LearnedPerStation };
enum class XiMode { Fixed, LearnedSigmoid };
enum class SetAggregation { Sum, Mean };

struct ModelConfig {
  VariantTag variant = VariantTag::NormalPointMassGPD;
  int n_features = 1;
  int embed_dim = 32;
  int hidden_dim = 64;
  int gnn_layers = 2;
  ThresholdMode threshold_mode = ThresholdMode::GlobalFixed;
  double u_global = 0.0;  // filled from training data in GlobalFixed mode
  XiMode xi_mode = XiMode::Fixed;
  double xi_fixed = 0.5;
  double sigma_floor = kSigmaFloor;
  double censor = kDefaultCensor;
  SetAggregation aggregation = SetAggregation::Sum;
  bool learnable_gine_epsilon = true;
};

void validate(const ModelConfig& cfg);

enum class Activation { Identity, ReLU, Softplus, Sigmoid };

struct AffineLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
  Activation act = Activation::Identity;
};

/// Apply an affine layer to a column-stacked input (double path).
Eigen::MatrixXd apply_affine(const AffineLayer& layer, const Eigen::MatrixXd& rows_x_in);

struct GineLayer {
  AffineLayer fc1, fc2;
  double epsilon = 0.0;  // self weighting (1 + eps)
};

struct NetworkParameters {
  AffineLayer rho1, rho2;  // per-member encoder
  AffineLayer psi1, psi2;  // post-sum encoder
  std::vector<GineLayer> gine;
  AffineLayer head_p, head_mu, head_sigma, head_u, head_sigma_u, head_xi;
};

/// Glorot-uniform weights, zero biases, zero GINE epsilons; the output heads
/// start at zero so initial predictions sit at the activation midpoints.
/// Deterministic per seed.
NetworkParameters init_network(const ModelConfig& cfg, std::uint64_t seed);

/// DeepSet embedding of one station's member features (n_ens x F):
/// Psi(sum_n rho(x_n)). Plain Eigen evaluation, shared by tests as the
/// reference for the differentiable forward.
Eigen::VectorXd deepset_embed(const Eigen::MatrixXd& member_features,
                              const NetworkParameters& net, const ModelConfig& cfg);

/// One GINE update with residual on plain matrices:
/// h_v + MLP((1+eps) h_v + sum_{u in N(v)} ReLU(h_u + w_uv)).
Eigen::MatrixXd gine_layer(const Eigen::MatrixXd& node_states,
                           const StationGraph& graph, const GineLayer& layer);

/// Flat, ordered view of every trainable array (row-major over the listed
/// order); shared by the forward builder, the optimizer, checkpoint IO and
/// the gradient checks.
struct ParamRef {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

std::vector<ParamRef> parameter_refs(NetworkParameters& net);
std::size_t parameter_count(NetworkParameters& net);

/// Per-station distribution parameter nodes (each n_stations x 1).
struct ParamNodes {
  ad::DiffTensor p, mu, sigma, u, sigma_u, xi;
};

/// Builds the differentiable forward pass on `tape`: DeepSet ensemble
/// embedding, GINE message-passing stack with residuals, one affine head per
/// distribution parameter with the constraint activations. With `trainable`,
/// every parameter becomes a tape leaf (ordered as parameter_refs) and the
/// handles are appended to `leaves`.
ParamNodes build_forward(ad::Tape& tape, const EnsembleBatch& batch,
                         const StationGraph& graph, const NetworkParameters& net,
                         const ModelConfig& cfg, bool trainable,
                         std::vector<ad::DiffTensor>* leaves = nullptr);

/// Differentiable CRPS of the full mixture, averaged over stations. The three
/// variants share this composition; degenerate bounds (p = 0, censor at
/// -1e8, threshold at +1e8) turn off the unused pieces exactly.
ad::DiffTensor build_crps_loss(ad::Tape& tape, const ParamNodes& nodes,
                               const Eigen::ArrayXd& y_transformed,
                               const ModelConfig& cfg);

/// Forward pass without gradients; emits validated per-station parameters.
std::vector<TailedMixtureParams> predict_params(const EnsembleBatch& batch,
                                                const StationGraph& graph,
                                                const NetworkParameters& net,
                                                const ModelConfig& cfg);

/// Self-describing versioned model file: config, weights, and the training
/// normalization statistics.
struct Checkpoint {
  ModelConfig config;
  NetworkParameters net;
  std::vector<std::string> feature_names;
  Eigen::ArrayXd feature_mean, feature_std;
  double epsilon_mm = kDefaultEpsilonMm;
  int ens_feature = 0;  // feature column holding raw member precipitation [mm]
  int lead_hours = 24;  // one model per lead time
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tailcast

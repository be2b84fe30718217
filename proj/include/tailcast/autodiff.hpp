#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "tailcast/errors.hpp"

namespace tailcast::ad {

using Array = Eigen::ArrayXXd;

class Tape;

/// Handle to a node on a tape. Scalars are 1x1 tensors; DiffValue is the
/// conventional alias for that case.
struct DiffTensor {
  Tape* tape = nullptr;
  int id = -1;

  Eigen::Index rows() const;
  Eigen::Index cols() const;
  const Array& value() const;
  const Array& grad() const;
  double scalar() const;
};

using DiffValue = DiffTensor;

/// Eager reverse-mode tape. Nodes are appended in evaluation order, which is
/// a topological order by construction; backward() walks it once in reverse.
/// A tape is single-threaded; independent tapes may run concurrently.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

  DiffTensor constant(Array v, const char* op = "const");
  DiffTensor constant(double v);
  /// Differentiable parameter node; its grad is populated by backward().
  DiffTensor leaf(const Array& v);

  /// Reverse pass from a scalar root. Gradients of nodes past the root are
  /// untouched; everything up to it is zeroed first.
  void backward(const DiffTensor& root);

  std::size_t size() const { return nodes_.size(); }
  const Array& value(int id) const { return nodes_[id].val; }
  const Array& grad(int id) const { return nodes_[id].grad; }
  const char* op_name(int id) const { return nodes_[id].op; }

  DiffTensor emplace(Array val, int a, int b, BackwardFn fn, const char* op);
  /// Adjoint accumulation with implicit reduction onto broadcast (1x1) nodes.
  void accumulate(int id, const Array& g);

 private:
  struct Node {
    Array val;
    Array grad;
    int a = -1;
    int b = -1;
    BackwardFn back;
    const char* op = "leaf";
  };
  std::deque<Node> nodes_;  // deque: stable references across growth
  bool check_finite_;
};

// ---- elementwise binary ops (broadcast between equal shapes and 1x1) ----
DiffTensor add(DiffTensor a, DiffTensor b);
DiffTensor sub(DiffTensor a, DiffTensor b);
DiffTensor mul(DiffTensor a, DiffTensor b);
DiffTensor div(DiffTensor a, DiffTensor b);
DiffTensor pow(DiffTensor base, DiffTensor exponent);  // base must stay > 0
DiffTensor pow(DiffTensor base, double exponent);

// ---- elementwise unary ops ----
DiffTensor neg(DiffTensor x);
DiffTensor log(DiffTensor x);
DiffTensor exp(DiffTensor x);
DiffTensor erf(DiffTensor x);
DiffTensor sqrt(DiffTensor x);
DiffTensor relu(DiffTensor x);
DiffTensor softplus(DiffTensor x);
DiffTensor sigmoid(DiffTensor x);
DiffTensor clamp_min(DiffTensor x, double floor);  // zero gradient below floor

// ---- reductions and structure ops ----
DiffTensor sum(DiffTensor x);   // 1x1
DiffTensor mean(DiffTensor x);  // 1x1
DiffTensor transpose(DiffTensor a);
DiffTensor matmul(DiffTensor a, DiffTensor b);
/// Adds a 1xN row (bias) to every row of a MxN operand.
DiffTensor broadcast_add_row(DiffTensor a, DiffTensor row);
DiffTensor gather_rows(DiffTensor a, std::vector<int> idx);
DiffTensor scatter_sum_rows(DiffTensor a, std::vector<int> dst, int n_rows);
/// Sums consecutive blocks of `block` rows: (N*block) x d -> N x d.
DiffTensor block_sum_rows(DiffTensor a, int block);
/// Adds the constant s(i) to every entry of row i (edge-weight injection).
DiffTensor add_row_scalars(DiffTensor a, Eigen::ArrayXd s);
/// mask*a + (1-mask)*b with a constant 0/1 mask; gradients are masked the
/// same way, which keeps the untaken branch out of the adjoints.
DiffTensor select(const Array& mask, DiffTensor a, DiffTensor b);

// value-level comparison masks (not tape nodes)
Array lt_mask(const DiffTensor& x, const DiffTensor& y);
Array lt_mask(const DiffTensor& x, double y);

// ---- sugar ----
inline DiffTensor operator+(DiffTensor a, DiffTensor b) { return add(a, b); }
inline DiffTensor operator-(DiffTensor a, DiffTensor b) { return sub(a, b); }
inline DiffTensor operator*(DiffTensor a, DiffTensor b) { return mul(a, b); }
inline DiffTensor operator/(DiffTensor a, DiffTensor b) { return div(a, b); }
inline DiffTensor operator-(DiffTensor a) { return neg(a); }
DiffTensor operator+(DiffTensor a, double s);
DiffTensor operator+(double s, DiffTensor a);
DiffTensor operator-(DiffTensor a, double s);
DiffTensor operator-(double s, DiffTensor a);
DiffTensor operator*(DiffTensor a, double s);
DiffTensor operator*(double s, DiffTensor a);
DiffTensor operator/(DiffTensor a, double s);
DiffTensor operator/(double s, DiffTensor a);

// ---- optimizer ----
struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Array m, v;
  long t = 0;
};

/// One bias-corrected Adam update; state is allocated on first use.
void adam_step(Array& param, const Array& grad, AdamState& state,
               const AdamConfig& cfg);

// ---- inline DiffTensor members ----
inline Eigen::Index DiffTensor::rows() const { return tape->value(id).rows(); }
inline Eigen::Index DiffTensor::cols() const { return tape->value(id).cols(); }
inline const Array& DiffTensor::value() const { return tape->value(id); }
inline const Array& DiffTensor::grad() const { return tape->grad(id); }
inline double DiffTensor::scalar() const { return tape->value(id)(0, 0); }

}  // namespace tailcast::ad

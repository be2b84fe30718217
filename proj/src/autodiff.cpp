#include "tailcast/autodiff.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace tailcast::ad {

namespace {

void require_same_tape(const DiffTensor& a, const DiffTensor& b) {
  if (a.tape != b.tape) {
    throw std::invalid_argument("autodiff: operands live on different tapes");
  }
}

bool is_scalar(const Array& v) { return v.size() == 1; }

// Common-shape resolution for elementwise ops: equal shapes, or either side 1x1.
std::pair<Eigen::Index, Eigen::Index> common_shape(const Array& x, const Array& y,
                                                   const char* op) {
  if (is_scalar(x)) return {y.rows(), y.cols()};
  if (is_scalar(y)) return {x.rows(), x.cols()};
  if (x.rows() == y.rows() && x.cols() == y.cols()) return {x.rows(), x.cols()};
  throw validation_error(std::string("autodiff: shape mismatch in op ") + op);
}

Array expand_to(const Array& v, Eigen::Index r, Eigen::Index c) {
  if (v.rows() == r && v.cols() == c) return v;
  return Array::Constant(r, c, v(0, 0));
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

DiffTensor Tape::emplace(Array val, int a, int b, BackwardFn fn, const char* op) {
  if (check_finite_ && !val.allFinite()) {
    throw numeric_error(std::string("autodiff: non-finite value produced by op ") + op);
  }
  Node n;
  n.val = std::move(val);
  n.a = a;
  n.b = b;
  n.back = std::move(fn);
  n.op = op;
  nodes_.push_back(std::move(n));
  return DiffTensor{this, static_cast<int>(nodes_.size()) - 1};
}

DiffTensor Tape::constant(Array v, const char* op) {
  return emplace(std::move(v), -1, -1, nullptr, op);
}

DiffTensor Tape::constant(double v) {
  return emplace(Array::Constant(1, 1, v), -1, -1, nullptr, "const");
}

DiffTensor Tape::leaf(const Array& v) {
  return emplace(v, -1, -1, nullptr, "leaf");
}

void Tape::accumulate(int id, const Array& g) {
  Array& dst = nodes_[id].grad;
  if (dst.rows() == g.rows() && dst.cols() == g.cols()) {
    dst += g;
  } else if (dst.size() == 1) {
    dst(0, 0) += g.sum();  // reduction onto a broadcast scalar
  } else {
    throw numeric_error("autodiff: gradient shape mismatch");
  }
}

void Tape::backward(const DiffTensor& root) {
  if (root.tape != this) throw std::invalid_argument("autodiff: foreign root");
  if (nodes_[root.id].val.size() != 1) {
    throw std::invalid_argument("autodiff: backward requires a scalar root");
  }
  for (int i = 0; i <= root.id; ++i) {
    nodes_[i].grad = Array::Zero(nodes_[i].val.rows(), nodes_[i].val.cols());
  }
  nodes_[root.id].grad(0, 0) = 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.back) continue;
    if (check_finite_ && !n.grad.allFinite()) {
      throw numeric_error(std::string("autodiff: non-finite gradient at op ") + n.op);
    }
    n.back(*this, i);
  }
}

// ---------------------------------------------------------------- binary ops

DiffTensor add(DiffTensor a, DiffTensor b) {
  require_same_tape(a, b);
  Tape& t = *a.tape;
  const auto [r, c] = common_shape(a.value(), b.value(), "add");
  Array v = expand_to(a.value(), r, c) + expand_to(b.value(), r, c);
  return t.emplace(std::move(v), a.id, b.id,
                   [ia = a.id, ib = b.id](Tape& tp, int self) {
                     tp.accumulate(ia, tp.grad(self));
                     tp.accumulate(ib, tp.grad(self));
                   },
                   "add");
}

DiffTensor sub(DiffTensor a, DiffTensor b) {
  require_same_tape(a, b);
  Tape& t = *a.tape;
  const auto [r, c] = common_shape(a.value(), b.value(), "sub");
  Array v = expand_to(a.value(), r, c) - expand_to(b.value(), r, c);
  return t.emplace(std::move(v), a.id, b.id,
                   [ia = a.id, ib = b.id](Tape& tp, int self) {
                     tp.accumulate(ia, tp.grad(self));
                     tp.accumulate(ib, Array(-tp.grad(self)));
                   },
                   "sub");
}

DiffTensor mul(DiffTensor a, DiffTensor b) {
  require_same_tape(a, b);
  Tape& t = *a.tape;
  const auto [r, c] = common_shape(a.value(), b.value(), "mul");
  Array v = expand_to(a.value(), r, c) * expand_to(b.value(), r, c);
  return t.emplace(std::move(v), a.id, b.id,
                   [ia = a.id, ib = b.id, r, c](Tape& tp, int self) {
                     const Array& g = tp.grad(self);
                     tp.accumulate(ia, Array(g * expand_to(tp.value(ib), r, c)));
                     tp.accumulate(ib, Array(g * expand_to(tp.value(ia), r, c)));
                   },
                   "mul");
}

DiffTensor div(DiffTensor a, DiffTensor b) {
  require_same_tape(a, b);
  Tape& t = *a.tape;
  const auto [r, c] = common_shape(a.value(), b.value(), "div");
  Array v = expand_to(a.value(), r, c) / expand_to(b.value(), r, c);
  return t.emplace(std::move(v), a.id, b.id,
                   [ia = a.id, ib = b.id, r, c](Tape& tp, int self) {
                     const Array& g = tp.grad(self);
                     const Array bv = expand_to(tp.value(ib), r, c);
                     const Array av = expand_to(tp.value(ia), r, c);
                     tp.accumulate(ia, Array(g / bv));
                     tp.accumulate(ib, Array(-g * av / (bv * bv)));
                   },
                   "div");
}

DiffTensor pow(DiffTensor base, DiffTensor exponent) {
  require_same_tape(base, exponent);
  Tape& t = *base.tape;
  const auto [r, c] = common_shape(base.value(), exponent.value(), "pow");
  const Array bv = expand_to(base.value(), r, c);
  const Array ev = expand_to(exponent.value(), r, c);
  Array v = Eigen::pow(bv, ev);
  return t.emplace(std::move(v), base.id, exponent.id,
                   [ib = base.id, ie = exponent.id, r, c](Tape& tp, int self) {
                     const Array& g = tp.grad(self);
                     const Array bv = expand_to(tp.value(ib), r, c);
                     const Array ev = expand_to(tp.value(ie), r, c);
                     const Array& v = tp.value(self);
                     tp.accumulate(ib, Array(g * ev * v / bv));
                     tp.accumulate(ie, Array(g * v * Eigen::log(bv)));
                   },
                   "pow");
}

DiffTensor pow(DiffTensor base, double exponent) {
  Tape& t = *base.tape;
  Array v = Eigen::pow(base.value(), exponent);
  return t.emplace(std::move(v), base.id, -1,
                   [ib = base.id, exponent](Tape& tp, int self) {
                     const Array& g = tp.grad(self);
                     tp.accumulate(
                         ib, Array(g * exponent * Eigen::pow(tp.value(ib), exponent - 1.0)));
                   },
                   "pow_const");
}

// ----------------------------------------------------------------- unary ops

DiffTensor neg(DiffTensor x) {
  Tape& t = *x.tape;
  return t.emplace(Array(-x.value()), x.id, -1,
                   [ix = x.id](Tape& tp, int self) {
                     tp.accumulate(ix, Array(-tp.grad(self)));
                   },
                   "neg");
}

DiffTensor log(DiffTensor x) {
  Tape& t = *x.tape;
  return t.emplace(Array(Eigen::log(x.value())), x.id, -1,
                   [ix = x.id](Tape& tp, int self) {
                     tp.accumulate(ix, Array(tp.grad(self) / tp.value(ix)));
                   },
                   "log");
}

DiffTensor exp(DiffTensor x) {
  Tape& t = *x.tape;
  return t.emplace(Array(Eigen::exp(x.value())), x.id, -1,
                   [ix = x.id](Tape& tp, int self) {
                     tp.accumulate(ix, Array(tp.grad(self) * tp.value(self)));
                   },
                   "exp");
}

DiffTensor erf(DiffTensor x) {
  Tape& t = *x.tape;
  Array v = x.value().unaryExpr([](double a) { return std::erf(a); });
  return t.emplace(std::move(v), x.id, -1,
                   [ix = x.id](Tape& tp, int self) {
                     // d/dx erf = 2/sqrt(pi) * exp(-x^2)
                     const Array& xv = tp.value(ix);
                     tp.accumulate(ix, Array(tp.grad(self) * 1.1283791670955126 *
                                             Eigen::exp(-xv * xv)));
                   },
                   "erf");
}

DiffTensor sqrt(DiffTensor x) {
  Tape& t = *x.tape;
  return t.emplace(Array(Eigen::sqrt(x.value())), x.id, -1,
                   [ix = x.id](Tape& tp, int self) {
                     tp.accumulate(ix, Array(tp.grad(self) * 0.5 / tp.value(self)));
                   },
                   "sqrt");
}

DiffTensor relu(DiffTensor x) {
  Tape& t = *x.tape;
  return t.emplace(Array(x.value().max(0.0)), x.id, -1,
                   [ix = x.id](Tape& tp, int self) {
                     const Array mask = (tp.value(ix) > 0.0).cast<double>();
                     tp.accumulate(ix, Array(tp.grad(self) * mask));
                   },
                   "relu");
}

DiffTensor softplus(DiffTensor x) {
  Tape& t = *x.tape;
  Array v = x.value().unaryExpr([](double a) { return stable_softplus(a); });
  return t.emplace(std::move(v), x.id, -1,
                   [ix = x.id](Tape& tp, int self) {
                     const Array s =
                         tp.value(ix).unaryExpr([](double a) { return stable_sigmoid(a); });
                     tp.accumulate(ix, Array(tp.grad(self) * s));
                   },
                   "softplus");
}

DiffTensor sigmoid(DiffTensor x) {
  Tape& t = *x.tape;
  Array v = x.value().unaryExpr([](double a) { return stable_sigmoid(a); });
  return t.emplace(std::move(v), x.id, -1,
                   [ix = x.id](Tape& tp, int self) {
                     const Array& s = tp.value(self);
                     tp.accumulate(ix, Array(tp.grad(self) * s * (1.0 - s)));
                   },
                   "sigmoid");
}

DiffTensor clamp_min(DiffTensor x, double floor) {
  Tape& t = *x.tape;
  return t.emplace(Array(x.value().max(floor)), x.id, -1,
                   [ix = x.id, floor](Tape& tp, int self) {
                     const Array mask = (tp.value(ix) > floor).cast<double>();
                     tp.accumulate(ix, Array(tp.grad(self) * mask));
                   },
                   "clamp_min");
}

// ------------------------------------------------------- reductions & layout

DiffTensor sum(DiffTensor x) {
  Tape& t = *x.tape;
  return t.emplace(Array::Constant(1, 1, x.value().sum()), x.id, -1,
                   [ix = x.id](Tape& tp, int self) {
                     const double g = tp.grad(self)(0, 0);
                     const Array& xv = tp.value(ix);
                     tp.accumulate(ix, Array(Array::Constant(xv.rows(), xv.cols(), g)));
                   },
                   "sum");
}

DiffTensor mean(DiffTensor x) {
  const double n = static_cast<double>(x.value().size());
  return sum(x) * (1.0 / n);
}

DiffTensor transpose(DiffTensor a) {
  Tape& t = *a.tape;
  return t.emplace(Array(a.value().transpose()), a.id, -1,
                   [ia = a.id](Tape& tp, int self) {
                     tp.accumulate(ia, Array(tp.grad(self).transpose()));
                   },
                   "transpose");
}

DiffTensor matmul(DiffTensor a, DiffTensor b) {
  require_same_tape(a, b);
  Tape& t = *a.tape;
  if (a.value().cols() != b.value().rows()) {
    throw validation_error("autodiff: inner dimension mismatch in matmul");
  }
  Array v = (a.value().matrix() * b.value().matrix()).array();
  return t.emplace(std::move(v), a.id, b.id,
                   [ia = a.id, ib = b.id](Tape& tp, int self) {
                     const auto g = tp.grad(self).matrix();
                     tp.accumulate(ia, Array((g * tp.value(ib).matrix().transpose()).array()));
                     tp.accumulate(ib, Array((tp.value(ia).matrix().transpose() * g).array()));
                   },
                   "matmul");
}

DiffTensor broadcast_add_row(DiffTensor a, DiffTensor row) {
  require_same_tape(a, row);
  Tape& t = *a.tape;
  if (row.value().rows() != 1 || row.value().cols() != a.value().cols()) {
    throw validation_error("autodiff: bias row shape mismatch");
  }
  Array v = a.value().rowwise() + row.value().row(0);
  return t.emplace(std::move(v), a.id, row.id,
                   [ia = a.id, ir = row.id](Tape& tp, int self) {
                     const Array& g = tp.grad(self);
                     tp.accumulate(ia, g);
                     tp.accumulate(ir, Array(g.colwise().sum()));
                   },
                   "broadcast_add_row");
}

DiffTensor gather_rows(DiffTensor a, std::vector<int> idx) {
  Tape& t = *a.tape;
  Array v(static_cast<Eigen::Index>(idx.size()), a.value().cols());
  for (std::size_t i = 0; i < idx.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = a.value().row(idx[i]);
  return t.emplace(std::move(v), a.id, -1,
                   [ia = a.id, idx = std::move(idx)](Tape& tp, int self) {
                     const Array& g = tp.grad(self);
                     Array acc = Array::Zero(tp.value(ia).rows(), tp.value(ia).cols());
                     for (std::size_t i = 0; i < idx.size(); ++i) {
                       acc.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
                     }
                     tp.accumulate(ia, acc);
                   },
                   "gather_rows");
}

DiffTensor scatter_sum_rows(DiffTensor a, std::vector<int> dst, int n_rows) {
  Tape& t = *a.tape;
  if (static_cast<Eigen::Index>(dst.size()) != a.value().rows()) {
    throw validation_error("autodiff: scatter index count mismatch");
  }
  Array v = Array::Zero(n_rows, a.value().cols());
  for (std::size_t i = 0; i < dst.size(); ++i) {
    v.row(dst[i]) += a.value().row(static_cast<Eigen::Index>(i));
  }
  return t.emplace(std::move(v), a.id, -1,
                   [ia = a.id, dst = std::move(dst)](Tape& tp, int self) {
                     const Array& g = tp.grad(self);
                     Array acc(tp.value(ia).rows(), tp.value(ia).cols());
                     for (std::size_t i = 0; i < dst.size(); ++i) {
                       acc.row(static_cast<Eigen::Index>(i)) = g.row(dst[i]);
                     }
                     tp.accumulate(ia, acc);
                   },
                   "scatter_sum_rows");
}

DiffTensor block_sum_rows(DiffTensor a, int block) {
  Tape& t = *a.tape;
  if (block < 1 || a.value().rows() % block != 0) {
    throw validation_error("autodiff: row count not divisible by block size");
  }
  const Eigen::Index n = a.value().rows() / block;
  Array v = Array::Zero(n, a.value().cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < block; ++j) v.row(i) += a.value().row(i * block + j);
  }
  return t.emplace(std::move(v), a.id, -1,
                   [ia = a.id, block, n](Tape& tp, int self) {
                     const Array& g = tp.grad(self);
                     Array acc(tp.value(ia).rows(), tp.value(ia).cols());
                     for (Eigen::Index i = 0; i < n; ++i) {
                       for (int j = 0; j < block; ++j) acc.row(i * block + j) = g.row(i);
                     }
                     tp.accumulate(ia, acc);
                   },
                   "block_sum_rows");
}

DiffTensor add_row_scalars(DiffTensor a, Eigen::ArrayXd s) {
  Tape& t = *a.tape;
  if (s.size() != a.value().rows()) {
    throw validation_error("autodiff: row-scalar count mismatch");
  }
  Array v = a.value().colwise() + s;
  return t.emplace(std::move(v), a.id, -1,
                   [ia = a.id](Tape& tp, int self) {
                     tp.accumulate(ia, tp.grad(self));
                   },
                   "add_row_scalars");
}

DiffTensor select(const Array& mask, DiffTensor a, DiffTensor b) {
  require_same_tape(a, b);
  Tape& t = *a.tape;
  const auto [r, c] = common_shape(a.value(), b.value(), "select");
  if (mask.rows() != r || mask.cols() != c) {
    throw validation_error("autodiff: select mask shape mismatch");
  }
  Array v = mask * expand_to(a.value(), r, c) + (1.0 - mask) * expand_to(b.value(), r, c);
  return t.emplace(std::move(v), a.id, b.id,
                   [ia = a.id, ib = b.id, mask](Tape& tp, int self) {
                     const Array& g = tp.grad(self);
                     tp.accumulate(ia, Array(g * mask));
                     tp.accumulate(ib, Array(g * (1.0 - mask)));
                   },
                   "select");
}

Array lt_mask(const DiffTensor& x, const DiffTensor& y) {
  const auto [r, c] = common_shape(x.value(), y.value(), "lt_mask");
  return (expand_to(x.value(), r, c) < expand_to(y.value(), r, c)).cast<double>();
}

Array lt_mask(const DiffTensor& x, double y) {
  return (x.value() < y).cast<double>();
}

// ------------------------------------------------------------------- sugar

DiffTensor operator+(DiffTensor a, double s) { return add(a, a.tape->constant(s)); }
DiffTensor operator+(double s, DiffTensor a) { return add(a.tape->constant(s), a); }
DiffTensor operator-(DiffTensor a, double s) { return sub(a, a.tape->constant(s)); }
DiffTensor operator-(double s, DiffTensor a) { return sub(a.tape->constant(s), a); }
DiffTensor operator*(DiffTensor a, double s) { return mul(a, a.tape->constant(s)); }
DiffTensor operator*(double s, DiffTensor a) { return mul(a.tape->constant(s), a); }
DiffTensor operator/(DiffTensor a, double s) { return div(a, a.tape->constant(s)); }
DiffTensor operator/(double s, DiffTensor a) { return div(a.tape->constant(s), a); }

// ---------------------------------------------------------------------- Adam

void adam_step(Array& param, const Array& grad, AdamState& state,
               const AdamConfig& cfg) {
  if (state.m.size() == 0) {
    state.m = Array::Zero(param.rows(), param.cols());
    state.v = Array::Zero(param.rows(), param.cols());
    state.t = 0;
  }
  state.t += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const Array m_hat = state.m / bc1;
  const Array v_hat = state.v / bc2;
  param -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
}

}  // namespace tailcast::ad

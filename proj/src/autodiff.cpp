#include "specfid/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "specfid/errors.hpp"

namespace specfid::ad {

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw UsageError("tensor data does not match its shape");
}

Tensor Tensor::row(std::initializer_list<double> values) { return Tensor(1, values.size(), std::vector<double>(values)); }

double Tensor::item() const {
  if (data_.size() != 1) throw UsageError("item() on a non-scalar tensor");
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

const Tensor& Var::value() const { return tape->value(*this); }

// ---- closure table ---------------------------------------------------------

namespace {

constexpr std::size_t kMaxEmits = 4;

struct Emits {
  std::array<Op, kMaxEmits> ops{};
  std::size_t count = 0;
};

constexpr Emits emits(std::initializer_list<Op> ops) {
  Emits e;
  for (Op op : ops) e.ops[e.count++] = op;
  return e;
}

constexpr auto kBackwardEmits = [] {
  std::array<Emits, static_cast<std::size_t>(Op::kCount)> t{};
  auto set = [&t](Op op, Emits e) { t[static_cast<std::size_t>(op)] = e; };
  set(Op::kAdd, emits({}));
  set(Op::kSub, emits({Op::kScale}));
  set(Op::kMul, emits({Op::kMul}));
  set(Op::kDiv, emits({Op::kDiv, Op::kMul, Op::kScale}));
  set(Op::kMatMul, emits({Op::kMatMul, Op::kTranspose}));
  set(Op::kTranspose, emits({Op::kTranspose}));
  set(Op::kAddBias, emits({Op::kSumRows}));
  set(Op::kSumRows, emits({Op::kBroadcastRows}));
  set(Op::kBroadcastRows, emits({Op::kSumRows}));
  set(Op::kSum, emits({Op::kBroadcastScalar}));
  set(Op::kBroadcastScalar, emits({Op::kSum}));
  set(Op::kScale, emits({Op::kScale}));
  set(Op::kAddScalar, emits({}));
  set(Op::kRelu, emits({Op::kConstant, Op::kMul}));
  set(Op::kLeakyRelu, emits({Op::kConstant, Op::kMul}));
  set(Op::kTanh, emits({Op::kSquare, Op::kMul, Op::kSub}));
  set(Op::kSigmoid, emits({Op::kSquare, Op::kSub, Op::kMul}));
  set(Op::kSquare, emits({Op::kScale, Op::kMul}));
  set(Op::kSqrtEps, emits({Op::kScale, Op::kDiv}));
  set(Op::kLogEps, emits({Op::kConstant, Op::kMul, Op::kAdd, Op::kDiv}));
  set(Op::kLog1p, emits({Op::kAddScalar, Op::kDiv}));
  return t;
}();

// Every backward rule emits only ops of the primitive set.
constexpr bool closed_under_backward() {
  for (const auto& e : kBackwardEmits) {
    for (std::size_t i = 0; i < e.count; ++i) {
      if (e.ops[i] == Op::kLeaf || e.ops[i] == Op::kCount) return false;
    }
  }
  return true;
}
static_assert(closed_under_backward(), "backward rules must emit primitives only");

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

}  // namespace

std::span<const Op> backward_emits(Op op) {
  const auto& e = kBackwardEmits[static_cast<std::size_t>(op)];
  return {e.ops.data(), e.count};
}

const char* op_name(Op op) {
  static constexpr std::array<const char*, static_cast<std::size_t>(Op::kCount)> kNames = {
      "leaf",  "constant", "add",  "sub",     "mul",    "div",     "matmul",  "transpose",
      "add_bias", "sum_rows", "broadcast_rows", "sum", "broadcast_scalar", "scale", "add_scalar", "relu",
      "leaky_relu", "tanh", "sigmoid", "square", "sqrt_eps", "log_eps", "log1p"};
  return kNames[static_cast<std::size_t>(op)];
}

// ---- Tape: construction ----------------------------------------------------

void Tape::check(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw UsageError("variable does not belong to this tape");
}

Var Tape::push(Op op, Tensor value, std::initializer_list<Var> inputs, double param) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite result in ") + op_name(op));
  Node node;
  node.op = op;
  node.param = param;
  node.arity = static_cast<std::uint8_t>(inputs.size());
  auto it = inputs.begin();
  if (node.arity > 0) node.lhs = it->id;
  if (node.arity > 1) node.rhs = (it + 1)->id;
  for (const Var& in : inputs) node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("non-finite leaf value");
  Node node;
  node.op = Op::kLeaf;
  node.requires_grad = requires_grad;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite constant value");
  Node node;
  node.op = Op::kConstant;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw UsageError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

Var Tape::add(Var a, Var b) {
  check(a), check(b);
  require_same(value(a), value(b), "add");
  return push(Op::kAdd, zip(value(a), value(b), [](double x, double y) { return x + y; }), {a, b});
}

Var Tape::sub(Var a, Var b) {
  check(a), check(b);
  require_same(value(a), value(b), "sub");
  return push(Op::kSub, zip(value(a), value(b), [](double x, double y) { return x - y; }), {a, b});
}

Var Tape::mul(Var a, Var b) {
  check(a), check(b);
  require_same(value(a), value(b), "mul");
  return push(Op::kMul, zip(value(a), value(b), [](double x, double y) { return x * y; }), {a, b});
}

Var Tape::div(Var a, Var b) {
  check(a), check(b);
  require_same(value(a), value(b), "div");
  return push(Op::kDiv, zip(value(a), value(b), [](double x, double y) { return x / y; }), {a, b});
}

Var Tape::matmul(Var a, Var b) {
  check(a), check(b);
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.cols() != B.rows()) {
    throw UsageError("matmul: inner dimensions differ (" + std::to_string(A.cols()) + " vs " +
                     std::to_string(B.rows()) + ")");
  }
  Tensor out(A.rows(), B.cols());
  const std::size_t n = A.cols(), m = B.cols();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double* orow = &out(i, 0);
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      const double* brow = B.data().data() + k * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
    }
  }
  return push(Op::kMatMul, std::move(out), {a, b});
}

Var Tape::transpose(Var a) {
  check(a);
  const Tensor& A = value(a);
  Tensor out(A.cols(), A.rows());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) out(j, i) = A(i, j);
  return push(Op::kTranspose, std::move(out), {a});
}

Var Tape::add_bias(Var x, Var bias) {
  check(x), check(bias);
  const Tensor& X = value(x);
  const Tensor& b = value(bias);
  if (b.rows() != 1 || b.cols() != X.cols()) throw UsageError("add_bias: bias must be 1 x cols");
  Tensor out = X;
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < X.cols(); ++j) out(i, j) += b(0, j);
  return push(Op::kAddBias, std::move(out), {x, bias});
}

Var Tape::sum_rows(Var x) {
  check(x);
  const Tensor& X = value(x);
  Tensor out(1, X.cols());
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < X.cols(); ++j) out(0, j) += X(i, j);
  return push(Op::kSumRows, std::move(out), {x});
}

Var Tape::broadcast_rows(Var x, std::size_t rows) {
  check(x);
  const Tensor& X = value(x);
  if (X.rows() != 1) throw UsageError("broadcast_rows expects a 1 x c input");
  Tensor out(rows, X.cols());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < X.cols(); ++j) out(i, j) = X(0, j);
  return push(Op::kBroadcastRows, std::move(out), {x}, static_cast<double>(rows));
}

Var Tape::sum(Var x) {
  check(x);
  double acc = 0.0;
  for (double v : value(x).data()) acc += v;
  return push(Op::kSum, Tensor::scalar(acc), {x});
}

Var Tape::broadcast_scalar(Var x, std::size_t rows, std::size_t cols) {
  check(x);
  const double v = value(x).item();
  Var out = push(Op::kBroadcastScalar, Tensor(rows, cols, v), {x});
  return out;
}

Var Tape::scale(Var x, double factor) {
  check(x);
  return push(Op::kScale, map(value(x), [factor](double v) { return v * factor; }), {x}, factor);
}

Var Tape::add_scalar(Var x, double offset) {
  check(x);
  return push(Op::kAddScalar, map(value(x), [offset](double v) { return v + offset; }), {x}, offset);
}

Var Tape::relu(Var x) {
  check(x);
  return push(Op::kRelu, map(value(x), [](double v) { return v > 0.0 ? v : 0.0; }), {x});
}

Var Tape::leaky_relu(Var x) {
  check(x);
  return push(Op::kLeakyRelu, map(value(x), [](double v) { return v > 0.0 ? v : kLeakySlope * v; }), {x});
}

Var Tape::tanh(Var x) {
  check(x);
  return push(Op::kTanh, map(value(x), [](double v) { return std::tanh(v); }), {x});
}

Var Tape::sigmoid(Var x) {
  check(x);
  return push(Op::kSigmoid, map(value(x), [](double v) {
                return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
              }),
              {x});
}

Var Tape::square(Var x) {
  check(x);
  return push(Op::kSquare, map(value(x), [](double v) { return v * v; }), {x});
}

Var Tape::sqrt_eps(Var x) {
  check(x);
  return push(Op::kSqrtEps, map(value(x), [](double v) { return std::sqrt(v + kEps); }), {x});
}

Var Tape::log_eps(Var x) {
  check(x);
  return push(Op::kLogEps, map(value(x), [](double v) { return std::log(std::max(v, kEps)); }), {x});
}

Var Tape::log1p(Var x) {
  check(x);
  return push(Op::kLog1p, map(value(x), [](double v) { return std::log1p(v); }), {x});
}

Var Tape::mean(Var x) {
  const double n = static_cast<double>(value(x).size());
  return scale(sum(x), 1.0 / n);
}

Var Tape::affine(Var x, Var weights, Var bias) { return add_bias(matmul(x, weights), bias); }

Var Tape::row_sums(Var x) { return matmul(x, constant(Tensor(value(x).cols(), 1, 1.0))); }

// ---- Tape: reverse mode ----------------------------------------------------

void Tape::accumulate(std::vector<std::size_t>& grads, std::size_t target, Var contribution) {
  if (!nodes_[target].requires_grad) return;
  if (grads[target] == kNone) {
    grads[target] = contribution.id;
  } else {
    grads[target] = add(Var{this, grads[target]}, contribution).id;
  }
}

void Tape::backward(Var root, bool create_graph) {
  check(root);
  if (value(root).size() != 1) throw UsageError("backward root must be a scalar");

  const std::size_t mark = nodes_.size();
  for (auto& n : nodes_) {
    n.grad = Tensor();
    n.has_grad_var = false;
  }

  std::vector<std::size_t> grads(root.id + 1, kNone);
  grads[root.id] = constant(Tensor::scalar(1.0)).id;

  for (std::size_t id = root.id + 1; id-- > 0;) {
    if (grads[id] == kNone || !nodes_[id].requires_grad) continue;
    const Op op = nodes_[id].op;
    if (op == Op::kLeaf || op == Op::kConstant) continue;

    const Var g{this, grads[id]};
    const Var y{this, id};
    const Var a{this, nodes_[id].lhs};
    const Var b{this, nodes_[id].rhs};
    const double param = nodes_[id].param;
    const bool need_a = nodes_[a.id].requires_grad;
    const bool need_b = nodes_[id].arity > 1 && nodes_[b.id].requires_grad;

    switch (op) {
      case Op::kAdd:
        if (need_a) accumulate(grads, a.id, g);
        if (need_b) accumulate(grads, b.id, g);
        break;
      case Op::kSub:
        if (need_a) accumulate(grads, a.id, g);
        if (need_b) accumulate(grads, b.id, scale(g, -1.0));
        break;
      case Op::kMul:
        if (need_a) accumulate(grads, a.id, mul(g, b));
        if (need_b) accumulate(grads, b.id, mul(g, a));
        break;
      case Op::kDiv:
        if (need_a) accumulate(grads, a.id, div(g, b));
        if (need_b) accumulate(grads, b.id, scale(div(mul(g, y), b), -1.0));
        break;
      case Op::kMatMul:
        if (need_a) accumulate(grads, a.id, matmul(g, transpose(b)));
        if (need_b) accumulate(grads, b.id, matmul(transpose(a), g));
        break;
      case Op::kTranspose:
        accumulate(grads, a.id, transpose(g));
        break;
      case Op::kAddBias:
        if (need_a) accumulate(grads, a.id, g);
        if (need_b) accumulate(grads, b.id, sum_rows(g));
        break;
      case Op::kSumRows:
        accumulate(grads, a.id, broadcast_rows(g, value(a).rows()));
        break;
      case Op::kBroadcastRows:
        accumulate(grads, a.id, sum_rows(g));
        break;
      case Op::kSum:
        accumulate(grads, a.id, broadcast_scalar(g, value(a).rows(), value(a).cols()));
        break;
      case Op::kBroadcastScalar:
        accumulate(grads, a.id, sum(g));
        break;
      case Op::kScale:
        accumulate(grads, a.id, scale(g, param));
        break;
      case Op::kAddScalar:
        accumulate(grads, a.id, g);
        break;
      case Op::kRelu: {
        Tensor mask = map(value(a), [](double v) { return v > 0.0 ? 1.0 : 0.0; });
        accumulate(grads, a.id, mul(g, constant(std::move(mask))));
        break;
      }
      case Op::kLeakyRelu: {
        Tensor mask = map(value(a), [](double v) { return v > 0.0 ? 1.0 : kLeakySlope; });
        accumulate(grads, a.id, mul(g, constant(std::move(mask))));
        break;
      }
      case Op::kTanh:
        accumulate(grads, a.id, sub(g, mul(g, square(y))));
        break;
      case Op::kSigmoid:
        accumulate(grads, a.id, mul(g, sub(y, square(y))));
        break;
      case Op::kSquare:
        accumulate(grads, a.id, mul(g, scale(a, 2.0)));
        break;
      case Op::kSqrtEps:
        accumulate(grads, a.id, div(scale(g, 0.5), y));
        break;
      case Op::kLogEps: {
        // Zero gradient where the clamp is active; x_safe avoids dividing by tiny x there.
        Tensor mask = map(value(a), [](double v) { return v > kEps ? 1.0 : 0.0; });
        Tensor fill = map(mask, [](double m) { return 1.0 - m; });
        const Var m = constant(std::move(mask));
        const Var x_safe = add(mul(a, m), constant(std::move(fill)));
        accumulate(grads, a.id, mul(div(g, x_safe), m));
        break;
      }
      case Op::kLog1p:
        accumulate(grads, a.id, div(g, add_scalar(a, 1.0)));
        break;
      case Op::kLeaf:
      case Op::kConstant:
      case Op::kCount:
        break;
    }
  }

  for (std::size_t id = 0; id <= root.id; ++id) {
    if (grads[id] == kNone) continue;
    nodes_[id].grad = nodes_[grads[id]].value;
    if (create_graph) {
      nodes_[id].has_grad_var = true;
      nodes_[id].grad_var = grads[id];
    }
  }
  if (!create_graph) nodes_.resize(mark);
}

Tensor Tape::grad(Var v) const {
  check(v);
  const auto& n = nodes_[v.id];
  if (n.grad.size() == 0) return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::grad_var(Var v) const {
  check(v);
  const auto& n = nodes_[v.id];
  if (!n.has_grad_var) throw UsageError("no gradient graph for this variable; call backward(root, true)");
  return {const_cast<Tape*>(this), n.grad_var};
}

}  // namespace specfid::ad

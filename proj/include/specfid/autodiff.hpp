#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace specfid::ad {

/// Dense row-major matrix. Scalars are 1x1; vectors are 1xN or Nx1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor scalar(double value) { return Tensor(1, 1, value); }
  static Tensor row(std::initializer_list<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double item() const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Op : std::uint8_t {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMatMul,
  kTranspose,
  kAddBias,
  kSumRows,
  kBroadcastRows,
  kSum,
  kBroadcastScalar,
  kScale,
  kAddScalar,
  kRelu,
  kLeakyRelu,
  kTanh,
  kSigmoid,
  kSquare,
  kSqrtEps,
  kLogEps,
  kLog1p,
  kCount
};

const char* op_name(Op op);

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kEps = 1e-12;

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Append-only computation graph. Nodes only reference earlier nodes, so the
/// node order is a topological order. Single-threaded.
class Tape {
 public:
  struct Node {
    Op op = Op::kLeaf;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    std::uint8_t arity = 0;
    double param = 0.0;
    bool requires_grad = false;
    Tensor value;
    Tensor grad;
    bool has_grad_var = false;
    std::size_t grad_var = 0;
  };

  /// Trainable (or differentiable) input.
  Var leaf(Tensor value, bool requires_grad = true);
  /// Input that is never differentiated.
  Var constant(Tensor value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  /// x (r x c) + bias (1 x c) broadcast over rows.
  Var add_bias(Var x, Var bias);
  /// Column sums: (r x c) -> (1 x c).
  Var sum_rows(Var x);
  /// (1 x c) -> (rows x c).
  Var broadcast_rows(Var x, std::size_t rows);
  Var sum(Var x);
  /// (1 x 1) -> (rows x cols).
  Var broadcast_scalar(Var x, std::size_t rows, std::size_t cols);
  Var scale(Var x, double factor);
  Var add_scalar(Var x, double offset);
  Var relu(Var x);
  Var leaky_relu(Var x);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var square(Var x);
  /// sqrt(x + 1e-12).
  Var sqrt_eps(Var x);
  /// log(max(x, 1e-12)).
  Var log_eps(Var x);
  Var log1p(Var x);

  // Composites of the primitives above.
  Var mean(Var x);
  Var affine(Var x, Var weights, Var bias);
  Var neg(Var x) { return scale(x, -1.0); }
  /// Row sums: (r x c) -> (r x 1).
  Var row_sums(Var x);

  /// Reverse accumulation from scalar `root`. Afterwards every node that
  /// received gradient holds it in Node::grad. With `create_graph` the backward
  /// computation stays on the tape as ordinary nodes (see grad_var), so a
  /// later backward can differentiate through gradients; otherwise those nodes
  /// are discarded.
  void backward(Var root, bool create_graph = false);

  /// Gradient after backward(); zeros if `v` did not influence the root.
  Tensor grad(Var v) const;
  /// Gradient node; only available after backward(..., true).
  Var grad_var(Var v) const;

  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(Var v) const { return nodes_[v.id].value; }

 private:
  Var push(Op op, Tensor value, std::initializer_list<Var> inputs, double param = 0.0);
  void check(Var v) const;
  void accumulate(std::vector<std::size_t>& grads, std::size_t target, Var contribution);

  std::vector<Node> nodes_;
};

/// Ops each primitive's backward rule may emit.
std::span<const Op> backward_emits(Op op);

}  // namespace specfid::ad

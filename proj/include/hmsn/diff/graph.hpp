#pragma once

// Reverse-mode differentiation over dense row-major tensors.
//
// A Graph is an append-only tape. Every op computes its value eagerly when it
// is recorded, and the tape can be replayed (forward()) after leaf values are
// changed. backward() walks the tape once in reverse order, accumulating
// adjoints, and returns the gradient of every trainable leaf.

#include "hmsn/errors.hpp"
#include "hmsn/tensor.hpp"

#include <deque>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hmsn::diff {

enum class OpKind : std::uint8_t {
  Constant,
  Parameter,
  Detach,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  AddScalar,
  MulScalar,
  AddRow,   // a + r, r is 1 x n broadcast over rows
  MulRow,   // a * r, r is 1 x n
  MulCol,   // a * s, s is m x 1 broadcast over columns
  DivCol,   // a / s, s is m x 1
  MatMul,   // a b
  MatMulNT, // a b^T
  Tanh,
  Atanh,
  Exp,
  Log,
  Sqrt,
  Relu,
  Gelu,
  MaxScalar,
  MinScalar,
  RowSum,
  ColMean,
  SumAll,
  MeanAll,
  SoftmaxRows,
  LayerNormRows,
  BatchNormCols,
  GatherRows,
  ConcatRows,
  ConcatCols,
  SliceCols,
  Reshape,
  SegmentAttention,
};

const char* op_name(OpKind kind);

struct NonFiniteError : Error {
  NonFiniteError(const std::string& what, int node_id, OpKind kind);
  int node_id;
  OpKind kind;
};

struct Node {
  int id = 0;
  OpKind kind = OpKind::Constant;
  std::vector<int> inputs;
  Tensor value;
  Tensor adjoint;  // empty until reached by backward()
  // Op payload.
  double scalar = 0.0;
  std::vector<int> index;  // gather rows, segment offsets
  int arg0 = 0;
  int arg1 = 0;
};

class Graph;

// Lightweight handle to a node. Copyable; valid as long as its Graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

using Gradients = std::map<int, Tensor>;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  // Records a new node and computes its value.
  Var record(OpKind kind, std::vector<int> inputs, double scalar = 0.0, std::vector<int> index = {},
             int arg0 = 0, int arg1 = 0);

  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const Tensor& value(Var v) const { return node(v.id).value; }
  std::size_t size() const { return nodes_.size(); }

  // Replace a leaf value; call forward() to propagate.
  void set_value(Var leaf, Tensor value);

  // Replays every non-leaf node in tape order.
  void forward();
  std::vector<Tensor> forward(std::span<const Var> outputs);

  // Gradient of a scalar node with respect to every parameter leaf. Adjoints
  // from a previous pass are discarded first.
  Gradients backward(Var loss);

  // Adjoint left by the last backward() (zeros if the node was not reached).
  Tensor adjoint(Var v) const;

  std::vector<int> parameter_ids() const { return parameters_; }

 private:
  void compute(Node& n);
  void propagate(const Node& n);
  Tensor& adj(int id);

  std::deque<Node> nodes_;  // stable addresses: Var::value() references survive appends
  std::vector<int> parameters_;
};

// Elementwise and broadcasting ops.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double s);
Var operator+(double s, Var a);
Var operator-(Var a, double s);
Var operator-(double s, Var a);
Var operator*(Var a, double s);
Var operator*(double s, Var a);
Var operator/(Var a, double s);
Var operator/(double s, Var a);

Var detach(Var a);
Var add_row(Var a, Var row);
Var mul_row(Var a, Var row);
Var mul_col(Var a, Var col);
Var div_col(Var a, Var col);
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);

Var tanh(Var a);
Var atanh(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var relu(Var a);
Var gelu(Var a);
Var max_scalar(Var a, double s);
Var min_scalar(Var a, double s);

Var row_sum(Var a);
Var col_mean(Var a);
Var sum(Var a);
Var mean(Var a);

Var softmax_rows(Var a);
Var layer_norm_rows(Var a, double eps = 1e-6);
Var batch_norm_cols(Var a, double eps = 1e-5);

Var gather_rows(Var a, std::vector<int> rows);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, int start, int count);
Var reshape(Var a, int rows, int cols);

// Multi-head softmax attention applied independently to each row segment of
// a packed [q | k | v] matrix. offsets has one entry per segment plus the
// total row count.
Var segment_attention(Var qkv, std::vector<int> offsets, int heads);

}  // namespace hmsn::diff

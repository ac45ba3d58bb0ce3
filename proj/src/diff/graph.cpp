#include "hmsn/diff/graph.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace hmsn::diff {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
       << b.cols();
    throw ShapeError(os.str());
  }
}

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_slope(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Tensor softmax_of_rows(const Tensor& a) {
  Tensor y(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double m = a.row(r).maxCoeff();
    y.row(r) = (a.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

struct AttentionShape {
  Eigen::Index width;
  Eigen::Index head_dim;
  double scale;
};

AttentionShape attention_shape(const Tensor& qkv, int heads) {
  require(qkv.cols() % 3 == 0, "segment_attention: qkv width not divisible by 3");
  const Eigen::Index width = qkv.cols() / 3;
  require(heads > 0 && width % heads == 0, "segment_attention: width not divisible by heads");
  const Eigen::Index hd = width / heads;
  return {width, hd, 1.0 / std::sqrt(static_cast<double>(hd))};
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Parameter: return "parameter";
    case OpKind::Detach: return "detach";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Div: return "div";
    case OpKind::Neg: return "neg";
    case OpKind::AddScalar: return "add_scalar";
    case OpKind::MulScalar: return "mul_scalar";
    case OpKind::AddRow: return "add_row";
    case OpKind::MulRow: return "mul_row";
    case OpKind::MulCol: return "mul_col";
    case OpKind::DivCol: return "div_col";
    case OpKind::MatMul: return "matmul";
    case OpKind::MatMulNT: return "matmul_nt";
    case OpKind::Tanh: return "tanh";
    case OpKind::Atanh: return "atanh";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Sqrt: return "sqrt";
    case OpKind::Relu: return "relu";
    case OpKind::Gelu: return "gelu";
    case OpKind::MaxScalar: return "max_scalar";
    case OpKind::MinScalar: return "min_scalar";
    case OpKind::RowSum: return "row_sum";
    case OpKind::ColMean: return "col_mean";
    case OpKind::SumAll: return "sum";
    case OpKind::MeanAll: return "mean";
    case OpKind::SoftmaxRows: return "softmax_rows";
    case OpKind::LayerNormRows: return "layer_norm_rows";
    case OpKind::BatchNormCols: return "batch_norm_cols";
    case OpKind::GatherRows: return "gather_rows";
    case OpKind::ConcatRows: return "concat_rows";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::Reshape: return "reshape";
    case OpKind::SegmentAttention: return "segment_attention";
  }
  return "unknown";
}

NonFiniteError::NonFiniteError(const std::string& what, int id, OpKind k)
    : Error(what + " at node " + std::to_string(id) + " (" + op_name(k) + ")"), node_id(id), kind(k) {}

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::constant(Tensor value) {
  Node n;
  n.id = static_cast<int>(nodes_.size());
  n.kind = OpKind::Constant;
  n.value = std::move(value);
  if (!n.value.allFinite()) throw NonFiniteError("non-finite leaf value", n.id, n.kind);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::parameter(Tensor value) {
  Var v = constant(std::move(value));
  nodes_.back().kind = OpKind::Parameter;
  parameters_.push_back(v.id);
  return v;
}

Var Graph::record(OpKind kind, std::vector<int> inputs, double scalar, std::vector<int> index, int arg0,
                  int arg1) {
  Node n;
  n.id = static_cast<int>(nodes_.size());
  n.kind = kind;
  n.inputs = std::move(inputs);
  n.scalar = scalar;
  n.index = std::move(index);
  n.arg0 = arg0;
  n.arg1 = arg1;
  for (int in : n.inputs) require(in >= 0 && in < n.id, "graph input must precede its consumer");
  compute(n);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::set_value(Var leaf, Tensor value) {
  Node& n = nodes_.at(static_cast<std::size_t>(leaf.id));
  require(n.kind == OpKind::Constant || n.kind == OpKind::Parameter, "set_value on a non-leaf node");
  require_same_shape(n.value, value, "set_value");
  n.value = std::move(value);
}

void Graph::forward() {
  for (Node& n : nodes_) {
    if (n.kind != OpKind::Constant && n.kind != OpKind::Parameter) compute(n);
  }
}

std::vector<Tensor> Graph::forward(std::span<const Var> outputs) {
  forward();
  std::vector<Tensor> out;
  out.reserve(outputs.size());
  for (Var v : outputs) out.push_back(value(v));
  return out;
}

Tensor Graph::adjoint(Var v) const {
  const Node& n = node(v.id);
  if (n.adjoint.size() == 0) return Tensor::Zero(n.value.rows(), n.value.cols());
  return n.adjoint;
}

Tensor& Graph::adj(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.adjoint.size() == 0) n.adjoint = Tensor::Zero(n.value.rows(), n.value.cols());
  return n.adjoint;
}

Gradients Graph::backward(Var loss) {
  const Node& ln = node(loss.id);
  if (ln.value.rows() != 1 || ln.value.cols() != 1) throw ShapeError("backward: loss node is not scalar");
  for (Node& n : nodes_) n.adjoint.resize(0, 0);
  adj(loss.id).setConstant(1.0);
  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.adjoint.size() == 0) continue;
    if (!n.adjoint.allFinite()) throw NonFiniteError("non-finite gradient", n.id, n.kind);
    propagate(n);
  }
  Gradients grads;
  for (int id : parameters_) grads.emplace(id, adjoint({this, id}));
  return grads;
}

void Graph::compute(Node& n) {
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[static_cast<std::size_t>(n.inputs[i])].value; };
  switch (n.kind) {
    case OpKind::Constant:
    case OpKind::Parameter:
      break;
    case OpKind::Detach:
      n.value = in(0);
      break;
    case OpKind::Add:
      require_same_shape(in(0), in(1), "add");
      n.value = in(0) + in(1);
      break;
    case OpKind::Sub:
      require_same_shape(in(0), in(1), "sub");
      n.value = in(0) - in(1);
      break;
    case OpKind::Mul:
      require_same_shape(in(0), in(1), "mul");
      n.value = in(0).cwiseProduct(in(1));
      break;
    case OpKind::Div:
      require_same_shape(in(0), in(1), "div");
      n.value = in(0).cwiseQuotient(in(1));
      break;
    case OpKind::Neg:
      n.value = -in(0);
      break;
    case OpKind::AddScalar:
      n.value = in(0).array() + n.scalar;
      break;
    case OpKind::MulScalar:
      n.value = in(0) * n.scalar;
      break;
    case OpKind::AddRow:
      require(in(1).rows() == 1 && in(1).cols() == in(0).cols(), "add_row: row shape mismatch");
      n.value = in(0).rowwise() + in(1).row(0);
      break;
    case OpKind::MulRow:
      require(in(1).rows() == 1 && in(1).cols() == in(0).cols(), "mul_row: row shape mismatch");
      n.value = in(0).array().rowwise() * in(1).row(0).array();
      break;
    case OpKind::MulCol:
      require(in(1).cols() == 1 && in(1).rows() == in(0).rows(), "mul_col: column shape mismatch");
      n.value = in(0).array().colwise() * in(1).col(0).array();
      break;
    case OpKind::DivCol:
      require(in(1).cols() == 1 && in(1).rows() == in(0).rows(), "div_col: column shape mismatch");
      n.value = in(0).array().colwise() / in(1).col(0).array();
      break;
    case OpKind::MatMul:
      require(in(0).cols() == in(1).rows(), "matmul: inner dimension mismatch");
      n.value.resize(in(0).rows(), in(1).cols());
      n.value.noalias() = in(0) * in(1);
      break;
    case OpKind::MatMulNT:
      require(in(0).cols() == in(1).cols(), "matmul_nt: inner dimension mismatch");
      n.value.resize(in(0).rows(), in(1).rows());
      n.value.noalias() = in(0) * in(1).transpose();
      break;
    case OpKind::Tanh:
      n.value = in(0).array().tanh();
      break;
    case OpKind::Atanh:
      n.value = in(0).unaryExpr([](double x) { return std::atanh(x); });
      break;
    case OpKind::Exp:
      n.value = in(0).array().exp();
      break;
    case OpKind::Log:
      n.value = in(0).array().log();
      break;
    case OpKind::Sqrt:
      n.value = in(0).array().sqrt();
      break;
    case OpKind::Relu:
      n.value = in(0).cwiseMax(0.0);
      break;
    case OpKind::Gelu:
      n.value = in(0).unaryExpr([](double x) { return gelu_value(x); });
      break;
    case OpKind::MaxScalar:
      n.value = in(0).cwiseMax(n.scalar);
      break;
    case OpKind::MinScalar:
      n.value = in(0).cwiseMin(n.scalar);
      break;
    case OpKind::RowSum:
      n.value = in(0).rowwise().sum();
      break;
    case OpKind::ColMean:
      require(in(0).rows() > 0, "col_mean: empty input");
      n.value = in(0).colwise().mean();
      break;
    case OpKind::SumAll:
      n.value = Tensor::Constant(1, 1, in(0).sum());
      break;
    case OpKind::MeanAll:
      require(in(0).size() > 0, "mean: empty input");
      n.value = Tensor::Constant(1, 1, in(0).mean());
      break;
    case OpKind::SoftmaxRows:
      n.value = softmax_of_rows(in(0));
      break;
    case OpKind::LayerNormRows: {
      const Tensor& a = in(0);
      n.value.resize(a.rows(), a.cols());
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double mu = a.row(r).mean();
        const double var = (a.row(r).array() - mu).square().mean();
        n.value.row(r) = (a.row(r).array() - mu) / std::sqrt(var + n.scalar);
      }
      break;
    }
    case OpKind::BatchNormCols: {
      const Tensor& a = in(0);
      if (a.rows() < 2) throw ShapeError("batch_norm_cols: batch statistics need at least 2 rows");
      n.value.resize(a.rows(), a.cols());
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double mu = a.col(c).mean();
        const double var = (a.col(c).array() - mu).square().mean();
        n.value.col(c) = (a.col(c).array() - mu) / std::sqrt(var + n.scalar);
      }
      break;
    }
    case OpKind::GatherRows: {
      const Tensor& a = in(0);
      n.value.resize(static_cast<Eigen::Index>(n.index.size()), a.cols());
      for (std::size_t i = 0; i < n.index.size(); ++i) {
        require(n.index[i] >= 0 && n.index[i] < a.rows(), "gather_rows: index out of range");
        n.value.row(static_cast<Eigen::Index>(i)) = a.row(n.index[i]);
      }
      break;
    }
    case OpKind::ConcatRows: {
      Eigen::Index rows = 0;
      const Eigen::Index cols = in(0).cols();
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        require(in(i).cols() == cols, "concat_rows: column mismatch");
        rows += in(i).rows();
      }
      n.value.resize(rows, cols);
      Eigen::Index at = 0;
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        n.value.middleRows(at, in(i).rows()) = in(i);
        at += in(i).rows();
      }
      break;
    }
    case OpKind::ConcatCols: {
      Eigen::Index cols = 0;
      const Eigen::Index rows = in(0).rows();
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        require(in(i).rows() == rows, "concat_cols: row mismatch");
        cols += in(i).cols();
      }
      n.value.resize(rows, cols);
      Eigen::Index at = 0;
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        n.value.middleCols(at, in(i).cols()) = in(i);
        at += in(i).cols();
      }
      break;
    }
    case OpKind::SliceCols:
      require(n.arg0 >= 0 && n.arg1 >= 0 && n.arg0 + n.arg1 <= in(0).cols(), "slice_cols: out of range");
      n.value = in(0).middleCols(n.arg0, n.arg1);
      break;
    case OpKind::Reshape:
      require(static_cast<Eigen::Index>(n.arg0) * n.arg1 == in(0).size(), "reshape: size mismatch");
      n.value = Eigen::Map<const Tensor>(in(0).data(), n.arg0, n.arg1);
      break;
    case OpKind::SegmentAttention: {
      const Tensor& qkv = in(0);
      const auto shape = attention_shape(qkv, n.arg0);
      require(!n.index.empty() && n.index.front() == 0 && n.index.back() == qkv.rows(),
              "segment_attention: offsets must span all rows");
      n.value = Tensor::Zero(qkv.rows(), shape.width);
      for (std::size_t s = 0; s + 1 < n.index.size(); ++s) {
        const Eigen::Index o = n.index[s];
        const Eigen::Index len = n.index[s + 1] - o;
        require(len > 0, "segment_attention: empty segment");
        for (int h = 0; h < n.arg0; ++h) {
          const Eigen::Index c = h * shape.head_dim;
          Tensor scores = qkv.block(o, c, len, shape.head_dim) *
                          qkv.block(o, shape.width + c, len, shape.head_dim).transpose() * shape.scale;
          const Tensor p = softmax_of_rows(scores);
          n.value.block(o, c, len, shape.head_dim).noalias() =
              p * qkv.block(o, 2 * shape.width + c, len, shape.head_dim);
        }
      }
      break;
    }
  }
  if (!n.value.allFinite()) throw NonFiniteError("non-finite value", n.id, n.kind);
}

void Graph::propagate(const Node& n) {
  const Tensor& g = n.adjoint;
  auto val = [&](std::size_t i) -> const Tensor& {
    return nodes_[static_cast<std::size_t>(n.inputs[i])].value;
  };
  auto grad = [&](std::size_t i) -> Tensor& { return adj(n.inputs[i]); };
  switch (n.kind) {
    case OpKind::Constant:
    case OpKind::Parameter:
    case OpKind::Detach:
      break;
    case OpKind::Add:
      grad(0) += g;
      grad(1) += g;
      break;
    case OpKind::Sub:
      grad(0) += g;
      grad(1) -= g;
      break;
    case OpKind::Mul: {
      const Tensor ga = g.cwiseProduct(val(1));
      const Tensor gb = g.cwiseProduct(val(0));
      grad(0) += ga;
      grad(1) += gb;
      break;
    }
    case OpKind::Div: {
      const Tensor ga = g.cwiseQuotient(val(1));
      const Tensor gb = -(g.cwiseProduct(n.value)).cwiseQuotient(val(1));
      grad(0) += ga;
      grad(1) += gb;
      break;
    }
    case OpKind::Neg:
      grad(0) -= g;
      break;
    case OpKind::AddScalar:
      grad(0) += g;
      break;
    case OpKind::MulScalar:
      grad(0) += g * n.scalar;
      break;
    case OpKind::AddRow:
      grad(0) += g;
      grad(1) += g.colwise().sum();
      break;
    case OpKind::MulRow: {
      const Tensor gb = g.cwiseProduct(val(0)).colwise().sum();
      grad(0) += Tensor(g.array().rowwise() * val(1).row(0).array());
      grad(1) += gb;
      break;
    }
    case OpKind::MulCol: {
      const Tensor gs = g.cwiseProduct(val(0)).rowwise().sum();
      grad(0) += Tensor(g.array().colwise() * val(1).col(0).array());
      grad(1) += gs;
      break;
    }
    case OpKind::DivCol: {
      const Tensor& s = val(1);
      const Tensor gs = -(g.cwiseProduct(n.value).rowwise().sum()).cwiseQuotient(s);
      grad(0) += Tensor(g.array().colwise() / s.col(0).array());
      grad(1) += gs;
      break;
    }
    case OpKind::MatMul: {
      Tensor ga(val(0).rows(), val(0).cols());
      ga.noalias() = g * val(1).transpose();
      Tensor gb(val(1).rows(), val(1).cols());
      gb.noalias() = val(0).transpose() * g;
      grad(0) += ga;
      grad(1) += gb;
      break;
    }
    case OpKind::MatMulNT: {
      Tensor ga(val(0).rows(), val(0).cols());
      ga.noalias() = g * val(1);
      Tensor gb(val(1).rows(), val(1).cols());
      gb.noalias() = g.transpose() * val(0);
      grad(0) += ga;
      grad(1) += gb;
      break;
    }
    case OpKind::Tanh:
      grad(0) += Tensor(g.array() * (1.0 - n.value.array().square()));
      break;
    case OpKind::Atanh:
      grad(0) += Tensor(g.array() / (1.0 - val(0).array().square()));
      break;
    case OpKind::Exp:
      grad(0) += g.cwiseProduct(n.value);
      break;
    case OpKind::Log:
      grad(0) += g.cwiseQuotient(val(0));
      break;
    case OpKind::Sqrt:
      grad(0) += Tensor(g.array() / (2.0 * n.value.array()));
      break;
    case OpKind::Relu:
      grad(0) += Tensor((val(0).array() > 0.0).select(g.array(), 0.0));
      break;
    case OpKind::Gelu:
      grad(0) += Tensor(g.array() * val(0).unaryExpr([](double x) { return gelu_slope(x); }).array());
      break;
    case OpKind::MaxScalar:
      grad(0) += Tensor((val(0).array() > n.scalar).select(g.array(), 0.0));
      break;
    case OpKind::MinScalar:
      grad(0) += Tensor((val(0).array() < n.scalar).select(g.array(), 0.0));
      break;
    case OpKind::RowSum:
      grad(0).colwise() += g.col(0);
      break;
    case OpKind::ColMean:
      grad(0).rowwise() += g.row(0) / static_cast<double>(val(0).rows());
      break;
    case OpKind::SumAll:
      grad(0).array() += g(0, 0);
      break;
    case OpKind::MeanAll:
      grad(0).array() += g(0, 0) / static_cast<double>(val(0).size());
      break;
    case OpKind::SoftmaxRows: {
      const Tensor& y = n.value;
      const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
      grad(0) += Tensor(y.array() * (g.array().colwise() - dot.array()));
      break;
    }
    case OpKind::LayerNormRows: {
      const Tensor& a = val(0);
      const Tensor& y = n.value;
      Tensor& ga = grad(0);
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double mu = a.row(r).mean();
        const double var = (a.row(r).array() - mu).square().mean();
        const double inv = 1.0 / std::sqrt(var + n.scalar);
        const double gm = g.row(r).mean();
        const double gym = g.row(r).dot(y.row(r)) / static_cast<double>(a.cols());
        ga.row(r).array() += inv * (g.row(r).array() - gm - y.row(r).array() * gym);
      }
      break;
    }
    case OpKind::BatchNormCols: {
      const Tensor& a = val(0);
      const Tensor& y = n.value;
      Tensor& ga = grad(0);
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double mu = a.col(c).mean();
        const double var = (a.col(c).array() - mu).square().mean();
        const double inv = 1.0 / std::sqrt(var + n.scalar);
        const double gm = g.col(c).mean();
        const double gym = g.col(c).dot(y.col(c)) / static_cast<double>(a.rows());
        ga.col(c).array() += inv * (g.col(c).array() - gm - y.col(c).array() * gym);
      }
      break;
    }
    case OpKind::GatherRows: {
      Tensor& ga = grad(0);
      for (std::size_t i = 0; i < n.index.size(); ++i) ga.row(n.index[i]) += g.row(static_cast<Eigen::Index>(i));
      break;
    }
    case OpKind::ConcatRows: {
      Eigen::Index at = 0;
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        const Eigen::Index r = val(i).rows();
        grad(i) += g.middleRows(at, r);
        at += r;
      }
      break;
    }
    case OpKind::ConcatCols: {
      Eigen::Index at = 0;
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        const Eigen::Index c = val(i).cols();
        grad(i) += g.middleCols(at, c);
        at += c;
      }
      break;
    }
    case OpKind::SliceCols:
      grad(0).middleCols(n.arg0, n.arg1) += g;
      break;
    case OpKind::Reshape: {
      const Tensor& a = val(0);
      grad(0) += Eigen::Map<const Tensor>(g.data(), a.rows(), a.cols());
      break;
    }
    case OpKind::SegmentAttention: {
      const Tensor& qkv = val(0);
      const auto shape = attention_shape(qkv, n.arg0);
      Tensor& gq = grad(0);
      const Eigen::Index hd = shape.head_dim;
      for (std::size_t s = 0; s + 1 < n.index.size(); ++s) {
        const Eigen::Index o = n.index[s];
        const Eigen::Index len = n.index[s + 1] - o;
        for (int h = 0; h < n.arg0; ++h) {
          const Eigen::Index c = h * hd;
          const auto q = qkv.block(o, c, len, hd);
          const auto k = qkv.block(o, shape.width + c, len, hd);
          const auto v = qkv.block(o, 2 * shape.width + c, len, hd);
          const Tensor p = softmax_of_rows(Tensor(q * k.transpose() * shape.scale));
          const auto go = g.block(o, c, len, hd);
          const Tensor gp = go * v.transpose();
          const Eigen::VectorXd dot = gp.cwiseProduct(p).rowwise().sum();
          const Tensor gs = p.array() * (gp.array().colwise() - dot.array());
          gq.block(o, c, len, hd) += gs * k * shape.scale;
          gq.block(o, shape.width + c, len, hd) += gs.transpose() * q * shape.scale;
          gq.block(o, 2 * shape.width + c, len, hd) += p.transpose() * go;
        }
      }
      break;
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

Graph& graph_of(Var a, Var b) {
  if (a.graph != b.graph || a.graph == nullptr) throw ShapeError("operands belong to different graphs");
  return *a.graph;
}

Var unary(OpKind k, Var a, double s = 0.0) { return a.graph->record(k, {a.id}, s); }

Var binary(OpKind k, Var a, Var b) { return graph_of(a, b).record(k, {a.id, b.id}); }

}  // namespace

Var operator+(Var a, Var b) { return binary(OpKind::Add, a, b); }
Var operator-(Var a, Var b) { return binary(OpKind::Sub, a, b); }
Var operator*(Var a, Var b) { return binary(OpKind::Mul, a, b); }
Var operator/(Var a, Var b) { return binary(OpKind::Div, a, b); }
Var operator-(Var a) { return unary(OpKind::Neg, a); }
Var operator+(Var a, double s) { return unary(OpKind::AddScalar, a, s); }
Var operator+(double s, Var a) { return unary(OpKind::AddScalar, a, s); }
Var operator-(Var a, double s) { return unary(OpKind::AddScalar, a, -s); }
Var operator-(double s, Var a) { return unary(OpKind::AddScalar, unary(OpKind::Neg, a), s); }
Var operator*(Var a, double s) { return unary(OpKind::MulScalar, a, s); }
Var operator*(double s, Var a) { return unary(OpKind::MulScalar, a, s); }
Var operator/(Var a, double s) { return unary(OpKind::MulScalar, a, 1.0 / s); }
Var operator/(double s, Var a) { return a.graph->constant(Tensor::Constant(a.rows(), a.cols(), s)) / a; }

Var detach(Var a) { return unary(OpKind::Detach, a); }
Var add_row(Var a, Var row) { return binary(OpKind::AddRow, a, row); }
Var mul_row(Var a, Var row) { return binary(OpKind::MulRow, a, row); }
Var mul_col(Var a, Var col) { return binary(OpKind::MulCol, a, col); }
Var div_col(Var a, Var col) { return binary(OpKind::DivCol, a, col); }
Var matmul(Var a, Var b) { return binary(OpKind::MatMul, a, b); }
Var matmul_nt(Var a, Var b) { return binary(OpKind::MatMulNT, a, b); }

Var tanh(Var a) { return unary(OpKind::Tanh, a); }
Var atanh(Var a) { return unary(OpKind::Atanh, a); }
Var exp(Var a) { return unary(OpKind::Exp, a); }
Var log(Var a) { return unary(OpKind::Log, a); }
Var sqrt(Var a) { return unary(OpKind::Sqrt, a); }
Var relu(Var a) { return unary(OpKind::Relu, a); }
Var gelu(Var a) { return unary(OpKind::Gelu, a); }
Var max_scalar(Var a, double s) { return unary(OpKind::MaxScalar, a, s); }
Var min_scalar(Var a, double s) { return unary(OpKind::MinScalar, a, s); }

Var row_sum(Var a) { return unary(OpKind::RowSum, a); }
Var col_mean(Var a) { return unary(OpKind::ColMean, a); }
Var sum(Var a) { return unary(OpKind::SumAll, a); }
Var mean(Var a) { return unary(OpKind::MeanAll, a); }

Var softmax_rows(Var a) { return unary(OpKind::SoftmaxRows, a); }
Var layer_norm_rows(Var a, double eps) { return unary(OpKind::LayerNormRows, a, eps); }
Var batch_norm_cols(Var a, double eps) { return unary(OpKind::BatchNormCols, a, eps); }

Var gather_rows(Var a, std::vector<int> rows) {
  return a.graph->record(OpKind::GatherRows, {a.id}, 0.0, std::move(rows));
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  std::vector<int> ids;
  for (Var p : parts) {
    graph_of(parts.front(), p);
    ids.push_back(p.id);
  }
  return parts.front().graph->record(OpKind::ConcatRows, std::move(ids));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  std::vector<int> ids;
  for (Var p : parts) {
    graph_of(parts.front(), p);
    ids.push_back(p.id);
  }
  return parts.front().graph->record(OpKind::ConcatCols, std::move(ids));
}

Var slice_cols(Var a, int start, int count) {
  return a.graph->record(OpKind::SliceCols, {a.id}, 0.0, {}, start, count);
}

Var reshape(Var a, int rows, int cols) { return a.graph->record(OpKind::Reshape, {a.id}, 0.0, {}, rows, cols); }

Var segment_attention(Var qkv, std::vector<int> offsets, int heads) {
  return qkv.graph->record(OpKind::SegmentAttention, {qkv.id}, 0.0, std::move(offsets), heads);
}

}  // namespace hmsn::diff

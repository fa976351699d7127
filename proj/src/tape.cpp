#include "evrf/tape.hpp"

#include <cmath>

namespace evrf::nn {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Mat value, bool requires_grad) {
  Node n;
  n.val = std::move(value);
  n.op = Op::kLeaf;
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

#define EVRF_CHECK_IDX(i) \
  if ((i) < 0 || (i) >= static_cast<int>(nodes_.size())) throw ArgumentError("tape: bad node index")

int Tape::matmul(int a, int b) {
  EVRF_CHECK_IDX(a);
  EVRF_CHECK_IDX(b);
  if (nodes_[a].val.cols() != nodes_[b].val.rows()) throw ArgumentError("tape: matmul shape mismatch");
  Node n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  n.val.noalias() = nodes_[a].val * nodes_[b].val;
  return push(std::move(n));
}

int Tape::add_row(int a, int bias) {
  EVRF_CHECK_IDX(a);
  EVRF_CHECK_IDX(bias);
  if (nodes_[bias].val.rows() != 1 || nodes_[bias].val.cols() != nodes_[a].val.cols())
    throw ArgumentError("tape: add_row bias shape mismatch");
  Node n;
  n.op = Op::kAddRow;
  n.a = a;
  n.b = bias;
  n.requires_grad = nodes_[a].requires_grad || nodes_[bias].requires_grad;
  n.val = nodes_[a].val.rowwise() + nodes_[bias].val.row(0);
  return push(std::move(n));
}

#define EVRF_BINARY_SAME_SHAPE(OPNAME, EXPR)                                                        \
  EVRF_CHECK_IDX(a);                                                                                \
  EVRF_CHECK_IDX(b);                                                                                \
  if (nodes_[a].val.rows() != nodes_[b].val.rows() || nodes_[a].val.cols() != nodes_[b].val.cols()) \
    throw ArgumentError("tape: " OPNAME " shape mismatch");                                         \
  Node n;                                                                                           \
  n.a = a;                                                                                          \
  n.b = b;                                                                                          \
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;                             \
  n.val = (EXPR);

int Tape::add(int a, int b) {
  EVRF_BINARY_SAME_SHAPE("add", nodes_[a].val + nodes_[b].val)
  n.op = Op::kAdd;
  return push(std::move(n));
}

int Tape::sub(int a, int b) {
  EVRF_BINARY_SAME_SHAPE("sub", nodes_[a].val - nodes_[b].val)
  n.op = Op::kSub;
  return push(std::move(n));
}

int Tape::mul(int a, int b) {
  EVRF_BINARY_SAME_SHAPE("mul", nodes_[a].val.cwiseProduct(nodes_[b].val))
  n.op = Op::kMul;
  return push(std::move(n));
}

#define EVRF_UNARY(OP_ENUM, EXPR)            \
  EVRF_CHECK_IDX(a);                         \
  Node n;                                    \
  n.op = (OP_ENUM);                          \
  n.a = a;                                   \
  n.requires_grad = nodes_[a].requires_grad; \
  n.val = (EXPR);                            \
  return push(std::move(n));

int Tape::affine(int a, double scale, double shift) {
  EVRF_CHECK_IDX(a);
  Node n;
  n.op = Op::kAffine;
  n.a = a;
  n.s0 = scale;
  n.s1 = shift;
  n.requires_grad = nodes_[a].requires_grad;
  n.val = (nodes_[a].val.array() * scale + shift).matrix();
  return push(std::move(n));
}

int Tape::relu(int a) { EVRF_UNARY(Op::kRelu, nodes_[a].val.cwiseMax(0.0)) }

int Tape::softplus(int a) {
  // log1p(exp(x)) with the large-x branch taken exactly.
  EVRF_UNARY(Op::kSoftplus, nodes_[a].val.array().unaryExpr([](double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
  }).matrix())
}

int Tape::sigmoid(int a) {
  EVRF_UNARY(Op::kSigmoid, nodes_[a].val.array().unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }).matrix())
}

int Tape::exp_op(int a) { EVRF_UNARY(Op::kExp, nodes_[a].val.array().exp().matrix()) }

int Tape::log_shift(int a, double shift) {
  EVRF_CHECK_IDX(a);
  Node n;
  n.op = Op::kLogShift;
  n.a = a;
  n.s0 = shift;
  n.requires_grad = nodes_[a].requires_grad;
  n.val = (nodes_[a].val.array() + shift).log().matrix();
  return push(std::move(n));
}

int Tape::posenc(int a, int n_freq, bool include_input) {
  EVRF_CHECK_IDX(a);
  if (n_freq < 0) throw ArgumentError("tape: posenc needs n_freq >= 0");
  const Mat& x = nodes_[a].val;
  const Eigen::Index d = x.cols();
  Node n;
  n.op = Op::kPosEnc;
  n.a = a;
  n.i0 = n_freq;
  n.i1 = include_input ? 1 : 0;
  n.requires_grad = nodes_[a].requires_grad;
  n.val.resize(x.rows(), d * ((include_input ? 1 : 0) + 2 * n_freq));
  Eigen::Index col = 0;
  if (include_input) {
    n.val.leftCols(d) = x;
    col = d;
  }
  if (n_freq > 0) {
    // sin/cos at the base frequency, then angle doubling for the octaves.
    Eigen::ArrayXXd s = (x.array() * kPi).sin();
    Eigen::ArrayXXd c = (x.array() * kPi).cos();
    n.val.middleCols(col, d) = s;
    n.val.middleCols(col + d, d) = c;
    col += 2 * d;
    for (int k = 1; k < n_freq; ++k) {
      Eigen::ArrayXXd s2 = 2.0 * s * c;
      Eigen::ArrayXXd c2 = 1.0 - 2.0 * s * s;
      s.swap(s2);
      c.swap(c2);
      n.val.middleCols(col, d) = s;
      n.val.middleCols(col + d, d) = c;
      col += 2 * d;
    }
  }
  return push(std::move(n));
}

int Tape::seg_cumsum_exclusive(int a, int segment) {
  EVRF_CHECK_IDX(a);
  const Mat& x = nodes_[a].val;
  if (segment <= 0 || x.rows() % segment != 0) throw ArgumentError("tape: bad segment length");
  Node n;
  n.op = Op::kSegCumsumExcl;
  n.a = a;
  n.i0 = segment;
  n.requires_grad = nodes_[a].requires_grad;
  n.val.resize(x.rows(), x.cols());
  for (Eigen::Index base = 0; base < x.rows(); base += segment) {
    n.val.row(base).setZero();
    for (Eigen::Index i = 1; i < segment; ++i)
      n.val.row(base + i) = n.val.row(base + i - 1) + x.row(base + i - 1);
  }
  return push(std::move(n));
}

int Tape::seg_sum(int a, int segment) {
  EVRF_CHECK_IDX(a);
  const Mat& x = nodes_[a].val;
  if (segment <= 0 || x.rows() % segment != 0) throw ArgumentError("tape: bad segment length");
  Node n;
  n.op = Op::kSegSum;
  n.a = a;
  n.i0 = segment;
  n.requires_grad = nodes_[a].requires_grad;
  n.val.resize(x.rows() / segment, x.cols());
  for (Eigen::Index r = 0; r < n.val.rows(); ++r) n.val.row(r) = x.middleRows(r * segment, segment).colwise().sum();
  return push(std::move(n));
}

int Tape::concat_cols(int a, int b) {
  EVRF_CHECK_IDX(a);
  EVRF_CHECK_IDX(b);
  if (nodes_[a].val.rows() != nodes_[b].val.rows()) throw ArgumentError("tape: concat_cols row mismatch");
  Node n;
  n.op = Op::kConcatCols;
  n.a = a;
  n.b = b;
  n.i0 = static_cast<std::int32_t>(nodes_[a].val.cols());
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  n.val.resize(nodes_[a].val.rows(), nodes_[a].val.cols() + nodes_[b].val.cols());
  n.val.leftCols(nodes_[a].val.cols()) = nodes_[a].val;
  n.val.rightCols(nodes_[b].val.cols()) = nodes_[b].val;
  return push(std::move(n));
}

int Tape::slice_cols(int a, int first, int count) {
  EVRF_CHECK_IDX(a);
  if (first < 0 || count <= 0 || first + count > nodes_[a].val.cols())
    throw ArgumentError("tape: slice_cols out of range");
  Node n;
  n.op = Op::kSliceCols;
  n.a = a;
  n.i0 = first;
  n.i1 = count;
  n.requires_grad = nodes_[a].requires_grad;
  n.val = nodes_[a].val.middleCols(first, count);
  return push(std::move(n));
}

int Tape::sum_all(int a) {
  EVRF_CHECK_IDX(a);
  Node n;
  n.op = Op::kSumAll;
  n.a = a;
  n.requires_grad = nodes_[a].requires_grad;
  n.val.resize(1, 1);
  n.val(0, 0) = nodes_[a].val.sum();
  return push(std::move(n));
}

void Tape::backward(int root, double seed) {
  EVRF_CHECK_IDX(root);
  if (nodes_[root].val.size() != 1) throw ArgumentError("tape: backward root must be scalar");

  for (auto& n : nodes_)
    if (n.grad.size() > 0) n.grad.setZero();

  auto ensure = [&](int i) -> Mat& {
    Node& n = nodes_[i];
    if (n.grad.rows() != n.val.rows() || n.grad.cols() != n.val.cols()) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
    return n.grad;
  };
  ensure(root)(0, 0) = seed;

  for (int i = root; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul:
        if (nodes_[n.a].requires_grad) ensure(n.a).noalias() += g * nodes_[n.b].val.transpose();
        if (nodes_[n.b].requires_grad) ensure(n.b).noalias() += nodes_[n.a].val.transpose() * g;
        break;
      case Op::kAddRow:
        if (nodes_[n.a].requires_grad) ensure(n.a) += g;
        if (nodes_[n.b].requires_grad) ensure(n.b).row(0) += g.colwise().sum();
        break;
      case Op::kAdd:
        if (nodes_[n.a].requires_grad) ensure(n.a) += g;
        if (nodes_[n.b].requires_grad) ensure(n.b) += g;
        break;
      case Op::kSub:
        if (nodes_[n.a].requires_grad) ensure(n.a) += g;
        if (nodes_[n.b].requires_grad) ensure(n.b) -= g;
        break;
      case Op::kMul:
        if (nodes_[n.a].requires_grad) ensure(n.a).array() += g.array() * nodes_[n.b].val.array();
        if (nodes_[n.b].requires_grad) ensure(n.b).array() += g.array() * nodes_[n.a].val.array();
        break;
      case Op::kAffine:
        if (nodes_[n.a].requires_grad) ensure(n.a) += n.s0 * g;
        break;
      case Op::kRelu:
        if (nodes_[n.a].requires_grad)
          ensure(n.a).array() += g.array() * (n.val.array() > 0.0).cast<double>();
        break;
      case Op::kSoftplus:
        // d softplus / dx = sigmoid(x) = 1 - exp(-softplus(x))
        if (nodes_[n.a].requires_grad)
          ensure(n.a).array() += g.array() * (1.0 - (-n.val.array()).exp());
        break;
      case Op::kSigmoid:
        if (nodes_[n.a].requires_grad)
          ensure(n.a).array() += g.array() * n.val.array() * (1.0 - n.val.array());
        break;
      case Op::kExp:
        if (nodes_[n.a].requires_grad) ensure(n.a).array() += g.array() * n.val.array();
        break;
      case Op::kLogShift:
        if (nodes_[n.a].requires_grad)
          ensure(n.a).array() += g.array() / (nodes_[n.a].val.array() + n.s0);
        break;
      case Op::kPosEnc:
        if (nodes_[n.a].requires_grad) {
          Mat& da = ensure(n.a);
          const Eigen::Index d = nodes_[n.a].val.cols();
          Eigen::Index col = 0;
          if (n.i1) {
            da += g.leftCols(d);
            col = d;
          }
          double freq = kPi;
          for (int k = 0; k < n.i0; ++k) {
            // val holds [sin_k, cos_k] blocks; reuse them for the chain rule.
            da.array() += freq * (g.middleCols(col, d).array() * n.val.middleCols(col + d, d).array() -
                                  g.middleCols(col + d, d).array() * n.val.middleCols(col, d).array());
            col += 2 * d;
            freq *= 2.0;
          }
        }
        break;
      case Op::kSegCumsumExcl:
        if (nodes_[n.a].requires_grad) {
          Mat& da = ensure(n.a);
          const int seg = n.i0;
          for (Eigen::Index base = 0; base < g.rows(); base += seg) {
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(g.cols());
            for (Eigen::Index i = seg - 1; i >= 1; --i) {
              acc += g.row(base + i);
              da.row(base + i - 1) += acc;
            }
          }
        }
        break;
      case Op::kSegSum:
        if (nodes_[n.a].requires_grad) {
          Mat& da = ensure(n.a);
          const int seg = n.i0;
          for (Eigen::Index r = 0; r < g.rows(); ++r) da.middleRows(r * seg, seg).rowwise() += g.row(r);
        }
        break;
      case Op::kConcatCols:
        if (nodes_[n.a].requires_grad) ensure(n.a) += g.leftCols(n.i0);
        if (nodes_[n.b].requires_grad) ensure(n.b) += g.rightCols(g.cols() - n.i0);
        break;
      case Op::kSliceCols:
        if (nodes_[n.a].requires_grad) ensure(n.a).middleCols(n.i0, n.i1) += g;
        break;
      case Op::kSumAll:
        if (nodes_[n.a].requires_grad) ensure(n.a).array() += g(0, 0);
        break;
    }
  }
}

#undef EVRF_UNARY
#undef EVRF_BINARY_SAME_SHAPE
#undef EVRF_CHECK_IDX

}  // namespace evrf::nn

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "evrf/errors.hpp"

namespace evrf::nn {

using Mat = Eigen::MatrixXd;

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,         // a * b
  kAddRow,         // a + row-broadcast bias b (1 x cols)
  kAdd,            // a + b elementwise
  kSub,            // a - b
  kMul,            // a .* b
  kAffine,         // s0 * a + s1
  kRelu,
  kSoftplus,
  kSigmoid,
  kExp,
  kLogShift,       // log(a + s0)
  kPosEnc,         // [a?, sin(2^k pi a), cos(2^k pi a)]_k
  kSegCumsumExcl,  // exclusive prefix sum over row segments of length i0
  kSegSum,         // sum over row segments of length i0: (n*i0) x c -> n x c
  kConcatCols,
  kSliceCols,      // columns [i0, i0+i1)
  kSumAll,         // 1x1 total
};

// Eager reverse-mode tape over dense matrices. Values are computed when ops
// are recorded (so intermediate values can steer graph construction, e.g.
// dead-zone masks); backward replays the record in reverse.
class Tape {
 public:
  struct Node {
    Mat val;
    Mat grad;  // allocated lazily during backward
    Op op = Op::kLeaf;
    std::int32_t a = -1, b = -1;
    double s0 = 0.0, s1 = 0.0;
    std::int32_t i0 = 0, i1 = 0;
    bool requires_grad = false;
  };

  int leaf(Mat value, bool requires_grad = false);
  int constant(Mat value) { return leaf(std::move(value), false); }

  int matmul(int a, int b);
  int add_row(int a, int bias);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int affine(int a, double scale, double shift);
  int relu(int a);
  int softplus(int a);
  int sigmoid(int a);
  int exp_op(int a);
  int log_shift(int a, double shift);
  int posenc(int a, int n_freq, bool include_input);
  int seg_cumsum_exclusive(int a, int segment);
  int seg_sum(int a, int segment);
  int concat_cols(int a, int b);
  int slice_cols(int a, int first, int count);
  int sum_all(int a);

  const Mat& val(int i) const { return nodes_[i].val; }
  const Mat& grad(int i) const { return nodes_[i].grad; }
  bool requires_grad(int i) const { return nodes_[i].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Accumulates adjoints of every grad-requiring node reachable from `root`
  // (a 1x1 scalar). `seed` is the adjoint of the root itself.
  void backward(int root, double seed = 1.0);

 private:
  int push(Node n);
  std::vector<Node>& nodes() { return nodes_; }
  std::vector<Node> nodes_;
};

}  // namespace evrf::nn

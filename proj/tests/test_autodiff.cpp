#include <doctest.h>

#include <cmath>

#include "evrf/adam.hpp"
#include "evrf/rng.hpp"
#include "oracles.hpp"

using namespace evrf;
using namespace evrf::nn;

TEST_CASE("positional encoding layout and values") {
  SUBCASE("zero vector gives sin 0, cos 1") {
    Mat x = Mat::Zero(1, 3);
    Mat enc = positional_encode(x, 4, true);
    CHECK(enc.cols() == 3 * (1 + 2 * 4));
    for (int k = 0; k < 4; ++k)
      for (int d = 0; d < 3; ++d) {
        CHECK(enc(0, 3 + 6 * k + d) == 0.0);       // sin block
        CHECK(enc(0, 3 + 6 * k + 3 + d) == 1.0);   // cos block
      }
  }
  SUBCASE("dim 3, 10 freqs, include input -> 63 features") {
    CHECK(encoded_dim(3, 10, true) == 63);
    Mat x = Mat::Random(5, 3);
    CHECK(positional_encode(x, 10, true).cols() == 63);
  }
  SUBCASE("v = 0.5, one freq, no input -> (1, 0)") {
    Mat x = Mat::Constant(1, 1, 0.5);
    Mat enc = positional_encode(x, 1, false);
    REQUIRE(enc.cols() == 2);
    CHECK(enc(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(enc(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("angle doubling matches direct sin/cos at every octave") {
    Rng rng(4);
    Mat x(3, 2);
    for (int i = 0; i < x.size(); ++i) x(i / 2, i % 2) = rng.uniform(-3.0, 3.0);
    const int freqs = 10;
    Mat enc = positional_encode(x, freqs, false);
    for (int k = 0; k < freqs; ++k) {
      const double scale = std::pow(2.0, k) * M_PI;
      for (int r = 0; r < 3; ++r)
        for (int d = 0; d < 2; ++d) {
          CHECK(enc(r, 4 * k + d) == doctest::Approx(std::sin(scale * x(r, d))).epsilon(1e-10));
          CHECK(enc(r, 4 * k + 2 + d) == doctest::Approx(std::cos(scale * x(r, d))).epsilon(1e-10));
        }
    }
  }
}

TEST_CASE("mlp_forward matches trivial and oracle cases") {
  SUBCASE("identity single layer") {
    Mlp mlp;
    LinearLayer l;
    l.w = Mat::Identity(4, 4);
    l.b = Mat::Zero(1, 4);
    l.act = Activation::kNone;
    mlp.layers.push_back(l);
    Mat x = Mat::Random(3, 4);
    CHECK((mlp.forward(x) - x).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("zero weights yield activation(bias)") {
    Mlp mlp;
    LinearLayer l;
    l.w = Mat::Zero(3, 2);
    l.b = Mat::Zero(1, 2);
    l.b(0, 0) = -1.5;
    l.b(0, 1) = 2.0;
    l.act = Activation::kRelu;
    mlp.layers.push_back(l);
    Mat y = mlp.forward(Mat::Random(5, 3));
    for (int r = 0; r < 5; ++r) {
      CHECK(y(r, 0) == 0.0);
      CHECK(y(r, 1) == 2.0);
    }
  }
  SUBCASE("random two-layer net matches the naive oracle") {
    Rng rng(21);
    std::vector<int> dims{5, 7, 2};
    Mlp mlp = make_mlp(dims, Activation::kRelu, Activation::kSigmoid, rng);
    Mat x = Mat::Random(6, 5);
    Mat got = mlp.forward(x);
    Mat want = test::naive_mlp_forward(mlp, x);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("shape mismatch throws") {
    Rng rng(1);
    std::vector<int> dims{4, 3};
    Mlp mlp = make_mlp(dims, Activation::kRelu, Activation::kNone, rng);
    CHECK_THROWS_AS(mlp.forward(Mat::Random(2, 5)), ArgumentError);
  }
}

TEST_CASE("tape forward equals plain forward") {
  Rng rng(31);
  std::vector<int> dims{6, 8, 8, 3};
  Mlp mlp = make_mlp(dims, Activation::kRelu, Activation::kNone, rng);
  Mat x = Mat::Random(10, 6);
  Tape tape;
  MlpVars vars = register_mlp(tape, mlp, false);
  int out = mlp_forward(tape, vars, tape.constant(x));
  CHECK((tape.val(out) - mlp.forward(x)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: square function and constants") {
  Tape tape;
  int x = tape.leaf(Mat::Constant(1, 1, 3.0), true);
  int y = tape.mul(x, x);
  tape.backward(y);
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(6.0));

  Tape tape2;
  int a = tape2.leaf(Mat::Constant(1, 1, 2.0), true);
  int c = tape2.constant(Mat::Constant(1, 1, 5.0));
  int root = tape2.sum_all(c);
  tape2.backward(root);
  CHECK(tape2.grad(a).size() == 0);  // untouched leaf has no adjoint

  Tape tape3;
  int b = tape3.leaf(Mat::Constant(1, 1, 2.0), true);
  CHECK_THROWS_AS(tape3.backward(tape3.constant(Mat::Zero(2, 2))), ArgumentError);
  (void)b;
}

TEST_CASE("backward matches finite differences through an mlp chain") {
  Rng rng(67);
  std::vector<int> dims{4, 8, 8, 1};
  Mlp mlp = make_mlp(dims, Activation::kRelu, Activation::kSoftplus, rng);
  Mat x = Mat::Random(7, 4);

  auto loss_value = [&]() {
    Tape t;
    MlpVars vars = register_mlp(t, mlp, false);
    int out = mlp_forward(t, vars, t.constant(x));
    int sq = t.mul(out, out);
    return t.val(t.sum_all(sq))(0, 0);
  };

  Tape tape;
  MlpVars vars = register_mlp(tape, mlp, true);
  int out = mlp_forward(tape, vars, tape.constant(x));
  int root = tape.sum_all(tape.mul(out, out));
  tape.backward(root);
  Mlp grads = zeros_like(mlp);
  accumulate_mlp_grads(tape, vars, grads);

  Rng pick(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t layer = pick.below(mlp.layers.size());
    auto& w = mlp.layers[layer].w;
    const Eigen::Index idx = static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(w.size())));
    double fd = test::finite_difference(loss_value, w.data() + idx, 1e-6);
    double analytic = grads.layers[layer].w.data()[idx];
    CHECK(std::abs(analytic - fd) <= 1e-7 + 1e-5 * std::abs(fd));
  }
}

TEST_CASE("tape segment ops") {
  Tape tape;
  Mat x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  int xi = tape.leaf(x, true);
  int cum = tape.seg_cumsum_exclusive(xi, 3);
  Mat expect(6, 1);
  expect << 0, 1, 3, 0, 4, 9;
  CHECK((tape.val(cum) - expect).cwiseAbs().maxCoeff() == 0.0);

  int total = tape.seg_sum(xi, 3);
  CHECK(tape.val(total)(0, 0) == 6.0);
  CHECK(tape.val(total)(1, 0) == 15.0);

  // d(sum of cumsum)/dx_i counts the later positions in the segment.
  int root = tape.sum_all(cum);
  tape.backward(root);
  Mat g(6, 1);
  g << 2, 1, 0, 2, 1, 0;
  CHECK((tape.grad(xi) - g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam steps") {
  AdamConfig cfg;
  SUBCASE("zero gradient leaves parameters unchanged") {
    Mat p = Mat::Constant(2, 2, 1.5);
    Mat g = Mat::Zero(2, 2);
    AdamState st = AdamState::zeros_for(std::vector<const Mat*>{&p});
    adam_step({&p}, {&g}, st, cfg, cfg.lr);
    CHECK((p.array() == 1.5).all());
    CHECK(st.step == 1);
  }
  SUBCASE("first step moves by about -lr") {
    Mat p = Mat::Zero(1, 1);
    Mat g = Mat::Constant(1, 1, 1.0);
    AdamState st = AdamState::zeros_for(std::vector<const Mat*>{&p});
    adam_step({&p}, {&g}, st, cfg, 1e-3);
    CHECK(p(0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));
  }
  SUBCASE("constant gradient moves monotonically against its sign") {
    Mat p = Mat::Zero(1, 1);
    Mat g = Mat::Constant(1, 1, 0.7);
    AdamState st = AdamState::zeros_for(std::vector<const Mat*>{&p});
    double prev = 0.0;
    for (int i = 0; i < 5; ++i) {
      adam_step({&p}, {&g}, st, cfg, 1e-3);
      CHECK(p(0, 0) < prev);
      prev = p(0, 0);
    }
  }
  SUBCASE("lr 0 is the identity") {
    Mat p = Mat::Constant(3, 1, 0.25);
    Mat g = Mat::Constant(3, 1, 4.0);
    AdamState st = AdamState::zeros_for(std::vector<const Mat*>{&p});
    adam_step({&p}, {&g}, st, cfg, 0.0);
    CHECK((p.array() == 0.25).all());
  }
  SUBCASE("non-finite gradient aborts") {
    Mat p = Mat::Zero(1, 1);
    Mat g = Mat::Constant(1, 1, std::numeric_limits<double>::quiet_NaN());
    AdamState st = AdamState::zeros_for(std::vector<const Mat*>{&p});
    CHECK_THROWS_AS(adam_step({&p}, {&g}, st, cfg, 1e-3), NumericError);
  }
}

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "demnet/rng.hpp"
#include "demnet/tensor_ops.hpp"
#include "oracles.hpp"

using namespace demnet;
using namespace demnet::test;

namespace {

ConvSpec conv_spec(int k, int cin, int cout, int stride, Padding pad) {
  ConvSpec s;
  s.kernel_h = s.kernel_w = k;
  s.in_channels = cin;
  s.out_channels = cout;
  s.stride_h = s.stride_w = stride;
  s.padding = pad;
  return s;
}

ConvSpec tconv_spec(int k, int cin, int cout, int stride, int op) {
  ConvSpec s;
  s.kernel_h = s.kernel_w = k;
  s.in_channels = cin;
  s.out_channels = cout;
  s.stride_h = s.stride_w = stride;
  s.padding = Padding::VALID;
  s.output_padding = op;
  return s;
}

}  // namespace

TEST_SUITE("tensor_ops") {

TEST_CASE("output dimension formulas") {
  CHECK(conv_out_dim(140, 3, 1, Padding::SAME) == 140);
  CHECK(conv_out_dim(140, 5, 1, Padding::SAME) == 140);
  CHECK(conv_out_dim(35, 3, 1, Padding::VALID) == 33);
  CHECK(conv_out_dim(7, 3, 2, Padding::VALID) == 3);
  CHECK(conv_out_dim(7, 2, 2, Padding::SAME) == 4);  // ceil(7/2)
  CHECK(tconv_out_dim(35, 3, 4, 1) == 140);
  CHECK(tconv_out_dim(27, 3, 1, 0) == 29);
}

TEST_CASE("1x1 unit kernel reproduces the input") {
  Tensor input = random_tensor({5, 6, 1}, 1);
  Tensor w({1, 1, 1, 1}, {1.0});
  Tensor b({1});
  Tensor out = conv2d_forward(input, w, b, conv_spec(1, 1, 1, 1, Padding::VALID));
  REQUIRE(out.same_shape(input));
  CHECK(max_rel_diff(out, input) == 0.0);
}

TEST_CASE("3x3 delta kernel under SAME padding is the identity") {
  Tensor input = random_tensor({6, 7, 1}, 2);
  Tensor w({3, 3, 1, 1});
  w[(1 * 3 + 1)] = 1.0;  // center tap of [kh, kw, 1, 1]
  Tensor b({1});
  Tensor out = conv2d_forward(input, w, b, conv_spec(3, 1, 1, 1, Padding::SAME));
  REQUIRE(out.same_shape(input));
  CHECK(max_rel_diff(out, input) == 0.0);
}

TEST_CASE("constant input, VALID: every output equals the tap sum") {
  Tensor input({5, 5, 2});
  input.fill(3.0);
  Tensor w({3, 3, 2, 1});
  w.fill(0.5);
  Tensor b({1}, {1.25});
  Tensor out = conv2d_forward(input, w, b, conv_spec(3, 2, 1, 1, Padding::VALID));
  double want = 3.0 * 0.5 * 9 * 2 + 1.25;
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("zero weights leave only the per-channel bias") {
  Tensor input = random_tensor({4, 4, 3}, 3);
  Tensor w({3, 3, 3, 2});
  Tensor b({2}, {1.5, -2.5});
  Tensor out = conv2d_forward(input, w, b, conv_spec(3, 3, 2, 1, Padding::SAME));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(out.at(i, j, 0) == 1.5);
      CHECK(out.at(i, j, 1) == -2.5);
    }
  }
}

TEST_CASE("conv matches the quadruple-loop oracle on random instances") {
  Rng rng(44);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    int k = 1 + static_cast<int>(rng.below(3));
    int h = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(8 - k)));
    int w = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(8 - k)));
    int cin = 1 + static_cast<int>(rng.below(3));
    int cout = 1 + static_cast<int>(rng.below(3));
    int stride = 1 + static_cast<int>(rng.below(2));
    Padding pad = rng.below(2) ? Padding::SAME : Padding::VALID;
    ConvSpec spec = conv_spec(k, cin, cout, stride, pad);
    Tensor input = random_tensor({h, w, cin}, 1000 + trial);
    Tensor weights = random_tensor({k, k, cin, cout}, 2000 + trial);
    Tensor bias = random_tensor({cout}, 3000 + trial);
    Tensor got = conv2d_forward(input, weights, bias, spec);
    Tensor want = naive_conv2d(input, weights, bias, spec);
    REQUIRE(got.same_shape(want));
    worst = std::max(worst, max_rel_diff(got, want));
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("conv gradients match finite differences") {
  struct Case {
    ConvSpec spec;
    int h, w;
  };
  const Case cases[] = {
      {conv_spec(3, 2, 3, 1, Padding::SAME), 6, 7},
      {conv_spec(3, 2, 2, 2, Padding::VALID), 7, 6},
  };
  for (const Case& c : cases) {
    Tensor input = random_tensor({c.h, c.w, c.spec.in_channels}, 51);
    Tensor weights = random_tensor(
        {c.spec.kernel_h, c.spec.kernel_w, c.spec.in_channels,
         c.spec.out_channels},
        52);
    Tensor bias = random_tensor({c.spec.out_channels}, 53);
    Tensor probe = conv2d_forward(input, weights, bias, c.spec);
    Tensor coeffs = random_tensor(probe.shape(), 54);
    auto loss = [&]() {
      return weighted_sum(conv2d_forward(input, weights, bias, c.spec), coeffs);
    };
    ConvGrads grads = conv2d_backward(coeffs, input, weights, c.spec);
    CHECK(fd_check(input, grads.grad_input, loss) < 1e-6);
    CHECK(fd_check(weights, grads.grad_weights, loss) < 1e-6);
    CHECK(fd_check(bias, grads.grad_bias, loss) < 1e-6);
  }
}

TEST_CASE("tconv matches the scatter oracle") {
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    int k = 1 + static_cast<int>(rng.below(3));
    int stride = 1 + static_cast<int>(rng.below(4));
    int op = static_cast<int>(rng.below(static_cast<std::uint64_t>(stride)));
    int h = 2 + static_cast<int>(rng.below(4));
    int w = 2 + static_cast<int>(rng.below(4));
    int cin = 1 + static_cast<int>(rng.below(3));
    int cout = 1 + static_cast<int>(rng.below(3));
    ConvSpec spec = tconv_spec(k, cin, cout, stride, op);
    Tensor input = random_tensor({h, w, cin}, 5000 + trial);
    Tensor weights = random_tensor({k, k, cout, cin}, 6000 + trial);
    Tensor bias = random_tensor({cout}, 7000 + trial);
    Tensor got = tconv2d_forward(input, weights, bias, spec);
    Tensor want = naive_tconv2d(input, weights, bias, spec);
    REQUIRE(got.same_shape(want));
    worst = std::max(worst, max_rel_diff(got, want));
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("tconv output_padding fringe carries bias only") {
  ConvSpec spec = tconv_spec(3, 2, 2, 4, 1);
  Tensor input = random_tensor({3, 3, 2}, 61);
  Tensor weights = random_tensor({3, 3, 2, 2}, 62);
  Tensor bias({2}, {0.75, -1.5});
  Tensor out = tconv2d_forward(input, weights, bias, spec);
  REQUIRE(out.dim(0) == 12);  // (3-1)*4 + 3 + 1
  for (int j = 0; j < 12; ++j) {
    for (int c = 0; c < 2; ++c) {
      CHECK(out.at(11, j, c) == bias[static_cast<std::size_t>(c)]);
      CHECK(out.at(j, 11, c) == bias[static_cast<std::size_t>(c)]);
    }
  }
}

TEST_CASE("tconv gradients match finite differences") {
  const ConvSpec specs[] = {
      tconv_spec(3, 3, 2, 1, 0),
      tconv_spec(3, 2, 2, 4, 1),
  };
  for (const ConvSpec& spec : specs) {
    Tensor input = random_tensor({4, 5, spec.in_channels}, 71);
    Tensor weights = random_tensor(
        {spec.kernel_h, spec.kernel_w, spec.out_channels, spec.in_channels},
        72);
    Tensor bias = random_tensor({spec.out_channels}, 73);
    Tensor probe = tconv2d_forward(input, weights, bias, spec);
    Tensor coeffs = random_tensor(probe.shape(), 74);
    auto loss = [&]() {
      return weighted_sum(tconv2d_forward(input, weights, bias, spec), coeffs);
    };
    ConvGrads grads = tconv2d_backward(coeffs, input, weights, spec);
    CHECK(fd_check(input, grads.grad_input, loss) < 1e-6);
    CHECK(fd_check(weights, grads.grad_weights, loss) < 1e-6);
    CHECK(fd_check(bias, grads.grad_bias, loss) < 1e-6);
  }
}

TEST_CASE("tconv is the adjoint of the strided VALID conv, same weights") {
  struct Case {
    int size, k, stride, cin, cout;
  };
  const Case cases[] = {{8, 3, 1, 3, 2}, {11, 3, 4, 2, 4}, {12, 3, 4, 2, 4}};
  for (const Case& c : cases) {
    ConvSpec conv = conv_spec(c.k, c.cin, c.cout, c.stride, Padding::VALID);
    int out = conv_out_dim(c.size, c.k, c.stride, Padding::VALID);
    int op = c.size - ((out - 1) * c.stride + c.k);
    ConvSpec tconv = tconv_spec(c.k, c.cout, c.cin, c.stride, op);
    Tensor x = random_tensor({c.size, c.size, c.cin}, 81);
    Tensor y = random_tensor({out, out, c.cout}, 82);
    Tensor w = random_tensor({c.k, c.k, c.cin, c.cout}, 83);
    Tensor zero_b({c.cout});
    Tensor zero_b_in({c.cin});
    double lhs = weighted_sum(conv2d_forward(x, w, zero_b, conv), y);
    double rhs = weighted_sum(tconv2d_forward(y, w, zero_b_in, tconv), x);
    CHECK(rel_diff(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("maxpool picks window maxima with flat argmax") {
  Tensor input({4, 4, 1});
  for (std::size_t i = 0; i < 16; ++i) input[i] = static_cast<double>(i + 1);
  MaxPoolResult r = maxpool_forward(input, 2, 2);
  REQUIRE(r.output.shape() == std::vector<int>{2, 2, 1});
  CHECK(r.output.at(0, 0, 0) == 6.0);
  CHECK(r.output.at(0, 1, 0) == 8.0);
  CHECK(r.output.at(1, 0, 0) == 14.0);
  CHECK(r.output.at(1, 1, 0) == 16.0);
  CHECK(r.argmax == std::vector<std::int64_t>{5, 7, 13, 15});
}

TEST_CASE("maxpool ties resolve to the lowest flat index") {
  Tensor input({4, 4, 1});
  input.fill(2.5);
  MaxPoolResult r = maxpool_forward(input, 2, 2);
  CHECK(r.argmax == std::vector<std::int64_t>{0, 2, 8, 10});
}

TEST_CASE("maxpool backward routes gradient to the argmax only") {
  Tensor input = random_tensor({4, 4, 2}, 91);
  MaxPoolResult r = maxpool_forward(input, 2, 2);
  Tensor grad_out({2, 2, 2});
  grad_out.fill(1.0);
  Tensor grad_in = maxpool_backward(grad_out, r.argmax, input.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < grad_in.size(); ++i) {
    CHECK((grad_in[i] == 0.0 || grad_in[i] == 1.0));
    total += grad_in[i];
  }
  CHECK(total == 8.0);  // one unit per output cell
}

TEST_CASE("maxpool validation") {
  Tensor input({4, 4, 1});
  CHECK_THROWS_AS(maxpool_forward(input, 2, 3), std::invalid_argument);
  Tensor odd({5, 4, 1});
  CHECK_THROWS_AS(maxpool_forward(odd, 2, 2), std::invalid_argument);
}

TEST_CASE("maxpool gradient matches finite differences") {
  Tensor input = random_tensor({8, 8, 2}, 92);
  Tensor probe = maxpool_forward(input, 4, 4).output;
  Tensor coeffs = random_tensor(probe.shape(), 93);
  auto loss = [&]() {
    return weighted_sum(maxpool_forward(input, 4, 4).output, coeffs);
  };
  MaxPoolResult r = maxpool_forward(input, 4, 4);
  Tensor analytic = maxpool_backward(coeffs, r.argmax, input.shape());
  CHECK(fd_check(input, analytic, loss) < 1e-6);
}

TEST_CASE("relu forward and zero-subgradient convention") {
  Tensor x({1, 3, 1}, {-1.0, 0.0, 2.0});
  Tensor y = relu(x);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 2.0);
  Tensor g({1, 3, 1}, {5.0, 7.0, 9.0});
  Tensor gx = relu_backward(g, x);
  CHECK(gx[0] == 0.0);
  CHECK(gx[1] == 0.0);  // subgradient 0 at exactly 0
  CHECK(gx[2] == 9.0);
}

TEST_CASE("relu gradient matches finite differences away from kinks") {
  Tensor x = random_tensor({5, 5, 3}, 94);
  Tensor coeffs = random_tensor({5, 5, 3}, 95);
  auto loss = [&]() { return weighted_sum(relu(x), coeffs); };
  Tensor analytic = relu_backward(coeffs, x);
  CHECK(fd_check(x, analytic, loss) < 1e-6);
}

TEST_CASE("prelu scales negatives per channel") {
  Tensor x({1, 2, 2}, {-2.0, 4.0, 5.0, -2.0});
  Tensor slopes({2}, {0.25, 0.5});
  Tensor y = prelu(x, slopes);
  CHECK(y.at(0, 0, 0) == -0.5);
  CHECK(y.at(0, 0, 1) == 4.0);
  CHECK(y.at(0, 1, 0) == 5.0);
  CHECK(y.at(0, 1, 1) == -1.0);
}

TEST_CASE("prelu with slope 0 equals relu; slope 1 is the identity") {
  Tensor x = random_tensor({4, 4, 2}, 96);
  Tensor zero_slopes({2});
  Tensor one_slopes({2}, {1.0, 1.0});
  CHECK(max_rel_diff(prelu(x, zero_slopes), relu(x)) == 0.0);
  CHECK(max_rel_diff(prelu(x, one_slopes), x) == 0.0);
}

TEST_CASE("prelu gradient convention at zero passes grad through") {
  Tensor x({1, 1, 1}, {0.0});
  Tensor slopes({1}, {0.25});
  Tensor g({1, 1, 1}, {3.0});
  PreluGrads grads = prelu_backward(g, x, slopes);
  CHECK(grads.grad_input[0] == 3.0);
  CHECK(grads.grad_slopes[0] == 0.0);  // x < 0 contributes; 0 does not
}

TEST_CASE("prelu slope gradient accumulates grad*x over negatives") {
  Tensor x({1, 2, 1}, {-3.0, 5.0});
  Tensor slopes({1}, {0.25});
  Tensor g({1, 2, 1}, {2.0, 7.0});
  PreluGrads grads = prelu_backward(g, x, slopes);
  CHECK(grads.grad_slopes[0] == -6.0);
  CHECK(grads.grad_input[0] == 0.5);  // slope * grad
  CHECK(grads.grad_input[1] == 7.0);
}

TEST_CASE("prelu gradients match finite differences") {
  Tensor x = random_tensor({5, 5, 3}, 97);
  Tensor slopes({3}, {0.25, 0.5, 0.75});
  Tensor coeffs = random_tensor({5, 5, 3}, 98);
  auto loss = [&]() { return weighted_sum(prelu(x, slopes), coeffs); };
  PreluGrads grads = prelu_backward(coeffs, x, slopes);
  CHECK(fd_check(x, grads.grad_input, loss) < 1e-6);
  CHECK(fd_check(slopes, grads.grad_slopes, loss) < 1e-6);
}

TEST_CASE("argument validation") {
  Tensor input({5, 5, 2});
  Tensor w_bad({3, 3, 3, 4});  // wrong Cin
  Tensor b({4});
  CHECK_THROWS_AS(
      conv2d_forward(input, w_bad, b, conv_spec(3, 2, 4, 1, Padding::SAME)),
      std::invalid_argument);

  Tensor small({2, 2, 1});
  Tensor w({3, 3, 1, 1});
  Tensor b1({1});
  CHECK_THROWS_AS(
      conv2d_forward(small, w, b1, conv_spec(3, 1, 1, 1, Padding::VALID)),
      std::invalid_argument);

  // output_padding is a transposed-conv concept.
  ConvSpec op_conv = conv_spec(3, 1, 1, 1, Padding::VALID);
  op_conv.output_padding = 1;
  Tensor ok({5, 5, 1});
  CHECK_THROWS_AS(conv2d_forward(ok, w, b1, op_conv), std::invalid_argument);

  // tconv is VALID-only.
  ConvSpec t_same = tconv_spec(3, 1, 1, 1, 0);
  t_same.padding = Padding::SAME;
  Tensor tw({3, 3, 1, 1});
  CHECK_THROWS_AS(tconv2d_forward(ok, tw, b1, t_same), std::invalid_argument);

  // prelu slope count must match channels.
  Tensor slopes_bad({3});
  CHECK_THROWS_AS(prelu(input, slopes_bad), std::invalid_argument);
}

}  // TEST_SUITE

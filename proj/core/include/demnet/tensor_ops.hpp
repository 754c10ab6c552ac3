#ifndef DEMNET_TENSOR_OPS_HPP
#define DEMNET_TENSOR_OPS_HPP

#include <cstdint>
#include <vector>

#include "demnet/tensor.hpp"

namespace demnet {

enum class Padding { SAME, VALID };

/// Geometry of a convolution or transposed-convolution layer.
/// output_padding applies to transposed convolution only: it grows the
/// output by extra bottom/right rows that receive bias but no taps.
struct ConvSpec {
  int kernel_h = 1;
  int kernel_w = 1;
  int in_channels = 1;
  int out_channels = 1;
  int stride_h = 1;
  int stride_w = 1;
  Padding padding = Padding::VALID;
  int output_padding = 0;
};

/// SAME: ceil(in/stride). VALID: floor((in - kernel)/stride) + 1.
int conv_out_dim(int in, int kernel, int stride, Padding padding);

/// (in - 1)*stride + kernel + output_padding.
int tconv_out_dim(int in, int kernel, int stride, int output_padding);

/// Cross-correlation (no kernel flip). Weights are [kh, kw, Cin, Cout];
/// bias is [Cout], added per output channel. SAME puts the extra padding
/// pixel on the bottom/right when the total is odd.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights,
                      const Tensor& bias, const ConvSpec& spec);

struct ConvGrads {
  Tensor grad_input;
  Tensor grad_weights;
  Tensor grad_bias;
};

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& cached_input,
                          const Tensor& weights, const ConvSpec& spec);

/// Adjoint of the VALID convolution with the same weight tensor: for a
/// spec mapping Cin -> Cout, weights are [kh, kw, Cout, Cin] (conv layout
/// with the channel roles swapped), so that
///   <conv(x; W), y> == <x, tconv(y; W)>
/// holds exactly. Bias covers every output cell, including the
/// output_padding fringe.
Tensor tconv2d_forward(const Tensor& input, const Tensor& weights,
                       const Tensor& bias, const ConvSpec& spec);

/// grad_input of tconv is a VALID strided forward convolution of grad_out
/// with the same weight tensor.
ConvGrads tconv2d_backward(const Tensor& grad_out, const Tensor& cached_input,
                           const Tensor& weights, const ConvSpec& spec);

struct MaxPoolResult {
  Tensor output;
  /// Flat source index into the input per output cell; ties resolve to
  /// the lowest flat index.
  std::vector<std::int64_t> argmax;
};

/// Disjoint pool x pool windows; H and W must be divisible by stride
/// (pool == stride for this architecture).
MaxPoolResult maxpool_forward(const Tensor& input, int pool, int stride);

Tensor maxpool_backward(const Tensor& grad_out,
                        const std::vector<std::int64_t>& argmax,
                        const std::vector<int>& input_shape);

/// max(0, x). Backward convention: subgradient 0 at x == 0.
Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input);

/// f(x) = x for x >= 0, slopes[c]*x for x < 0; one slope per channel
/// (last axis). Gradient convention at x == 0: passes grad_out through.
Tensor prelu(const Tensor& input, const Tensor& slopes);

struct PreluGrads {
  Tensor grad_input;
  /// grad_slopes[c] = sum of grad_out * x over positions with x < 0.
  Tensor grad_slopes;
};

PreluGrads prelu_backward(const Tensor& grad_out, const Tensor& cached_input,
                          const Tensor& slopes);

}  // namespace demnet

#endif  // DEMNET_TENSOR_OPS_HPP

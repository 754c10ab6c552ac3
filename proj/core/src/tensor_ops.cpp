#include "demnet/tensor_ops.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "gemm.hpp"

namespace demnet {

namespace {

// im2col buffer budget per chunk, in doubles (8 MiB).
constexpr std::size_t kChunkBudget = (8u << 20) / sizeof(double);

[[noreturn]] void fail(const std::string& op, const std::string& msg) {
  throw std::invalid_argument(op + ": " + msg);
}

// Resolved geometry shared by the conv/tconv lowering paths.
struct ConvGeom {
  int h_in, w_in, c_in;
  int h_out, w_out, c_out;
  int kh, kw, sh, sw;
  int pad_top, pad_left;
  int patch;  // kh * kw * c_in
};

void check_conv_args(const std::string& op, const Tensor& input,
                     const Tensor& weights, const Tensor& bias,
                     const ConvSpec& spec, bool transposed) {
  if (input.rank() != 3) {
    fail(op, "input rank " + std::to_string(input.rank()) + ", expected 3");
  }
  if (weights.rank() != 4) {
    fail(op, "weights rank " + std::to_string(weights.rank()) + ", expected 4");
  }
  if (input.dim(2) != spec.in_channels) {
    fail(op, "input channels " + std::to_string(input.dim(2)) +
                 " != spec in_channels " + std::to_string(spec.in_channels));
  }
  // Transposed weights carry [kh, kw, Cout, Cin]; plain carry
  // [kh, kw, Cin, Cout].
  int want2 = transposed ? spec.out_channels : spec.in_channels;
  int want3 = transposed ? spec.in_channels : spec.out_channels;
  if (weights.dim(0) != spec.kernel_h || weights.dim(1) != spec.kernel_w ||
      weights.dim(2) != want2 || weights.dim(3) != want3) {
    fail(op, "weight shape " + shape_str(weights.shape()) +
                 " does not match spec " + std::to_string(spec.kernel_h) +
                 "x" + std::to_string(spec.kernel_w) + " " +
                 std::to_string(spec.in_channels) + "->" +
                 std::to_string(spec.out_channels));
  }
  if (!bias.empty() &&
      (bias.rank() != 1 || bias.dim(0) != spec.out_channels)) {
    fail(op, "bias shape " + shape_str(bias.shape()) + ", expected (" +
                 std::to_string(spec.out_channels) + ")");
  }
  if (spec.kernel_h < 1 || spec.kernel_w < 1 || spec.stride_h < 1 ||
      spec.stride_w < 1) {
    fail(op, "kernel and stride extents must be >= 1");
  }
  if (transposed && spec.padding != Padding::VALID) {
    fail(op, "transposed convolution supports VALID padding only");
  }
  if (!transposed && spec.output_padding != 0) {
    fail(op, "output_padding applies to transposed convolution only");
  }
}

// Geometry for conv2d over `input`; errors if a VALID dim collapses.
ConvGeom conv_geom(const std::string& op, const Tensor& input,
                   const ConvSpec& spec) {
  ConvGeom g;
  g.h_in = input.dim(0);
  g.w_in = input.dim(1);
  g.c_in = spec.in_channels;
  g.c_out = spec.out_channels;
  g.kh = spec.kernel_h;
  g.kw = spec.kernel_w;
  g.sh = spec.stride_h;
  g.sw = spec.stride_w;
  g.h_out = conv_out_dim(g.h_in, g.kh, g.sh, spec.padding);
  g.w_out = conv_out_dim(g.w_in, g.kw, g.sw, spec.padding);
  if (g.h_out < 1 || g.w_out < 1) {
    fail(op, "VALID output " + std::to_string(g.h_out) + "x" +
                 std::to_string(g.w_out) + " from input " +
                 std::to_string(g.h_in) + "x" + std::to_string(g.w_in) +
                 " and kernel " + std::to_string(g.kh) + "x" +
                 std::to_string(g.kw));
  }
  if (spec.padding == Padding::SAME) {
    int pad_h = std::max(0, (g.h_out - 1) * g.sh + g.kh - g.h_in);
    int pad_w = std::max(0, (g.w_out - 1) * g.sw + g.kw - g.w_in);
    // Odd totals put the extra pixel on the bottom/right.
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  } else {
    g.pad_top = 0;
    g.pad_left = 0;
  }
  g.patch = g.kh * g.kw * g.c_in;
  return g;
}

// Patch gather for output rows [r0, r1): col is ((r1-r0)*w_out) x patch,
// row (p-r0)*w_out + q, column (a*kw + b)*c_in + ci. Out-of-image taps
// are zero.
void im2col_rows(const double* x, const ConvGeom& g, int r0, int r1,
                 double* col) {
  std::size_t row_bytes = static_cast<std::size_t>(g.c_in) * sizeof(double);
  for (int p = r0; p < r1; ++p) {
    for (int q = 0; q < g.w_out; ++q) {
      double* dst = col + (static_cast<std::size_t>(p - r0) * g.w_out + q) *
                              g.patch;
      for (int a = 0; a < g.kh; ++a) {
        int ir = p * g.sh + a - g.pad_top;
        if (ir < 0 || ir >= g.h_in) {
          std::memset(dst, 0, static_cast<std::size_t>(g.kw) * row_bytes);
          dst += static_cast<std::size_t>(g.kw) * g.c_in;
          continue;
        }
        for (int b = 0; b < g.kw; ++b) {
          int jc = q * g.sw + b - g.pad_left;
          if (jc < 0 || jc >= g.w_in) {
            std::memset(dst, 0, row_bytes);
          } else {
            const double* src =
                x + (static_cast<std::size_t>(ir) * g.w_in + jc) * g.c_in;
            std::memcpy(dst, src, row_bytes);
          }
          dst += g.c_in;
        }
      }
    }
  }
}

// Scatter-add transpose of im2col_rows.
void col2im_rows(const double* col, const ConvGeom& g, int r0, int r1,
                 double* gx) {
  for (int p = r0; p < r1; ++p) {
    for (int q = 0; q < g.w_out; ++q) {
      const double* src = col + (static_cast<std::size_t>(p - r0) * g.w_out +
                                 q) *
                                    g.patch;
      for (int a = 0; a < g.kh; ++a) {
        int ir = p * g.sh + a - g.pad_top;
        if (ir < 0 || ir >= g.h_in) {
          src += static_cast<std::size_t>(g.kw) * g.c_in;
          continue;
        }
        for (int b = 0; b < g.kw; ++b) {
          int jc = q * g.sw + b - g.pad_left;
          if (jc >= 0 && jc < g.w_in) {
            double* dst =
                gx + (static_cast<std::size_t>(ir) * g.w_in + jc) * g.c_in;
            for (int ci = 0; ci < g.c_in; ++ci) dst[ci] += src[ci];
          }
          src += g.c_in;
        }
      }
    }
  }
}

int chunk_rows(const ConvGeom& g) {
  std::size_t per_row = static_cast<std::size_t>(g.w_out) * g.patch;
  return std::max<std::size_t>(1, kChunkBudget / std::max<std::size_t>(
                                                     per_row, 1));
}

}  // namespace

int conv_out_dim(int in, int kernel, int stride, Padding padding) {
  if (padding == Padding::SAME) return (in + stride - 1) / stride;
  return (in - kernel) / stride + 1;
}

int tconv_out_dim(int in, int kernel, int stride, int output_padding) {
  return (in - 1) * stride + kernel + output_padding;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weights,
                      const Tensor& bias, const ConvSpec& spec) {
  check_conv_args("conv2d", input, weights, bias, spec, false);
  ConvGeom g = conv_geom("conv2d", input, spec);
  Tensor out({g.h_out, g.w_out, g.c_out});

  // Flat weights are already the (patch x c_out) GEMM operand.
  const double* wmat = weights.data();
  int rows = chunk_rows(g);
  std::vector<double> col(static_cast<std::size_t>(rows) * g.w_out * g.patch);
  for (int r0 = 0; r0 < g.h_out; r0 += rows) {
    int r1 = std::min(g.h_out, r0 + rows);
    im2col_rows(input.data(), g, r0, r1, col.data());
    double* out_chunk =
        out.data() + static_cast<std::size_t>(r0) * g.w_out * g.c_out;
    detail::gemm_nn((r1 - r0) * g.w_out, g.c_out, g.patch, col.data(), g.patch,
                    wmat, g.c_out, out_chunk, g.c_out, false);
  }
  if (!bias.empty()) {
    double* o = out.data();
    std::size_t cells = static_cast<std::size_t>(g.h_out) * g.w_out;
    for (std::size_t i = 0; i < cells; ++i, o += g.c_out) {
      for (int c = 0; c < g.c_out; ++c) o[c] += bias[c];
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& cached_input,
                          const Tensor& weights, const ConvSpec& spec) {
  check_conv_args("conv2d_backward", cached_input, weights, Tensor(), spec,
                  false);
  ConvGeom g = conv_geom("conv2d_backward", cached_input, spec);
  if (grad_out.rank() != 3 || grad_out.dim(0) != g.h_out ||
      grad_out.dim(1) != g.w_out || grad_out.dim(2) != g.c_out) {
    fail("conv2d_backward", "grad_out shape " + shape_str(grad_out.shape()) +
                                ", expected (" + std::to_string(g.h_out) +
                                ", " + std::to_string(g.w_out) + ", " +
                                std::to_string(g.c_out) + ")");
  }

  ConvGrads grads;
  grads.grad_input = Tensor::zeros_like(cached_input);
  grads.grad_weights = Tensor::zeros_like(weights);
  grads.grad_bias = Tensor({g.c_out});

  const double* go = grad_out.data();
  std::size_t cells = static_cast<std::size_t>(g.h_out) * g.w_out;
  for (std::size_t i = 0; i < cells; ++i) {
    for (int c = 0; c < g.c_out; ++c) {
      grads.grad_bias[c] += go[i * g.c_out + c];
    }
  }

  int rows = chunk_rows(g);
  std::vector<double> col(static_cast<std::size_t>(rows) * g.w_out * g.patch);
  std::vector<double> dcol(col.size());
  for (int r0 = 0; r0 < g.h_out; r0 += rows) {
    int r1 = std::min(g.h_out, r0 + rows);
    int m = (r1 - r0) * g.w_out;
    const double* go_chunk =
        go + static_cast<std::size_t>(r0) * g.w_out * g.c_out;
    // dW (patch x c_out) += col^T . grad_out_chunk
    im2col_rows(cached_input.data(), g, r0, r1, col.data());
    detail::gemm_tn(g.patch, g.c_out, m, col.data(), g.patch, go_chunk,
                    g.c_out, grads.grad_weights.data(), g.c_out, true);
    // dcol (m x patch) = grad_out_chunk . W^T, scattered back to dX
    detail::gemm_nt(m, g.patch, g.c_out, go_chunk, g.c_out, weights.data(),
                    g.c_out, dcol.data(), g.patch, false);
    col2im_rows(dcol.data(), g, r0, r1, grads.grad_input.data());
  }
  return grads;
}

Tensor tconv2d_forward(const Tensor& input, const Tensor& weights,
                       const Tensor& bias, const ConvSpec& spec) {
  check_conv_args("tconv2d", input, weights, bias, spec, true);
  int h_in = input.dim(0), w_in = input.dim(1);
  int h_out = tconv_out_dim(h_in, spec.kernel_h, spec.stride_h,
                            spec.output_padding);
  int w_out = tconv_out_dim(w_in, spec.kernel_w, spec.stride_w,
                            spec.output_padding);
  int c_in = spec.in_channels, c_out = spec.out_channels;
  int k2 = spec.kernel_h * spec.kernel_w * c_out;

  Tensor out({h_out, w_out, c_out});
  if (!bias.empty()) {
    double* o = out.data();
    std::size_t cells = static_cast<std::size_t>(h_out) * w_out;
    for (std::size_t i = 0; i < cells; ++i, o += c_out) {
      for (int c = 0; c < c_out; ++c) o[c] = bias[c];
    }
  }

  // T[pq, (a*kw + b)*c_out + co] = sum_ci x[p,q,ci] * W[a,b,co,ci],
  // then each input cell scatters its kh*kw*c_out stencil.
  std::size_t m = static_cast<std::size_t>(h_in) * w_in;
  std::vector<double> t(m * k2);
  detail::gemm_nt(static_cast<int>(m), k2, c_in, input.data(), c_in,
                  weights.data(), c_in, t.data(), k2, false);
  for (int p = 0; p < h_in; ++p) {
    for (int q = 0; q < w_in; ++q) {
      const double* src =
          t.data() + (static_cast<std::size_t>(p) * w_in + q) * k2;
      for (int a = 0; a < spec.kernel_h; ++a) {
        for (int b = 0; b < spec.kernel_w; ++b) {
          double* dst = out.data() +
                        (static_cast<std::size_t>(p * spec.stride_h + a) *
                             w_out +
                         q * spec.stride_w + b) *
                            c_out;
          for (int co = 0; co < c_out; ++co) dst[co] += src[co];
          src += c_out;
        }
      }
    }
  }
  return out;
}

ConvGrads tconv2d_backward(const Tensor& grad_out, const Tensor& cached_input,
                           const Tensor& weights, const ConvSpec& spec) {
  check_conv_args("tconv2d_backward", cached_input, weights, Tensor(), spec,
                  true);
  int h_in = cached_input.dim(0), w_in = cached_input.dim(1);
  int h_out = tconv_out_dim(h_in, spec.kernel_h, spec.stride_h,
                            spec.output_padding);
  int w_out = tconv_out_dim(w_in, spec.kernel_w, spec.stride_w,
                            spec.output_padding);
  int c_in = spec.in_channels, c_out = spec.out_channels;
  if (grad_out.rank() != 3 || grad_out.dim(0) != h_out ||
      grad_out.dim(1) != w_out || grad_out.dim(2) != c_out) {
    fail("tconv2d_backward",
         "grad_out shape " + shape_str(grad_out.shape()) + ", expected (" +
             std::to_string(h_out) + ", " + std::to_string(w_out) + ", " +
             std::to_string(c_out) + ")");
  }

  ConvGrads grads;
  grads.grad_input = Tensor({h_in, w_in, c_in});
  grads.grad_weights = Tensor::zeros_like(weights);
  grads.grad_bias = Tensor({c_out});

  // Bias touched every output cell, including the output_padding fringe.
  const double* go = grad_out.data();
  std::size_t cells = static_cast<std::size_t>(h_out) * w_out;
  for (std::size_t i = 0; i < cells; ++i) {
    for (int c = 0; c < c_out; ++c) grads.grad_bias[c] += go[i * c_out + c];
  }

  // Gather grad_out patches: Gcol[pq, (a*kw+b)*c_out + co] =
  // grad_out[p*sh + a, q*sw + b, co]. The fringe rows sit beyond every
  // stencil, so they are never read here. Then
  //   dX = Gcol . Wmat   (the adjoint identity: a strided VALID conv)
  //   dW = Gcol^T . X
  ConvGeom gather;
  gather.h_in = h_out;
  gather.w_in = w_out;
  gather.c_in = c_out;
  gather.h_out = h_in;
  gather.w_out = w_in;
  gather.c_out = c_in;
  gather.kh = spec.kernel_h;
  gather.kw = spec.kernel_w;
  gather.sh = spec.stride_h;
  gather.sw = spec.stride_w;
  gather.pad_top = 0;
  gather.pad_left = 0;
  gather.patch = spec.kernel_h * spec.kernel_w * c_out;

  int m = h_in * w_in;
  std::vector<double> gcol(static_cast<std::size_t>(m) * gather.patch);
  im2col_rows(grad_out.data(), gather, 0, h_in, gcol.data());
  detail::gemm_nn(m, c_in, gather.patch, gcol.data(), gather.patch,
                  weights.data(), c_in, grads.grad_input.data(), c_in, false);
  detail::gemm_tn(gather.patch, c_in, m, gcol.data(), gather.patch,
                  cached_input.data(), c_in, grads.grad_weights.data(), c_in,
                  false);
  return grads;
}

MaxPoolResult maxpool_forward(const Tensor& input, int pool, int stride) {
  if (input.rank() != 3) fail("maxpool", "input rank must be 3");
  if (pool != stride) fail("maxpool", "windows must be disjoint (pool == stride)");
  int h = input.dim(0), w = input.dim(1), c = input.dim(2);
  if (h % stride != 0 || w % stride != 0) {
    fail("maxpool", "extents " + std::to_string(h) + "x" + std::to_string(w) +
                        " not divisible by stride " + std::to_string(stride));
  }
  int ho = h / stride, wo = w / stride;
  MaxPoolResult res{Tensor({ho, wo, c}), {}};
  res.argmax.resize(static_cast<std::size_t>(ho) * wo * c);
  const double* x = input.data();
  for (int p = 0; p < ho; ++p) {
    for (int q = 0; q < wo; ++q) {
      for (int ch = 0; ch < c; ++ch) {
        std::int64_t best_idx = -1;
        double best = 0.0;
        for (int a = 0; a < pool; ++a) {
          for (int b = 0; b < pool; ++b) {
            std::int64_t idx =
                (static_cast<std::int64_t>(p * stride + a) * w +
                 (q * stride + b)) *
                    c +
                ch;
            // Strict > keeps the lowest flat index on ties.
            if (best_idx < 0 || x[idx] > best) {
              best = x[idx];
              best_idx = idx;
            }
          }
        }
        std::size_t out_idx = (static_cast<std::size_t>(p) * wo + q) * c + ch;
        res.output[out_idx] = best;
        res.argmax[out_idx] = best_idx;
      }
    }
  }
  return res;
}

Tensor maxpool_backward(const Tensor& grad_out,
                        const std::vector<std::int64_t>& argmax,
                        const std::vector<int>& input_shape) {
  if (argmax.size() != grad_out.size()) {
    fail("maxpool_backward", "argmax size " + std::to_string(argmax.size()) +
                                 " != grad_out size " +
                                 std::to_string(grad_out.size()));
  }
  Tensor grad_input(input_shape);
  std::int64_t n = static_cast<std::int64_t>(grad_input.size());
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    std::int64_t idx = argmax[i];
    if (idx < 0 || idx >= n) {
      fail("maxpool_backward", "argmax entry " + std::to_string(idx) +
                                   " outside input of size " +
                                   std::to_string(n) + " (corrupted cache)");
    }
    grad_input[static_cast<std::size_t>(idx)] += grad_out[i];
  }
  return grad_input;
}

Tensor relu(const Tensor& input) {
  Tensor out = Tensor::zeros_like(input);
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = input[i] > 0.0 ? input[i] : 0.0;
  }
  return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input) {
  if (!grad_out.same_shape(cached_input)) {
    fail("relu_backward", "grad_out shape " + shape_str(grad_out.shape()) +
                              " != input shape " +
                              shape_str(cached_input.shape()));
  }
  Tensor grad_input = Tensor::zeros_like(cached_input);
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad_input[i] = cached_input[i] > 0.0 ? grad_out[i] : 0.0;
  }
  return grad_input;
}

Tensor prelu(const Tensor& input, const Tensor& slopes) {
  int c = input.dim(input.rank() - 1);
  if (slopes.rank() != 1 || slopes.dim(0) != c) {
    fail("prelu", "slopes shape " + shape_str(slopes.shape()) +
                      ", expected (" + std::to_string(c) + ")");
  }
  Tensor out = Tensor::zeros_like(input);
  std::size_t cells = input.size() / static_cast<std::size_t>(c);
  const double* x = input.data();
  double* o = out.data();
  for (std::size_t i = 0; i < cells; ++i, x += c, o += c) {
    for (int ch = 0; ch < c; ++ch) {
      o[ch] = x[ch] >= 0.0 ? x[ch] : slopes[ch] * x[ch];
    }
  }
  return out;
}

PreluGrads prelu_backward(const Tensor& grad_out, const Tensor& cached_input,
                          const Tensor& slopes) {
  if (!grad_out.same_shape(cached_input)) {
    fail("prelu_backward", "grad_out shape " + shape_str(grad_out.shape()) +
                               " != input shape " +
                               shape_str(cached_input.shape()));
  }
  int c = cached_input.dim(cached_input.rank() - 1);
  if (slopes.rank() != 1 || slopes.dim(0) != c) {
    fail("prelu_backward", "slopes shape " + shape_str(slopes.shape()) +
                               ", expected (" + std::to_string(c) + ")");
  }
  PreluGrads grads{Tensor::zeros_like(cached_input), Tensor({c})};
  std::size_t cells = cached_input.size() / static_cast<std::size_t>(c);
  const double* x = cached_input.data();
  const double* g = grad_out.data();
  double* gi = grads.grad_input.data();
  for (std::size_t i = 0; i < cells; ++i, x += c, g += c, gi += c) {
    for (int ch = 0; ch < c; ++ch) {
      if (x[ch] >= 0.0) {
        gi[ch] = g[ch];
      } else {
        gi[ch] = slopes[ch] * g[ch];
        grads.grad_slopes[ch] += g[ch] * x[ch];
      }
    }
  }
  return grads;
}

}  // namespace demnet

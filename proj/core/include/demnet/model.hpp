#ifndef DEMNET_MODEL_HPP
#define DEMNET_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "demnet/tensor.hpp"
#include "demnet/tensor_ops.hpp"

namespace demnet {

enum class LayerKind { CONV, TCONV, MAXPOOL, ACTIVATION };
enum class Activation { RELU, PRELU, LINEAR };

/// One named stage: a (t)conv with fused activation, or a max pool.
struct LayerDef {
  std::string name;
  LayerKind kind = LayerKind::CONV;
  ConvSpec spec;  // CONV / TCONV
  int pool = 0;   // MAXPOOL window == stride
  Activation activation = Activation::LINEAR;
};

/// The full estimator stack, input (140,140,2) to output (140,140,1):
/// a strided encoder down to 27x27x128 and a transposed-conv decoder
/// back to full resolution. 12 weighted layers plus one max pool.
std::vector<LayerDef> build_demnet();

/// Expected input geometry for the stack above.
inline constexpr int kInputSize = 140;
inline constexpr int kInputChannels = 2;

struct LayerParams {
  Tensor weights;  // conv [kh,kw,Cin,Cout]; tconv [kh,kw,Cout,Cin]
  Tensor bias;     // [Cout]
  Tensor slopes;   // [Cout], PReLU stages only
};

struct ModelParams {
  std::vector<LayerDef> defs;
  std::vector<LayerParams> layers;  // parallel to defs
  std::uint64_t init_seed = 0;
  /// When nonzero, forward() rejects inputs that are not
  /// (input_h, input_w, first-layer channels).
  int input_h = 0;
  int input_w = 0;
};

/// He-normal weights (std = sqrt(2/fan_in), fan_in = kh*kw*Cin) for
/// ReLU/PReLU stages, Glorot-normal for linear stages, zero biases,
/// slopes 0.25. One seeded stream consumed in layer order.
ModelParams init_params(const std::vector<LayerDef>& defs, std::uint64_t seed);

/// init_params(build_demnet(), seed) with the 140x140 input constraint.
ModelParams demnet_model(std::uint64_t seed);

/// Total trainable scalar count (weights + biases + slopes).
std::size_t param_count(const ModelParams& params);

/// Flat tensor views in a fixed order (per layer: weights, bias, slopes
/// where present); the order contract shared by optimizer and checkpoint.
std::vector<Tensor*> trainable_tensors(ModelParams& params);
std::vector<const Tensor*> trainable_tensors(const ModelParams& params);
std::vector<std::string> trainable_names(const ModelParams& params);

enum class RunMode { TRAIN, INFER };

/// Per-stage activations retained by a TRAIN forward for the backward
/// pass. INFER passes keep nothing.
struct ForwardCache {
  std::vector<Tensor> inputs;  // stage inputs
  /// Stage outputs before the fused activation (the plain stage output
  /// where none applies), one per stage.
  std::vector<Tensor> preact;
  std::vector<std::vector<std::int64_t>> argmax;   // max pool source indices
  std::vector<int> output_shape;
};

/// Runs the stack. mode TRAIN requires a cache pointer; INFER ignores it.
Tensor forward(const ModelParams& params, const Tensor& input, RunMode mode,
               ForwardCache* cache = nullptr);

/// Gradient tensors, shaped exactly like the corresponding parameters.
struct ParamGrads {
  std::vector<LayerParams> layers;
};

ParamGrads make_zero_grads(const ModelParams& params);
std::vector<const Tensor*> grad_tensors(const ParamGrads& grads,
                                        const ModelParams& params);

/// Reverse pass from grad wrt the output DEM. Adds the L2 term 2*lambda*w
/// to every conv/tconv weight gradient (biases and slopes excluded).
ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const Tensor& grad_dem, double lambda);

/// lambda * sum(w^2) over conv/tconv weights only.
double l2_penalty(const ModelParams& params, double lambda);

}  // namespace demnet

#endif  // DEMNET_MODEL_HPP

#include "demnet/model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "demnet/rng.hpp"

namespace demnet {

namespace {

LayerDef conv(std::string name, int k, int c_in, int c_out, Padding pad,
              Activation act) {
  LayerDef def;
  def.name = std::move(name);
  def.kind = LayerKind::CONV;
  def.spec.kernel_h = def.spec.kernel_w = k;
  def.spec.in_channels = c_in;
  def.spec.out_channels = c_out;
  def.spec.padding = pad;
  def.activation = act;
  return def;
}

LayerDef tconv(std::string name, int k, int c_in, int c_out, int stride,
               int output_padding, Activation act) {
  LayerDef def;
  def.name = std::move(name);
  def.kind = LayerKind::TCONV;
  def.spec.kernel_h = def.spec.kernel_w = k;
  def.spec.in_channels = c_in;
  def.spec.out_channels = c_out;
  def.spec.stride_h = def.spec.stride_w = stride;
  def.spec.padding = Padding::VALID;
  def.spec.output_padding = output_padding;
  def.activation = act;
  return def;
}

LayerDef maxpool(std::string name, int pool) {
  LayerDef def;
  def.name = std::move(name);
  def.kind = LayerKind::MAXPOOL;
  def.pool = pool;
  return def;
}

}  // namespace

std::vector<LayerDef> build_demnet() {
  using A = Activation;
  std::vector<LayerDef> defs;
  defs.push_back(conv("Conv1", 3, 2, 64, Padding::SAME, A::RELU));
  defs.push_back(conv("Conv2", 5, 64, 64, Padding::SAME, A::RELU));
  defs.push_back(maxpool("MaxPool", 4));
  defs.push_back(conv("Conv3", 3, 64, 128, Padding::VALID, A::RELU));
  defs.push_back(conv("Conv4", 3, 128, 128, Padding::VALID, A::RELU));
  defs.push_back(conv("Conv5", 3, 128, 128, Padding::VALID, A::RELU));
  defs.push_back(conv("Conv6", 3, 128, 128, Padding::VALID, A::LINEAR));
  defs.push_back(tconv("T-Conv1", 3, 128, 128, 1, 0, A::PRELU));
  defs.push_back(tconv("T-Conv2", 3, 128, 64, 1, 0, A::PRELU));
  defs.push_back(tconv("T-Conv3", 3, 64, 64, 1, 0, A::PRELU));
  defs.push_back(tconv("T-Conv3b", 3, 64, 32, 1, 0, A::PRELU));
  defs.push_back(tconv("T-Conv4", 3, 32, 32, 4, 1, A::PRELU));
  defs.push_back(conv("ConvOutput", 3, 32, 1, Padding::SAME, A::LINEAR));
  return defs;
}

ModelParams init_params(const std::vector<LayerDef>& defs,
                        std::uint64_t seed) {
  ModelParams params;
  params.defs = defs;
  params.init_seed = seed;
  params.layers.resize(defs.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < defs.size(); ++i) {
    const LayerDef& def = defs[i];
    if (def.kind == LayerKind::MAXPOOL) continue;
    const ConvSpec& s = def.spec;
    LayerParams& lp = params.layers[i];
    if (def.kind == LayerKind::CONV) {
      lp.weights = Tensor({s.kernel_h, s.kernel_w, s.in_channels,
                           s.out_channels});
    } else {
      lp.weights = Tensor({s.kernel_h, s.kernel_w, s.out_channels,
                           s.in_channels});
    }
    double fan_in = static_cast<double>(s.kernel_h) * s.kernel_w *
                    s.in_channels;
    double fan_out = static_cast<double>(s.kernel_h) * s.kernel_w *
                     s.out_channels;
    double std_dev = def.activation == Activation::LINEAR
                         ? std::sqrt(2.0 / (fan_in + fan_out))
                         : std::sqrt(2.0 / fan_in);
    for (std::size_t j = 0; j < lp.weights.size(); ++j) {
      lp.weights[j] = std_dev * rng.normal();
    }
    lp.bias = Tensor({s.out_channels});
    if (def.activation == Activation::PRELU) {
      lp.slopes = Tensor({s.out_channels});
      lp.slopes.fill(0.25);
    }
  }
  return params;
}

ModelParams demnet_model(std::uint64_t seed) {
  ModelParams params = init_params(build_demnet(), seed);
  params.input_h = kInputSize;
  params.input_w = kInputSize;
  return params;
}

std::size_t param_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const LayerParams& lp : params.layers) {
    n += lp.weights.size() + lp.bias.size() + lp.slopes.size();
  }
  return n;
}

namespace {

template <typename Params, typename TensorPtr>
void collect_tensors(Params& params, std::vector<TensorPtr>& out) {
  for (auto& lp : params.layers) {
    if (!lp.weights.empty()) out.push_back(&lp.weights);
    if (!lp.bias.empty()) out.push_back(&lp.bias);
    if (!lp.slopes.empty()) out.push_back(&lp.slopes);
  }
}

}  // namespace

std::vector<Tensor*> trainable_tensors(ModelParams& params) {
  std::vector<Tensor*> out;
  collect_tensors(params, out);
  return out;
}

std::vector<const Tensor*> trainable_tensors(const ModelParams& params) {
  std::vector<const Tensor*> out;
  collect_tensors(params, out);
  return out;
}

std::vector<std::string> trainable_names(const ModelParams& params) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < params.defs.size(); ++i) {
    const LayerParams& lp = params.layers[i];
    const std::string& base = params.defs[i].name;
    if (!lp.weights.empty()) names.push_back(base + "/weights");
    if (!lp.bias.empty()) names.push_back(base + "/bias");
    if (!lp.slopes.empty()) names.push_back(base + "/slopes");
  }
  return names;
}

Tensor forward(const ModelParams& params, const Tensor& input, RunMode mode,
               ForwardCache* cache) {
  if (params.defs.size() != params.layers.size()) {
    throw std::invalid_argument("forward: defs/layers size mismatch");
  }
  if (input.rank() != 3) {
    throw std::invalid_argument("forward: input rank must be 3, got " +
                                std::to_string(input.rank()));
  }
  if (params.input_h > 0 &&
      (input.dim(0) != params.input_h || input.dim(1) != params.input_w)) {
    throw std::invalid_argument(
        "forward: input shape " + shape_str(input.shape()) + ", expected (" +
        std::to_string(params.input_h) + ", " + std::to_string(params.input_w) +
        ", " + std::to_string(kInputChannels) + ")");
  }
  bool trace = mode == RunMode::TRAIN;
  if (trace && cache == nullptr) {
    throw std::invalid_argument("forward: TRAIN mode requires a cache");
  }
  if (trace) {
    cache->inputs.assign(params.defs.size(), Tensor());
    cache->preact.assign(params.defs.size(), Tensor());
    cache->argmax.assign(params.defs.size(), {});
  }

  Tensor cur = input;
  for (std::size_t i = 0; i < params.defs.size(); ++i) {
    const LayerDef& def = params.defs[i];
    const LayerParams& lp = params.layers[i];
    if (trace) cache->inputs[i] = cur;
    switch (def.kind) {
      case LayerKind::CONV:
        cur = conv2d_forward(cur, lp.weights, lp.bias, def.spec);
        break;
      case LayerKind::TCONV:
        cur = tconv2d_forward(cur, lp.weights, lp.bias, def.spec);
        break;
      case LayerKind::MAXPOOL: {
        MaxPoolResult res = maxpool_forward(cur, def.pool, def.pool);
        cur = std::move(res.output);
        if (trace) cache->argmax[i] = std::move(res.argmax);
        break;
      }
      case LayerKind::ACTIVATION:
        break;  // standalone activations are not used by this stack
    }
    if (trace) cache->preact[i] = cur;
    if (def.activation != Activation::LINEAR) {
      cur = def.activation == Activation::RELU ? relu(cur)
                                               : prelu(cur, lp.slopes);
    }
  }
  if (trace) cache->output_shape = cur.shape();
  return cur;
}

ParamGrads make_zero_grads(const ModelParams& params) {
  ParamGrads grads;
  grads.layers.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const LayerParams& lp = params.layers[i];
    if (!lp.weights.empty()) {
      grads.layers[i].weights = Tensor::zeros_like(lp.weights);
    }
    if (!lp.bias.empty()) grads.layers[i].bias = Tensor::zeros_like(lp.bias);
    if (!lp.slopes.empty()) {
      grads.layers[i].slopes = Tensor::zeros_like(lp.slopes);
    }
  }
  return grads;
}

std::vector<const Tensor*> grad_tensors(const ParamGrads& grads,
                                        const ModelParams& params) {
  if (grads.layers.size() != params.layers.size()) {
    throw std::invalid_argument("grad_tensors: layer count mismatch");
  }
  std::vector<const Tensor*> out;
  collect_tensors(grads, out);
  return out;
}

ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const Tensor& grad_dem, double lambda) {
  if (cache.inputs.size() != params.defs.size()) {
    throw std::invalid_argument(
        "backward: cache does not match the model (stage count " +
        std::to_string(cache.inputs.size()) + " vs " +
        std::to_string(params.defs.size()) + ")");
  }
  if (!cache.output_shape.empty() && grad_dem.shape() != cache.output_shape) {
    throw std::invalid_argument("backward: grad shape " +
                                shape_str(grad_dem.shape()) +
                                " != forward output shape " +
                                shape_str(cache.output_shape));
  }

  ParamGrads grads = make_zero_grads(params);
  Tensor grad = grad_dem;
  for (std::size_t idx = params.defs.size(); idx-- > 0;) {
    const LayerDef& def = params.defs[idx];
    const LayerParams& lp = params.layers[idx];
    if (def.activation == Activation::RELU) {
      grad = relu_backward(grad, cache.preact[idx]);
    } else if (def.activation == Activation::PRELU) {
      PreluGrads pg = prelu_backward(grad, cache.preact[idx], lp.slopes);
      grad = std::move(pg.grad_input);
      grads.layers[idx].slopes = std::move(pg.grad_slopes);
    }
    switch (def.kind) {
      case LayerKind::CONV: {
        ConvGrads cg =
            conv2d_backward(grad, cache.inputs[idx], lp.weights, def.spec);
        grads.layers[idx].weights = std::move(cg.grad_weights);
        grads.layers[idx].bias = std::move(cg.grad_bias);
        grad = std::move(cg.grad_input);
        break;
      }
      case LayerKind::TCONV: {
        ConvGrads cg =
            tconv2d_backward(grad, cache.inputs[idx], lp.weights, def.spec);
        grads.layers[idx].weights = std::move(cg.grad_weights);
        grads.layers[idx].bias = std::move(cg.grad_bias);
        grad = std::move(cg.grad_input);
        break;
      }
      case LayerKind::MAXPOOL:
        grad = maxpool_backward(grad, cache.argmax[idx],
                                cache.inputs[idx].shape());
        break;
      case LayerKind::ACTIVATION:
        break;
    }
  }

  if (lambda != 0.0) {
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
      const Tensor& w = params.layers[i].weights;
      Tensor& gw = grads.layers[i].weights;
      for (std::size_t j = 0; j < w.size(); ++j) {
        gw[j] += 2.0 * lambda * w[j];
      }
    }
  }
  return grads;
}

double l2_penalty(const ModelParams& params, double lambda) {
  double sum = 0.0;
  for (const LayerParams& lp : params.layers) {
    for (std::size_t j = 0; j < lp.weights.size(); ++j) {
      sum += lp.weights[j] * lp.weights[j];
    }
  }
  return lambda * sum;
}

}  // namespace demnet

#ifndef DEMNET_OPTIMIZER_HPP
#define DEMNET_OPTIMIZER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "demnet/tensor.hpp"

namespace demnet {

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates, one (m, v) pair per parameter tensor, plus the shared
/// step counter. The tensor list order is fixed by the caller and must be
/// stable across save/load.
struct AdamState {
  AdamConfig config;
  std::uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

AdamState make_adam_state(const std::vector<const Tensor*>& params,
                          const AdamConfig& config);

/// One Adam step over all parameter tensors:
///   t += 1; m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g^2;
///   w -= alpha * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
/// epsilon sits outside the square root. Rejects shape mismatches and
/// non-finite gradients, naming the offending tensor.
void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state,
               const std::vector<std::string>& names);

}  // namespace demnet

#endif  // DEMNET_OPTIMIZER_HPP

#include "demnet/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace demnet {

AdamState make_adam_state(const std::vector<const Tensor*>& params,
                          const AdamConfig& config) {
  AdamState state;
  state.config = config;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const Tensor* p : params) {
    state.m.push_back(Tensor::zeros_like(*p));
    state.v.push_back(Tensor::zeros_like(*p));
  }
  return state;
}

void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state,
               const std::vector<std::string>& names) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != names.size()) {
    throw std::invalid_argument("adam_step: tensor list sizes disagree");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]) ||
        !params[i]->same_shape(state.m[i])) {
      throw std::invalid_argument("adam_step: shape mismatch for " + names[i]);
    }
    if (!grads[i]->all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient for " +
                               names[i]);
    }
  }

  state.t += 1;
  const AdamConfig& c = state.config;
  double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* w = params[i]->data();
    const double* g = grads[i]->data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    std::size_t n = params[i]->size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      double m_hat = m[j] / bc1;
      double v_hat = v[j] / bc2;
      w[j] -= c.alpha * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace demnet

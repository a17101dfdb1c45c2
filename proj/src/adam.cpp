#include "storex/adam.hpp"

#include <cmath>

#include "storex/errors.hpp"

namespace storex::nd {

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.emplace_back(p->rows(), p->cols());
      state.second_moment.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: parameter count changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = *params[i];
    if (!p.value.same_shape(state.first_moment[i]) || !p.grad.same_shape(p.value)) {
      throw ContractError("adam_step: shape drift for parameter " + std::to_string(i) + ": " +
                          p.value.shape_string() + " vs state " +
                          state.first_moment[i].shape_string());
    }
  }

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i]->value.data();
    auto grad = params[i]->grad.data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g;
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      if (c.weight_decay != 0.0) value[k] -= c.learning_rate * c.weight_decay * value[k];
      value[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace storex::nd

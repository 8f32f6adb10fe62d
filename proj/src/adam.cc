#include "casefold/adam.h"

#include <cmath>

namespace casefold::nn {

void adam_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, std::int64_t step,
                 const AdamConfig& config) {
  check_shape(param.same_shape(grad) && param.same_shape(m) && param.same_shape(v),
              "adam_update: param " + param.shape_string() + " grad " + grad.shape_string());
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  auto& p = param.data();
  const auto& g = grad.data();
  auto& mv = m.data();
  auto& vv = v.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    mv[i] = config.beta1 * mv[i] + (1.0 - config.beta1) * g[i];
    vv[i] = config.beta2 * vv[i] + (1.0 - config.beta2) * g[i] * g[i];
    const double m_hat = mv[i] / correction1;
    const double v_hat = vv[i] / correction2;
    p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void Adam::step(ParameterStore& store) {
  auto& params = store.params();
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const Parameter& p : params) {
      m_.emplace_back(p.value.rows(), p.value.cols());
      v_.emplace_back(p.value.rows(), p.value.cols());
    }
  }
  ++t_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    adam_update(params[i].value.mutable_data(), params[i].value.grad(), m_[i], v_[i], t_,
                config_);
  }
}

}  // namespace casefold::nn

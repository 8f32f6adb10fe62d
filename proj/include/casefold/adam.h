#ifndef CASEFOLD_ADAM_H_
#define CASEFOLD_ADAM_H_

#include <cstdint>
#include <vector>

#include "casefold/autodiff.h"
#include "casefold/layers.h"

namespace casefold::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update of a single tensor. `step` is the already
// incremented step counter (1 on the first update).
void adam_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, std::int64_t step,
                 const AdamConfig& config);

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Updates every trainable parameter of the store from its gradient.
  void step(ParameterStore& store);
  std::int64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace casefold::nn

#endif  // CASEFOLD_ADAM_H_

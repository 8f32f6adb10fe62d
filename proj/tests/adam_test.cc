#include "casefold/adam.h"

#include <cmath>

#include "doctest.h"

using namespace casefold;
using nn::Matrix;

TEST_CASE("first Adam step by hand") {
  Matrix theta = Matrix::from_rows({{1.0}});
  Matrix m(1, 1), v(1, 1);
  nn::adam_update(theta, Matrix::from_rows({{1.0}}), m, v, 1, nn::AdamConfig{});
  // m = 0.1, v = 0.001, both bias-corrected to 1.
  CHECK(std::abs(m(0, 0) - 0.1) < 1e-15);
  CHECK(std::abs(v(0, 0) - 0.001) < 1e-15);
  CHECK(std::abs(theta(0, 0) - (1.0 - 0.001 / (1.0 + 1e-8))) < 1e-12);
  CHECK(std::abs(theta(0, 0) - 0.9990) < 1e-7);
}

TEST_CASE("second step uses corrected moments") {
  Matrix theta = Matrix::from_rows({{0.0}});
  Matrix m(1, 1), v(1, 1);
  nn::AdamConfig cfg;
  nn::adam_update(theta, Matrix::from_rows({{2.0}}), m, v, 1, cfg);
  nn::adam_update(theta, Matrix::from_rows({{-1.0}}), m, v, 2, cfg);
  const double m2 = 0.9 * 0.2 + 0.1 * -1.0;
  const double v2 = 0.999 * 0.004 + 0.001 * 1.0;
  const double mhat = m2 / (1 - 0.81);
  const double vhat = v2 / (1 - 0.999 * 0.999);
  const double expected = -0.001 * 2.0 / (2.0 + 1e-8) - 0.001 * mhat / (std::sqrt(vhat) + 1e-8);
  CHECK(std::abs(theta(0, 0) - expected) < 1e-15);
}

TEST_CASE("optimizer skips frozen parameters") {
  nn::ParameterStore store;
  auto w = store.add("w", Matrix::from_rows({{1.0}}));
  auto frozen = store.add("f", Matrix::from_rows({{1.0}}), false);
  w.mutable_grad() = Matrix::from_rows({{1.0}});
  frozen.mutable_grad() = Matrix::from_rows({{1.0}});
  nn::Adam adam;
  adam.step(store);
  CHECK(adam.steps_taken() == 1);
  CHECK(w.data()(0, 0) < 1.0);
  CHECK(frozen.data()(0, 0) == 1.0);
}

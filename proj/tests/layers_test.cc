#include "casefold/layers.h"

#include <cmath>

#include "casefold/error.h"
#include "doctest.h"
#include "support/oracles.h"

using namespace casefold;
using nn::Matrix;
using nn::Value;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("parameter store") {
  nn::ParameterStore store;
  Rng rng(1);
  store.add_uniform("w", 3, 4, 0.5, rng);
  CHECK_THROWS_AS(store.add("w", Matrix(1, 1)), Error);
  for (double v : store.get("w").value.data().data()) {
    CHECK(v >= -0.5);
    CHECK(v <= 0.5);
  }
  Value b = store.add("b", Matrix(1, 2), false);
  CHECK_FALSE(store.get("b").trainable);

  auto snap = store.snapshot();
  store.get("w").value.node()->data.fill(7.0);
  store.restore(snap);
  CHECK(store.get("w").value.data() == snap[0]);
}

TEST_CASE("gradient clipping rescales the global norm") {
  nn::ParameterStore store;
  Value a = store.add("a", Matrix(1, 2));
  Value b = store.add("b", Matrix(1, 1));
  a.mutable_grad() = Matrix::from_rows({{3.0, 0.0}});
  b.mutable_grad() = Matrix::from_rows({{4.0}});
  CHECK(store.grad_norm() == doctest::Approx(5.0));
  store.clip_grad_norm(1.0);
  CHECK(store.grad_norm() == doctest::Approx(1.0));
  CHECK(a.grad()(0, 0) == doctest::Approx(0.6));
  store.clip_grad_norm(10.0);
  CHECK(store.grad_norm() == doctest::Approx(1.0));
}

TEST_CASE("lstm cell matches a scalar hand computation") {
  nn::ParameterStore store;
  Rng rng(3);
  auto cell = nn::make_lstm_cell(store, "c", 1, 1, rng);
  cell.input_weights.mutable_data() = Matrix::from_rows({{0.5}, {-0.3}, {0.8}, {0.1}});
  cell.recurrent_weights.mutable_data() = Matrix::from_rows({{0.2}, {0.4}, {-0.6}, {0.9}});
  CHECK(cell.bias.data() == Matrix::from_rows({{0.0, 1.0, 0.0, 0.0}}));
  const double x = 1.5, h0 = -0.5, c0 = 0.25;
  auto [h, c] = nn::lstm_cell(Value::constant(Matrix::from_rows({{x}})),
                              Value::constant(Matrix::from_rows({{h0}})),
                              Value::constant(Matrix::from_rows({{c0}})), cell);
  const double i = sigm(0.5 * x + 0.2 * h0);
  const double f = sigm(-0.3 * x + 0.4 * h0 + 1.0);
  const double g = std::tanh(0.8 * x - 0.6 * h0);
  const double o = sigm(0.1 * x + 0.9 * h0);
  const double c1 = f * c0 + i * g;
  CHECK(c.item() == doctest::Approx(c1).epsilon(1e-14));
  CHECK(h.item() == doctest::Approx(o * std::tanh(c1)).epsilon(1e-14));
}

TEST_CASE("lstm initialization bounds") {
  nn::ParameterStore store;
  Rng rng(5);
  auto cell = nn::make_lstm_cell(store, "c", 16, 4, rng);
  CHECK(cell.input_weights.rows() == 16);
  CHECK(cell.input_weights.cols() == 16);
  for (double v : cell.input_weights.data().data()) CHECK(std::abs(v) <= 0.25);
  for (double v : cell.recurrent_weights.data().data()) CHECK(std::abs(v) <= 0.5);
  CHECK(store.contains("c.input_weights"));
  CHECK(store.contains("c.recurrent_weights"));
  CHECK(store.contains("c.bias"));
}

TEST_CASE("padded batches equal separate runs") {
  nn::ParameterStore store;
  Rng rng(8);
  auto net = nn::make_bilstm(store, "net", 3, 4, 2, rng);
  const std::vector<std::size_t> lengths{4, 2, 1};
  std::vector<Matrix> seqs;
  for (std::size_t len : lengths) seqs.push_back(oracle::random_matrix(len, 3, rng));

  std::vector<Value> inputs;
  std::vector<std::vector<std::uint8_t>> mask(4, std::vector<std::uint8_t>(3, 0));
  for (std::size_t t = 0; t < 4; ++t) {
    Matrix step(3, 3, 99.0);  // padding garbage must not leak
    for (std::size_t b = 0; b < 3; ++b) {
      if (t < lengths[b]) {
        std::copy(seqs[b].row(t), seqs[b].row(t) + 3, step.row(b));
        mask[t][b] = 1;
      }
    }
    inputs.push_back(Value::constant(step));
  }
  auto batched = nn::run_bilstm(net, inputs, mask, nn::BiLstmOptions{});
  for (std::size_t b = 0; b < 3; ++b) {
    const Matrix single = nn::bilstm(Value::constant(seqs[b]), net, nn::BiLstmOptions{}).data();
    REQUIRE(single.rows() == lengths[b]);
    REQUIRE(single.cols() == 8);
    for (std::size_t t = 0; t < lengths[b]; ++t) {
      for (std::size_t k = 0; k < 8; ++k) {
        CHECK(batched.outputs[t].data()(b, k) == doctest::Approx(single(t, k)).epsilon(1e-12));
      }
    }
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(batched.forward_final.data()(b, k) ==
            doctest::Approx(single(lengths[b] - 1, k)).epsilon(1e-12));
      CHECK(batched.backward_final.data()(b, k) == doctest::Approx(single(0, 4 + k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dropout in the bilstm only acts in training") {
  nn::ParameterStore store;
  Rng rng(2);
  auto net = nn::make_bilstm(store, "net", 2, 3, 1, rng);
  Value seq = Value::constant(oracle::random_matrix(5, 2, rng));
  nn::BiLstmOptions eval;
  eval.dropout = 0.5;
  eval.recurrent_dropout = 0.5;
  const Matrix a = nn::bilstm(seq, net, eval).data();
  CHECK(a == nn::bilstm(seq, net, nn::BiLstmOptions{}).data());
  Rng drop(4);
  nn::BiLstmOptions train = eval;
  train.training = true;
  train.rng = &drop;
  CHECK(nn::bilstm(seq, net, train).data() != a);
}

TEST_CASE("dense layer") {
  nn::ParameterStore store;
  Rng rng(1);
  auto d = nn::make_dense(store, "out", 4, 3, rng);
  CHECK(d.weight.rows() == 3);
  CHECK(d.weight.cols() == 4);
  CHECK(nn::apply(d, Value::constant(Matrix(2, 4))).data() == Matrix(2, 3));
}

#include "casefold/layers.h"

#include <cmath>

#include "casefold/error.h"

namespace casefold::nn {

Value ParameterStore::add(std::string name, Matrix init, bool trainable) {
  if (contains(name)) throw UsageError("DuplicateParameter", "parameter '" + name + "' exists");
  Value v = Value::leaf(std::move(init));
  params_.push_back(Parameter{std::move(name), v, trainable});
  return v;
}

Value ParameterStore::add_uniform(std::string name, std::size_t rows, std::size_t cols,
                                  double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.uniform(-bound, bound);
  return add(std::move(name), std::move(m));
}

bool ParameterStore::contains(const std::string& name) const {
  for (const Parameter& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  for (const Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw UsageError("UnknownParameter", "no parameter named '" + name + "'");
}

void ParameterStore::zero_grad() {
  for (Parameter& p : params_) p.value.zero_grad();
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const Parameter& p : params_) {
    if (!p.trainable) continue;
    for (double g : p.value.grad().data()) sq += g * g;
  }
  return std::sqrt(sq);
}

void ParameterStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (!(norm > max_norm)) return;
  const double factor = max_norm / norm;
  for (Parameter& p : params_) {
    if (!p.trainable) continue;
    for (double& g : p.value.mutable_grad().data()) g *= factor;
  }
}

std::vector<Matrix> ParameterStore::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const Parameter& p : params_) out.push_back(p.value.data());
  return out;
}

void ParameterStore::restore(const std::vector<Matrix>& snapshot) {
  check_shape(snapshot.size() == params_.size(), "snapshot size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    check_shape(snapshot[i].same_shape(params_[i].value.data()), "snapshot shape mismatch");
    params_[i].value.mutable_data() = snapshot[i];
  }
}

LstmCell make_lstm_cell(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                        std::size_t hidden_size, Rng& rng) {
  check_shape(input_size > 0 && hidden_size > 0, "LSTM sizes must be positive");
  LstmCell cell;
  cell.input_size = input_size;
  cell.hidden_size = hidden_size;
  cell.input_weights = store.add_uniform(prefix + ".input_weights", 4 * hidden_size, input_size,
                                         std::sqrt(1.0 / static_cast<double>(input_size)), rng);
  cell.recurrent_weights =
      store.add_uniform(prefix + ".recurrent_weights", 4 * hidden_size, hidden_size,
                        std::sqrt(1.0 / static_cast<double>(hidden_size)), rng);
  Matrix bias(1, 4 * hidden_size);
  for (std::size_t j = hidden_size; j < 2 * hidden_size; ++j) bias(0, j) = 1.0;
  cell.bias = store.add(prefix + ".bias", std::move(bias));
  return cell;
}

std::pair<Value, Value> lstm_cell(const Value& x, const Value& h_prev, const Value& c_prev,
                                  const LstmCell& cell) {
  const std::size_t H = cell.hidden_size;
  check_shape(x.cols() == cell.input_size && h_prev.cols() == H && c_prev.cols() == H &&
                  h_prev.rows() == x.rows() && c_prev.rows() == x.rows(),
              "lstm_cell: x" + x.data().shape_string() + " h" + h_prev.data().shape_string() +
                  " c" + c_prev.data().shape_string());
  Value gates = add_row(add(matmul_nt(x, cell.input_weights),
                            matmul_nt(h_prev, cell.recurrent_weights)),
                        cell.bias);
  Value i = sigmoid(slice_cols(gates, 0, H));
  Value f = sigmoid(slice_cols(gates, H, 2 * H));
  Value g = tanh(slice_cols(gates, 2 * H, 3 * H));
  Value o = sigmoid(slice_cols(gates, 3 * H, 4 * H));
  Value c = add(mul(f, c_prev), mul(i, g));
  Value h = mul(o, tanh(c));
  return {h, c};
}

BiLstm make_bilstm(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                   std::size_t hidden_size, std::size_t num_layers, Rng& rng) {
  check_shape(num_layers > 0, "BiLSTM needs at least one layer");
  BiLstm net;
  std::size_t in = input_size;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    BiLstmLayer layer;
    layer.forward = make_lstm_cell(store, base + ".fwd", in, hidden_size, rng);
    layer.backward = make_lstm_cell(store, base + ".bwd", in, hidden_size, rng);
    net.layers.push_back(std::move(layer));
    in = 2 * hidden_size;
  }
  return net;
}

namespace {

bool all_set(const std::vector<std::uint8_t>& m) {
  for (std::uint8_t v : m) {
    if (!v) return false;
  }
  return true;
}

// Runs one direction; returns per-step states (indexed by time) and the
// state after the last processed step.
std::vector<Value> run_direction(const LstmCell& cell, std::span<const Value> inputs,
                                 const std::vector<std::vector<std::uint8_t>>& mask,
                                 bool reverse, const BiLstmOptions& options, Value* final_state) {
  const std::size_t T = inputs.size();
  const std::size_t B = inputs[0].rows();
  Value h = Value::constant(Matrix(B, cell.hidden_size));
  Value c = Value::constant(Matrix(B, cell.hidden_size));
  std::vector<Value> states(T);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reverse ? T - 1 - step : step;
    Value h_in = dropout(h, options.recurrent_dropout, options.training, options.rng);
    auto [h_new, c_new] = lstm_cell(inputs[t], h_in, c, cell);
    if (all_set(mask[t])) {
      h = h_new;
      c = c_new;
    } else {
      h = select_rows(mask[t], h_new, h);
      c = select_rows(mask[t], c_new, c);
    }
    states[t] = h;
  }
  *final_state = h;
  return states;
}

}  // namespace

BiLstmOutput run_bilstm(const BiLstm& net, std::span<const Value> inputs,
                        const std::vector<std::vector<std::uint8_t>>& mask,
                        const BiLstmOptions& options) {
  check_shape(!inputs.empty(), "run_bilstm: empty sequence");
  check_shape(mask.size() == inputs.size(), "run_bilstm: mask length differs from sequence");
  if (!(options.dropout >= 0.0 && options.dropout < 1.0 && options.recurrent_dropout >= 0.0 &&
        options.recurrent_dropout < 1.0)) {
    throw UsageError("InvalidDropout", "dropout rates must lie in [0, 1)");
  }
  for (const auto& m : mask) check_shape(m.size() == inputs[0].rows(), "run_bilstm: mask width");

  BiLstmOutput out;
  std::vector<Value> layer_inputs(inputs.begin(), inputs.end());
  for (const BiLstmLayer& layer : net.layers) {
    for (Value& x : layer_inputs) x = dropout(x, options.dropout, options.training, options.rng);
    auto fwd = run_direction(layer.forward, layer_inputs, mask, false, options, &out.forward_final);
    Value bwd_final;
    auto bwd = run_direction(layer.backward, layer_inputs, mask, true, options, &bwd_final);
    out.backward_final = bwd_final;
    std::vector<Value> next(layer_inputs.size());
    for (std::size_t t = 0; t < next.size(); ++t) {
      const Value pair[] = {fwd[t], bwd[t]};
      next[t] = concat_cols(pair);
    }
    layer_inputs = std::move(next);
  }
  out.outputs = std::move(layer_inputs);
  return out;
}

Value bilstm(const Value& sequence, const BiLstm& net, const BiLstmOptions& options) {
  const std::size_t T = sequence.rows();
  std::vector<Value> steps;
  steps.reserve(T);
  for (std::size_t t = 0; t < T; ++t) steps.push_back(slice_rows(sequence, t, t + 1));
  std::vector<std::vector<std::uint8_t>> mask(T, std::vector<std::uint8_t>{1});
  auto out = run_bilstm(net, steps, mask, options);
  return concat_rows(out.outputs);
}

Dense make_dense(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                 std::size_t output_size, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(input_size));
  Dense d;
  d.weight = store.add_uniform(prefix + ".weight", output_size, input_size, bound, rng);
  d.bias = store.add(prefix + ".bias", Matrix(1, output_size));
  return d;
}

}  // namespace casefold::nn

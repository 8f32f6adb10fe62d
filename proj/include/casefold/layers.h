#ifndef CASEFOLD_LAYERS_H_
#define CASEFOLD_LAYERS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "casefold/autodiff.h"
#include "casefold/rng.h"

namespace casefold::nn {

struct Parameter {
  std::string name;
  Value value;
  // Frozen parameters (static embeddings) are stored but never updated.
  bool trainable = true;
};

// Owns every parameter of a model, in creation order.
class ParameterStore {
 public:
  // Throws UsageError "DuplicateParameter" when the name is taken.
  Value add(std::string name, Matrix init, bool trainable = true);
  // Uniform in [-bound, bound].
  Value add_uniform(std::string name, std::size_t rows, std::size_t cols, double bound, Rng& rng);

  bool contains(const std::string& name) const;
  const Parameter& get(const std::string& name) const;
  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }

  void zero_grad();
  double grad_norm() const;
  // Rescales all gradients so their global L2 norm is at most max_norm.
  void clip_grad_norm(double max_norm);

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& snapshot);

 private:
  std::vector<Parameter> params_;
};

// Gate rows are stacked in the order input, forget, cell candidate, output.
struct LstmCell {
  Value input_weights;      // [4H x I]
  Value recurrent_weights;  // [4H x H]
  Value bias;               // [1 x 4H]
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
};

// Weights uniform in +-sqrt(1/fan_in); biases zero except the forget gate (1).
LstmCell make_lstm_cell(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                        std::size_t hidden_size, Rng& rng);

// One step for a batch: x [B x I], h_prev and c_prev [B x H]. Returns (h, c).
std::pair<Value, Value> lstm_cell(const Value& x, const Value& h_prev, const Value& c_prev,
                                  const LstmCell& cell);

struct BiLstmLayer {
  LstmCell forward;
  LstmCell backward;
};

struct BiLstm {
  std::vector<BiLstmLayer> layers;
  std::size_t hidden_size() const { return layers.front().forward.hidden_size; }
  std::size_t output_size() const { return 2 * hidden_size(); }
};

BiLstm make_bilstm(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                   std::size_t hidden_size, std::size_t num_layers, Rng& rng);

struct BiLstmOptions {
  double dropout = 0.0;
  double recurrent_dropout = 0.0;
  bool training = false;
  Rng* rng = nullptr;
};

struct BiLstmOutput {
  // One [B x 2H] value per timestep: forward state then backward state.
  std::vector<Value> outputs;
  // Last layer: forward state after the final unmasked step, and backward
  // state after reaching the first step. [B x H] each.
  Value forward_final;
  Value backward_final;
};

// Runs a stacked BiLSTM over time-major inputs (T values of [B x I]).
// mask[t][b] == 0 marks padding: the state is carried through unchanged, so
// padded steps affect neither direction. Dropout hits each layer's input and
// recurrent dropout hits h_prev (fresh mask per step); both only in training.
BiLstmOutput run_bilstm(const BiLstm& net, std::span<const Value> inputs,
                        const std::vector<std::vector<std::uint8_t>>& mask,
                        const BiLstmOptions& options);

// Single unpadded sequence [T x I] -> [T x 2H].
Value bilstm(const Value& sequence, const BiLstm& net, const BiLstmOptions& options);

struct Dense {
  Value weight;  // [O x I]
  Value bias;    // [1 x O]
};

Dense make_dense(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                 std::size_t output_size, Rng& rng);
inline Value apply(const Dense& dense, const Value& x) {
  return linear(x, dense.weight, dense.bias);
}

}  // namespace casefold::nn

#endif  // CASEFOLD_LAYERS_H_

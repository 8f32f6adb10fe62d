#ifndef CASEFOLD_AUTODIFF_H_
#define CASEFOLD_AUTODIFF_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "casefold/rng.h"

namespace casefold::nn {

// Dense row-major matrix of 64-bit floats. Vectors are 1xN, scalars 1x1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v);
  void add_in_place(const Matrix& o);
  Matrix transposed() const;
  std::string shape_string() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Gradient propagation for one node: receives the node's output gradient and
// one slot per input (nullptr when that input needs no gradient) to
// accumulate into.
using BackwardFn = std::function<void(const Matrix& grad_out, std::span<Matrix* const> grad_in)>;

struct Node;

// Handle to a node of the computation graph. Copies share the node.
class Value {
 public:
  Value() = default;

  static Value constant(Matrix data);
  // A differentiable leaf (a parameter or an input under test).
  static Value leaf(Matrix data);

  bool valid() const { return node_ != nullptr; }
  const Matrix& data() const;
  // Leaves only; used by optimizers and finite-difference checks.
  Matrix& mutable_data();
  const Matrix& grad() const;
  Matrix& mutable_grad();
  bool requires_grad() const;
  std::size_t rows() const { return data().rows(); }
  std::size_t cols() const { return data().cols(); }
  double item() const;

  // Reverse-mode sweep from this scalar (its gradient seeded with 1).
  // Gradients accumulate into every reachable differentiable node.
  void backward() const;
  void zero_grad() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Value(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Value make_op(Matrix data, std::vector<Value> inputs, BackwardFn backward);

  std::shared_ptr<Node> node_;
};

struct Node {
  Matrix data;
  Matrix grad;
  bool requires_grad = false;
  std::vector<Value> inputs;
  BackwardFn backward;
};

// Creates an operation node. If no input requires a gradient (or gradients
// are disabled on this thread) the result is a constant and the closure is
// dropped.
Value make_op(Matrix data, std::vector<Value> inputs, BackwardFn backward);

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool grad_enabled();

// --- operations ----------------------------------------------------------
// All throw UsageError "ShapeMismatch" on incompatible shapes.

Value matmul(const Value& a, const Value& b);
// x [N x I] times weight^T ([O x I]).
Value matmul_nt(const Value& x, const Value& weight);
// x [N x I] times weight^T ([O x I]) plus bias [1 x O] broadcast over rows.
Value linear(const Value& x, const Value& weight, const Value& bias);
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value scale(const Value& a, double factor);
// Elementwise product with a constant matrix (dropout masks).
Value mul_constant(const Value& a, const Matrix& factor);
// Adds a [1 x C] row to every row of a [N x C].
Value add_row(const Value& a, const Value& row);
Value sigmoid(const Value& a);
Value tanh(const Value& a);
Value concat_cols(std::span<const Value> parts);
Value concat_rows(std::span<const Value> parts);
Value slice_cols(const Value& a, std::size_t begin, std::size_t end);
Value slice_rows(const Value& a, std::size_t begin, std::size_t end);
// Row ids[i] of table, or a zero row where ids[i] < 0.
Value gather_rows(const Value& table, std::span<const int> ids);
// Row r from a when take_a[r] != 0, else from b.
Value select_rows(std::span<const std::uint8_t> take_a, const Value& a, const Value& b);
Value sum(const Value& a);
// Per-row log-sum-exp: [N x C] -> [N x 1].
Value logsumexp_rows(const Value& a);

// Mean over unmasked rows of -log softmax(logits)[row, target]. Throws
// UsageError "ClassOutOfRange" for targets outside [0, C). A fully masked
// input gives 0 with zero gradients.
Value softmax_cross_entropy(const Value& logits, std::span<const int> targets,
                            std::span<const std::uint8_t> mask);
// Same loss summed rather than averaged.
Value softmax_cross_entropy_sum(const Value& logits, std::span<const int> targets,
                                std::span<const std::uint8_t> mask);

// Inverted dropout. Identity when !training or rate == 0.
Value dropout(const Value& a, double rate, bool training, Rng* rng);

void check_shape(bool ok, const std::string& what);

}  // namespace casefold::nn

#endif  // CASEFOLD_AUTODIFF_H_

#include "casefold/autodiff.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <Eigen/Core>

#include "casefold/error.h"

namespace casefold::nn {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<RowMajor> view(Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}
Eigen::Map<const RowMajor> view(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

thread_local bool g_grad_enabled = true;

Matrix& ensure_grad(Node& node) {
  if (node.grad.empty() && !node.data.empty()) {
    node.grad = Matrix(node.data.rows(), node.data.cols());
  }
  return node.grad;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

Value unary(const Value& a, Matrix out, std::function<double(double x, double y)> dydx) {
  Matrix y = out;
  Matrix x = a.data();
  return make_op(std::move(out), {a},
                 [x = std::move(x), y = std::move(y), dydx = std::move(dydx)](
                     const Matrix& g, std::span<Matrix* const> in) {
                   Matrix& ga = *in[0];
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     ga.data()[i] += g.data()[i] * dydx(x.data()[i], y.data()[i]);
                   }
                 });
}

}  // namespace

void check_shape(bool ok, const std::string& what) {
  if (!ok) throw UsageError("ShapeMismatch", what);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  check_shape(data_.size() == rows * cols, "matrix data length does not match its shape");
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    check_shape(row.size() == c, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::add_in_place(const Matrix& o) {
  check_shape(same_shape(o), "add_in_place " + shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

std::string Matrix::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Value Value::constant(Matrix data) {
  auto node = std::make_shared<Node>();
  node->data = std::move(data);
  return Value(std::move(node));
}

Value Value::leaf(Matrix data) {
  auto node = std::make_shared<Node>();
  node->data = std::move(data);
  node->requires_grad = true;
  return Value(std::move(node));
}

const Matrix& Value::data() const { return node_->data; }
Matrix& Value::mutable_data() { return node_->data; }
const Matrix& Value::grad() const { return ensure_grad(*node_); }
Matrix& Value::mutable_grad() { return ensure_grad(*node_); }
bool Value::requires_grad() const { return node_->requires_grad; }

double Value::item() const {
  check_shape(data().size() == 1, "item() on non-scalar " + data().shape_string());
  return data().data()[0];
}

void Value::zero_grad() const {
  if (!node_->grad.empty()) node_->grad.fill(0.0);
}

void Value::backward() const {
  if (!node_->requires_grad) return;
  // Iterative post-order DFS yields a topological order (inputs first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].node().get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  Matrix& seed = ensure_grad(*node_);
  for (double& g : seed.data()) g += 1.0;

  std::vector<Matrix*> slots;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward) continue;
    slots.clear();
    for (const Value& input : node->inputs) {
      slots.push_back(input.requires_grad() ? &ensure_grad(*input.node()) : nullptr);
    }
    node->backward(node->grad, slots);
  }
}

Value make_op(Matrix data, std::vector<Value> inputs, BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->data = std::move(data);
  if (g_grad_enabled) {
    for (const Value& v : inputs) {
      if (v.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Value(std::move(node));
}

Value matmul(const Value& a, const Value& b) {
  const Matrix& A = a.data();
  const Matrix& B = b.data();
  check_shape(A.cols() == B.rows(),
              "matmul " + A.shape_string() + " x " + B.shape_string());
  Matrix out(A.rows(), B.cols());
  view(out).noalias() = view(A) * view(B);
  return make_op(std::move(out), {a, b}, [a, b](const Matrix& g, std::span<Matrix* const> in) {
    if (in[0]) view(*in[0]).noalias() += view(g) * view(b.data()).transpose();
    if (in[1]) view(*in[1]).noalias() += view(a.data()).transpose() * view(g);
  });
}

Value matmul_nt(const Value& x, const Value& weight) {
  const Matrix& X = x.data();
  const Matrix& W = weight.data();
  check_shape(X.cols() == W.cols(),
              "matmul_nt x" + X.shape_string() + " W" + W.shape_string());
  Matrix out(X.rows(), W.rows());
  view(out).noalias() = view(X) * view(W).transpose();
  return make_op(std::move(out), {x, weight},
                 [x, weight](const Matrix& g, std::span<Matrix* const> in) {
                   if (in[0]) view(*in[0]).noalias() += view(g) * view(weight.data());
                   if (in[1]) view(*in[1]).noalias() += view(g).transpose() * view(x.data());
                 });
}

Value linear(const Value& x, const Value& weight, const Value& bias) {
  const Matrix& X = x.data();
  const Matrix& W = weight.data();
  const Matrix& b = bias.data();
  check_shape(X.cols() == W.cols() && b.rows() == 1 && b.cols() == W.rows(),
              "linear x" + X.shape_string() + " W" + W.shape_string() + " b" +
                  b.shape_string());
  Matrix out(X.rows(), W.rows());
  auto o = view(out);
  o.noalias() = view(X) * view(W).transpose();
  o.rowwise() += view(b).row(0);
  return make_op(std::move(out), {x, weight, bias},
                 [x, weight](const Matrix& g, std::span<Matrix* const> in) {
                   if (in[0]) view(*in[0]).noalias() += view(g) * view(weight.data());
                   if (in[1]) view(*in[1]).noalias() += view(g).transpose() * view(x.data());
                   if (in[2]) view(*in[2]).row(0) += view(g).colwise().sum();
                 });
}

Value add(const Value& a, const Value& b) {
  check_shape(a.data().same_shape(b.data()),
              "add " + a.data().shape_string() + " vs " + b.data().shape_string());
  Matrix out = a.data();
  out.add_in_place(b.data());
  return make_op(std::move(out), {a, b}, [](const Matrix& g, std::span<Matrix* const> in) {
    if (in[0]) in[0]->add_in_place(g);
    if (in[1]) in[1]->add_in_place(g);
  });
}

Value sub(const Value& a, const Value& b) {
  check_shape(a.data().same_shape(b.data()),
              "sub " + a.data().shape_string() + " vs " + b.data().shape_string());
  Matrix out = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data().data()[i];
  return make_op(std::move(out), {a, b}, [](const Matrix& g, std::span<Matrix* const> in) {
    if (in[0]) in[0]->add_in_place(g);
    if (in[1]) {
      for (std::size_t i = 0; i < g.size(); ++i) in[1]->data()[i] -= g.data()[i];
    }
  });
}

Value mul(const Value& a, const Value& b) {
  check_shape(a.data().same_shape(b.data()),
              "mul " + a.data().shape_string() + " vs " + b.data().shape_string());
  Matrix out = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data().data()[i];
  return make_op(std::move(out), {a, b}, [a, b](const Matrix& g, std::span<Matrix* const> in) {
    const auto& av = a.data().data();
    const auto& bv = b.data().data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in[0]) in[0]->data()[i] += g.data()[i] * bv[i];
      if (in[1]) in[1]->data()[i] += g.data()[i] * av[i];
    }
  });
}

Value scale(const Value& a, double factor) {
  Matrix out = a.data();
  for (double& v : out.data()) v *= factor;
  return make_op(std::move(out), {a}, [factor](const Matrix& g, std::span<Matrix* const> in) {
    for (std::size_t i = 0; i < g.size(); ++i) in[0]->data()[i] += g.data()[i] * factor;
  });
}

Value mul_constant(const Value& a, const Matrix& factor) {
  check_shape(a.data().same_shape(factor),
              "mul_constant " + a.data().shape_string() + " vs " + factor.shape_string());
  Matrix out = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= factor.data()[i];
  return make_op(std::move(out), {a}, [factor](const Matrix& g, std::span<Matrix* const> in) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      in[0]->data()[i] += g.data()[i] * factor.data()[i];
    }
  });
}

Value add_row(const Value& a, const Value& row) {
  const Matrix& A = a.data();
  const Matrix& R = row.data();
  check_shape(R.rows() == 1 && R.cols() == A.cols(),
              "add_row " + A.shape_string() + " + " + R.shape_string());
  Matrix out = A;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += R(0, c);
  }
  return make_op(std::move(out), {a, row}, [](const Matrix& g, std::span<Matrix* const> in) {
    if (in[0]) in[0]->add_in_place(g);
    if (in[1]) {
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) (*in[1])(0, c) += g(r, c);
      }
    }
  });
}

Value sigmoid(const Value& a) {
  Matrix out = a.data();
  for (double& v : out.data()) v = stable_sigmoid(v);
  return unary(a, std::move(out), [](double, double y) { return y * (1.0 - y); });
}

Value tanh(const Value& a) {
  Matrix out = a.data();
  for (double& v : out.data()) v = std::tanh(v);
  return unary(a, std::move(out), [](double, double y) { return 1.0 - y * y; });
}

Value concat_cols(std::span<const Value> parts) {
  check_shape(!parts.empty(), "concat_cols of nothing");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Value& p : parts) {
    check_shape(p.rows() == rows, "concat_cols row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Value& p : parts) {
    offsets.push_back(offset);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(p.data().row(r), p.data().row(r) + p.cols(), out.row(r) + offset);
    }
    offset += p.cols();
  }
  return make_op(std::move(out), {parts.begin(), parts.end()},
                 [offsets](const Matrix& g, std::span<Matrix* const> in) {
                   for (std::size_t k = 0; k < in.size(); ++k) {
                     if (!in[k]) continue;
                     Matrix& gk = *in[k];
                     for (std::size_t r = 0; r < gk.rows(); ++r) {
                       const double* src = g.row(r) + offsets[k];
                       double* dst = gk.row(r);
                       for (std::size_t c = 0; c < gk.cols(); ++c) dst[c] += src[c];
                     }
                   }
                 });
}

Value concat_rows(std::span<const Value> parts) {
  check_shape(!parts.empty(), "concat_rows of nothing");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Value& p : parts) {
    check_shape(p.cols() == cols, "concat_rows column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> starts;
  std::size_t r0 = 0;
  for (const Value& p : parts) {
    starts.push_back(r0);
    std::copy(p.data().data().begin(), p.data().data().end(), out.row(r0));
    r0 += p.rows();
  }
  return make_op(std::move(out), {parts.begin(), parts.end()},
                 [starts](const Matrix& g, std::span<Matrix* const> in) {
                   for (std::size_t k = 0; k < in.size(); ++k) {
                     if (!in[k]) continue;
                     const double* src = g.row(starts[k]);
                     for (std::size_t i = 0; i < in[k]->size(); ++i) in[k]->data()[i] += src[i];
                   }
                 });
}

Value slice_cols(const Value& a, std::size_t begin, std::size_t end) {
  const Matrix& A = a.data();
  check_shape(begin <= end && end <= A.cols(), "slice_cols out of range");
  Matrix out(A.rows(), end - begin);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    std::copy(A.row(r) + begin, A.row(r) + end, out.row(r));
  }
  return make_op(std::move(out), {a}, [begin](const Matrix& g, std::span<Matrix* const> in) {
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double* dst = in[0]->row(r) + begin;
      const double* src = g.row(r);
      for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c];
    }
  });
}

Value slice_rows(const Value& a, std::size_t begin, std::size_t end) {
  const Matrix& A = a.data();
  check_shape(begin <= end && end <= A.rows(), "slice_rows out of range");
  Matrix out(end - begin, A.cols());
  std::copy(A.row(begin), A.row(begin) + out.size(), out.data().begin());
  return make_op(std::move(out), {a}, [begin](const Matrix& g, std::span<Matrix* const> in) {
    double* dst = in[0]->row(begin);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g.data()[i];
  });
}

Value gather_rows(const Value& table, std::span<const int> ids) {
  const Matrix& T = table.data();
  Matrix out(ids.size(), T.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0) continue;
    check_shape(static_cast<std::size_t>(ids[r]) < T.rows(), "gather_rows id out of range");
    std::copy(T.row(ids[r]), T.row(ids[r]) + T.cols(), out.row(r));
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make_op(std::move(out), {table},
                 [idx = std::move(idx)](const Matrix& g, std::span<Matrix* const> in) {
                   for (std::size_t r = 0; r < idx.size(); ++r) {
                     if (idx[r] < 0) continue;
                     double* dst = in[0]->row(idx[r]);
                     const double* src = g.row(r);
                     for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c];
                   }
                 });
}

Value select_rows(std::span<const std::uint8_t> take_a, const Value& a, const Value& b) {
  const Matrix& A = a.data();
  const Matrix& B = b.data();
  check_shape(A.same_shape(B) && take_a.size() == A.rows(), "select_rows shape mismatch");
  Matrix out = B;
  for (std::size_t r = 0; r < A.rows(); ++r) {
    if (take_a[r]) std::copy(A.row(r), A.row(r) + A.cols(), out.row(r));
  }
  std::vector<std::uint8_t> pick(take_a.begin(), take_a.end());
  return make_op(std::move(out), {a, b},
                 [pick = std::move(pick)](const Matrix& g, std::span<Matrix* const> in) {
                   for (std::size_t r = 0; r < g.rows(); ++r) {
                     Matrix* dst = pick[r] ? in[0] : in[1];
                     if (!dst) continue;
                     double* d = dst->row(r);
                     const double* s = g.row(r);
                     for (std::size_t c = 0; c < g.cols(); ++c) d[c] += s[c];
                   }
                 });
}

Value sum(const Value& a) {
  double total = 0.0;
  for (double v : a.data().data()) total += v;
  return make_op(Matrix(1, 1, total), {a}, [](const Matrix& g, std::span<Matrix* const> in) {
    const double gv = g(0, 0);
    for (double& d : in[0]->data()) d += gv;
  });
}

Value logsumexp_rows(const Value& a) {
  const Matrix& A = a.data();
  check_shape(A.cols() > 0, "logsumexp_rows of zero columns");
  Matrix out(A.rows(), 1);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    const double* row = A.row(r);
    const double m = *std::max_element(row, row + A.cols());
    double s = 0.0;
    for (std::size_t c = 0; c < A.cols(); ++c) s += std::exp(row[c] - m);
    out(r, 0) = m + std::log(s);
  }
  Matrix lse = out;
  return make_op(std::move(out), {a},
                 [a, lse = std::move(lse)](const Matrix& g, std::span<Matrix* const> in) {
                   const Matrix& A = a.data();
                   for (std::size_t r = 0; r < A.rows(); ++r) {
                     for (std::size_t c = 0; c < A.cols(); ++c) {
                       (*in[0])(r, c) += g(r, 0) * std::exp(A(r, c) - lse(r, 0));
                     }
                   }
                 });
}

namespace {

Value cross_entropy(const Value& logits, std::span<const int> targets,
                    std::span<const std::uint8_t> mask, bool average) {
  const Matrix& L = logits.data();
  check_shape(targets.size() == L.rows() && mask.size() == L.rows(),
              "softmax_cross_entropy: targets/mask length must equal rows " +
                  L.shape_string());
  std::size_t count = 0;
  for (std::size_t r = 0; r < L.rows(); ++r) {
    if (!mask[r]) continue;
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= L.cols()) {
      throw UsageError("ClassOutOfRange", "target " + std::to_string(targets[r]) +
                                              " outside [0, " + std::to_string(L.cols()) + ")");
    }
    ++count;
  }
  // Softmax probabilities kept for the backward pass.
  Matrix probs(L.rows(), L.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < L.rows(); ++r) {
    if (!mask[r]) continue;
    const double* row = L.row(r);
    const double m = *std::max_element(row, row + L.cols());
    double s = 0.0;
    for (std::size_t c = 0; c < L.cols(); ++c) s += std::exp(row[c] - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < L.cols(); ++c) probs(r, c) = std::exp(row[c] - lse);
    total += lse - row[targets[r]];
  }
  const double norm = (average && count > 0) ? 1.0 / static_cast<double>(count) : 1.0;
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<std::uint8_t> msk(mask.begin(), mask.end());
  return make_op(Matrix(1, 1, total * norm), {logits},
                 [probs = std::move(probs), tgt = std::move(tgt), msk = std::move(msk), norm](
                     const Matrix& g, std::span<Matrix* const> in) {
                   const double scale = g(0, 0) * norm;
                   for (std::size_t r = 0; r < probs.rows(); ++r) {
                     if (!msk[r]) continue;
                     double* d = in[0]->row(r);
                     for (std::size_t c = 0; c < probs.cols(); ++c) d[c] += scale * probs(r, c);
                     d[tgt[r]] -= scale;
                   }
                 });
}

}  // namespace

Value softmax_cross_entropy(const Value& logits, std::span<const int> targets,
                            std::span<const std::uint8_t> mask) {
  return cross_entropy(logits, targets, mask, true);
}

Value softmax_cross_entropy_sum(const Value& logits, std::span<const int> targets,
                                std::span<const std::uint8_t> mask) {
  return cross_entropy(logits, targets, mask, false);
}

Value dropout(const Value& a, double rate, bool training, Rng* rng) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw UsageError("InvalidDropout", "dropout rate must be below 1");
  if (rng == nullptr) throw UsageError("MissingRng", "training-mode dropout needs a generator");
  Matrix mask(a.rows(), a.cols());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.data()) m = rng->bernoulli(rate) ? 0.0 : keep_scale;
  return mul_constant(a, mask);
}

}  // namespace casefold::nn

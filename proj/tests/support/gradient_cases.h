#ifndef CASEFOLD_TESTS_GRADIENT_CASES_H_
#define CASEFOLD_TESTS_GRADIENT_CASES_H_

#include <functional>
#include <string>
#include <vector>

#include "casefold/autodiff.h"
#include "casefold/crf.h"
#include "casefold/layers.h"
#include "support/oracles.h"

namespace casefold::oracle {

struct GradCase {
  std::string name;
  double tolerance;
  // Builds a random instance and returns its worst relative gradient error.
  std::function<double(Rng&)> run;
};

namespace detail {

using nn::Matrix;
using nn::Value;

inline std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.uniform_index(hi - lo + 1);
}

// sum(out * R) for a fixed random R, so every output entry gets a distinct
// upstream gradient.
inline Value project(const Value& out, const Matrix& r) {
  return nn::sum(nn::mul(out, Value::constant(r)));
}

inline double check_unary(Rng& rng, const std::function<Value(const Value&)>& op) {
  Value a = Value::leaf(random_matrix(dim(rng, 1, 4), dim(rng, 1, 4), rng, 2.0));
  Matrix probe = op(a).data();
  Matrix r = random_matrix(probe.rows(), probe.cols(), rng);
  return gradient_check([&] { return project(op(a), r); }, {a});
}

inline double check_binary(Rng& rng, std::size_t ar, std::size_t ac, std::size_t br,
                           std::size_t bc,
                           const std::function<Value(const Value&, const Value&)>& op) {
  Value a = Value::leaf(random_matrix(ar, ac, rng));
  Value b = Value::leaf(random_matrix(br, bc, rng));
  Matrix probe = op(a, b).data();
  Matrix r = random_matrix(probe.rows(), probe.cols(), rng);
  return gradient_check([&] { return project(op(a, b), r); }, {a, b});
}

inline std::vector<Value> lstm_leaves(const nn::LstmCell& cell) {
  return {cell.input_weights, cell.recurrent_weights, cell.bias};
}

}  // namespace detail

inline std::vector<GradCase> gradient_cases() {
  using namespace detail;
  constexpr double kLinear = 1e-6;
  constexpr double kNonlinear = 1e-4;
  std::vector<GradCase> cases;

  cases.push_back({"add", kLinear, [](Rng& rng) {
                     auto r = dim(rng, 1, 4), c = dim(rng, 1, 4);
                     return check_binary(rng, r, c, r, c, nn::add);
                   }});
  cases.push_back({"sub", kLinear, [](Rng& rng) {
                     auto r = dim(rng, 1, 4), c = dim(rng, 1, 4);
                     return check_binary(rng, r, c, r, c, nn::sub);
                   }});
  cases.push_back({"mul", kLinear, [](Rng& rng) {
                     auto r = dim(rng, 1, 4), c = dim(rng, 1, 4);
                     return check_binary(rng, r, c, r, c, nn::mul);
                   }});
  cases.push_back({"scale", kLinear, [](Rng& rng) {
                     const double f = rng.uniform(-3, 3);
                     return check_unary(rng, [f](const Value& a) { return nn::scale(a, f); });
                   }});
  cases.push_back({"mul_constant", kLinear, [](Rng& rng) {
                     auto r = dim(rng, 1, 4), c = dim(rng, 1, 4);
                     Matrix k = random_matrix(r, c, rng);
                     Value a = Value::leaf(random_matrix(r, c, rng));
                     Matrix p = random_matrix(r, c, rng);
                     return gradient_check([&] { return project(nn::mul_constant(a, k), p); }, {a});
                   }});
  cases.push_back({"add_row", kLinear, [](Rng& rng) {
                     auto r = dim(rng, 1, 4), c = dim(rng, 1, 4);
                     return check_binary(rng, r, c, 1, c, nn::add_row);
                   }});
  cases.push_back({"matmul", kLinear, [](Rng& rng) {
                     auto m = dim(rng, 1, 4), k = dim(rng, 1, 4), n = dim(rng, 1, 4);
                     return check_binary(rng, m, k, k, n, nn::matmul);
                   }});
  cases.push_back({"matmul_nt", kLinear, [](Rng& rng) {
                     auto m = dim(rng, 1, 4), k = dim(rng, 1, 4), n = dim(rng, 1, 4);
                     return check_binary(rng, m, k, n, k, nn::matmul_nt);
                   }});
  cases.push_back({"linear", kLinear, [](Rng& rng) {
                     auto n = dim(rng, 1, 4), i = dim(rng, 1, 4), o = dim(rng, 1, 4);
                     Value x = Value::leaf(random_matrix(n, i, rng));
                     Value w = Value::leaf(random_matrix(o, i, rng));
                     Value b = Value::leaf(random_matrix(1, o, rng));
                     Matrix p = random_matrix(n, o, rng);
                     return gradient_check([&] { return project(nn::linear(x, w, b), p); },
                                           {x, w, b});
                   }});
  cases.push_back({"concat_cols", kLinear, [](Rng& rng) {
                     auto r = dim(rng, 1, 4);
                     return check_binary(rng, r, dim(rng, 1, 3), r, dim(rng, 1, 3),
                                         [](const Value& a, const Value& b) {
                                           const Value parts[] = {a, b, a};
                                           return nn::concat_cols(parts);
                                         });
                   }});
  cases.push_back({"concat_rows", kLinear, [](Rng& rng) {
                     auto c = dim(rng, 1, 4);
                     return check_binary(rng, dim(rng, 1, 3), c, dim(rng, 1, 3), c,
                                         [](const Value& a, const Value& b) {
                                           const Value parts[] = {b, a, b};
                                           return nn::concat_rows(parts);
                                         });
                   }});
  cases.push_back({"slice_cols", kLinear, [](Rng& rng) {
                     Value a = Value::leaf(random_matrix(dim(rng, 1, 3), dim(rng, 2, 5), rng));
                     auto b = rng.uniform_index(a.cols() - 1);
                     auto e = b + 1 + rng.uniform_index(a.cols() - b - 1);
                     Matrix p = random_matrix(a.rows(), e - b, rng);
                     return gradient_check([&] { return project(nn::slice_cols(a, b, e), p); },
                                           {a});
                   }});
  cases.push_back({"slice_rows", kLinear, [](Rng& rng) {
                     Value a = Value::leaf(random_matrix(dim(rng, 2, 5), dim(rng, 1, 3), rng));
                     auto b = rng.uniform_index(a.rows() - 1);
                     auto e = b + 1 + rng.uniform_index(a.rows() - b - 1);
                     Matrix p = random_matrix(e - b, a.cols(), rng);
                     return gradient_check([&] { return project(nn::slice_rows(a, b, e), p); },
                                           {a});
                   }});
  cases.push_back({"gather_rows", kLinear, [](Rng& rng) {
                     Value t = Value::leaf(random_matrix(dim(rng, 2, 5), dim(rng, 1, 3), rng));
                     std::vector<int> ids;
                     for (std::size_t i = 0; i < 6; ++i) {
                       ids.push_back(static_cast<int>(rng.uniform_index(t.rows() + 1)) - 1);
                     }
                     Matrix p = random_matrix(ids.size(), t.cols(), rng);
                     return gradient_check([&] { return project(nn::gather_rows(t, ids), p); },
                                           {t});
                   }});
  cases.push_back({"select_rows", kLinear, [](Rng& rng) {
                     auto r = dim(rng, 1, 5), c = dim(rng, 1, 3);
                     std::vector<std::uint8_t> take(r);
                     for (auto& v : take) v = rng.bernoulli(0.5);
                     return check_binary(rng, r, c, r, c, [take](const Value& a, const Value& b) {
                       return nn::select_rows(take, a, b);
                     });
                   }});
  cases.push_back({"sum", kLinear, [](Rng& rng) {
                     Value a = Value::leaf(random_matrix(dim(rng, 1, 4), dim(rng, 1, 4), rng));
                     const double k = rng.uniform(-2, 2);
                     return gradient_check([&] { return nn::scale(nn::sum(a), k); }, {a});
                   }});
  cases.push_back({"dropout", kLinear, [](Rng& rng) {
                     const std::uint64_t seed = rng.next();
                     return check_unary(rng, [seed](const Value& a) {
                       Rng mask_rng(seed);
                       return nn::dropout(a, 0.4, true, &mask_rng);
                     });
                   }});
  cases.push_back({"sigmoid", kNonlinear, [](Rng& rng) { return check_unary(rng, nn::sigmoid); }});
  cases.push_back({"tanh", kNonlinear, [](Rng& rng) { return check_unary(rng, nn::tanh); }});
  cases.push_back({"logsumexp_rows", kNonlinear,
                   [](Rng& rng) { return check_unary(rng, nn::logsumexp_rows); }});
  auto softmax_case = [](bool summed) {
    return [summed](Rng& rng) {
      auto n = dim(rng, 1, 5), c = dim(rng, 2, 5);
      Value logits = Value::leaf(random_matrix(n, c, rng, 3.0));
      std::vector<int> targets(n);
      std::vector<std::uint8_t> mask(n);
      for (std::size_t i = 0; i < n; ++i) {
        targets[i] = static_cast<int>(rng.uniform_index(c));
        mask[i] = i == 0 || rng.bernoulli(0.7);
      }
      return gradient_check(
          [&] {
            return summed ? nn::softmax_cross_entropy_sum(logits, targets, mask)
                          : nn::softmax_cross_entropy(logits, targets, mask);
          },
          {logits});
    };
  };
  cases.push_back({"softmax_cross_entropy", kNonlinear, softmax_case(false)});
  cases.push_back({"softmax_cross_entropy_sum", kNonlinear, softmax_case(true)});
  cases.push_back({"lstm_cell", kNonlinear, [](Rng& rng) {
                     auto b = dim(rng, 1, 3), i = dim(rng, 1, 3), h = dim(rng, 1, 3);
                     nn::ParameterStore store;
                     auto cell = nn::make_lstm_cell(store, "cell", i, h, rng);
                     Value x = Value::leaf(random_matrix(b, i, rng));
                     Value h0 = Value::leaf(random_matrix(b, h, rng));
                     Value c0 = Value::leaf(random_matrix(b, h, rng));
                     Matrix ph = random_matrix(b, h, rng), pc = random_matrix(b, h, rng);
                     auto leaves = lstm_leaves(cell);
                     leaves.insert(leaves.end(), {x, h0, c0});
                     return gradient_check(
                         [&] {
                           auto [h1, c1] = nn::lstm_cell(x, h0, c0, cell);
                           return nn::add(project(h1, ph), project(c1, pc));
                         },
                         leaves);
                   }});
  cases.push_back({"bilstm", kNonlinear, [](Rng& rng) {
                     const std::size_t T = dim(rng, 1, 4), B = dim(rng, 1, 3);
                     const std::size_t I = dim(rng, 1, 3), H = dim(rng, 1, 3);
                     nn::ParameterStore store;
                     auto net = nn::make_bilstm(store, "net", I, H, dim(rng, 1, 2), rng);
                     std::vector<Value> inputs;
                     std::vector<std::vector<std::uint8_t>> mask(T, std::vector<std::uint8_t>(B));
                     for (std::size_t t = 0; t < T; ++t) {
                       inputs.push_back(Value::leaf(random_matrix(B, I, rng)));
                     }
                     for (std::size_t b = 0; b < B; ++b) {
                       const std::size_t len = 1 + rng.uniform_index(T);
                       for (std::size_t t = 0; t < len; ++t) mask[t][b] = 1;
                     }
                     std::vector<Matrix> proj;
                     for (std::size_t t = 0; t < T; ++t) proj.push_back(random_matrix(B, 2 * H, rng));
                     Matrix pf = random_matrix(B, H, rng), pb = random_matrix(B, H, rng);
                     std::vector<Value> leaves = inputs;
                     for (auto& p : store.params()) leaves.push_back(p.value);
                     return gradient_check(
                         [&] {
                           auto out = nn::run_bilstm(net, inputs, mask, nn::BiLstmOptions{});
                           Value total = nn::add(project(out.forward_final, pf),
                                                 project(out.backward_final, pb));
                           for (std::size_t t = 0; t < T; ++t) {
                             total = nn::add(total, project(out.outputs[t], proj[t]));
                           }
                           return total;
                         },
                         leaves);
                   }});
  cases.push_back({"crf_nll", kNonlinear, [](Rng& rng) {
                     const std::size_t T = dim(rng, 1, 4), B = dim(rng, 1, 3), C = dim(rng, 1, 4);
                     auto params = crf::make_crf_leaves(random_matrix(C, C, rng),
                                                        random_matrix(1, C, rng),
                                                        random_matrix(1, C, rng));
                     std::vector<Value> emissions;
                     for (std::size_t t = 0; t < T; ++t) {
                       emissions.push_back(Value::leaf(random_matrix(B, C, rng, 2.0)));
                     }
                     crf::BatchMask mask(T, std::vector<std::uint8_t>(B));
                     std::vector<std::vector<int>> tags(B, std::vector<int>(T));
                     for (std::size_t b = 0; b < B; ++b) {
                       const std::size_t len = 1 + rng.uniform_index(T);
                       for (std::size_t t = 0; t < T; ++t) {
                         mask[t][b] = t < len;
                         tags[b][t] = static_cast<int>(rng.uniform_index(C));
                       }
                     }
                     std::vector<Value> leaves = emissions;
                     leaves.insert(leaves.end(), {params.transitions, params.start, params.end});
                     return gradient_check(
                         [&] { return crf::neg_log_likelihood_batch(emissions, tags, params, mask); },
                         leaves);
                   }});
  return cases;
}

}  // namespace casefold::oracle

#endif  // CASEFOLD_TESTS_GRADIENT_CASES_H_

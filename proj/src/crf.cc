#include "casefold/crf.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "casefold/error.h"

namespace casefold::crf {
namespace {

using nn::check_shape;

// One forward-algorithm step for every row of the batch.
//   active && started: out_j = logsumexp_i(alpha_i + trans_ij) + emit_j
//   active && !started: out_j = alpha_j + emit_j   (alpha still holds start)
//   !active: out = alpha
Value forward_step(const Value& alpha, const Value& transitions, const Value& emit,
                   std::vector<std::uint8_t> started, std::vector<std::uint8_t> active) {
  const Matrix& A = alpha.data();
  const Matrix& Tr = transitions.data();
  const Matrix& E = emit.data();
  const std::size_t B = A.rows(), C = A.cols();
  check_shape(E.rows() == B && E.cols() == C && Tr.rows() == C && Tr.cols() == C,
              "crf forward step: emissions " + E.shape_string() + " transitions " +
                  Tr.shape_string());
  Matrix out(B, C);
  std::vector<double> scratch(C);
  for (std::size_t b = 0; b < B; ++b) {
    if (!active[b]) {
      std::copy(A.row(b), A.row(b) + C, out.row(b));
    } else if (!started[b]) {
      for (std::size_t j = 0; j < C; ++j) out(b, j) = A(b, j) + E(b, j);
    } else {
      for (std::size_t j = 0; j < C; ++j) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < C; ++i) {
          scratch[i] = A(b, i) + Tr(i, j);
          m = std::max(m, scratch[i]);
        }
        double s = 0.0;
        for (std::size_t i = 0; i < C; ++i) s += std::exp(scratch[i] - m);
        out(b, j) = m + std::log(s) + E(b, j);
      }
    }
  }
  Matrix result = out;
  return nn::make_op(
      std::move(out), {alpha, transitions, emit},
      [alpha, transitions, emit, result = std::move(result), started = std::move(started),
       active = std::move(active)](const Matrix& g, std::span<Matrix* const> in) {
        const Matrix& A = alpha.data();
        const Matrix& Tr = transitions.data();
        const Matrix& E = emit.data();
        const std::size_t B = A.rows(), C = A.cols();
        for (std::size_t b = 0; b < B; ++b) {
          if (!active[b]) {
            if (in[0]) {
              for (std::size_t j = 0; j < C; ++j) (*in[0])(b, j) += g(b, j);
            }
            continue;
          }
          if (in[2]) {
            for (std::size_t j = 0; j < C; ++j) (*in[2])(b, j) += g(b, j);
          }
          if (!started[b]) {
            if (in[0]) {
              for (std::size_t j = 0; j < C; ++j) (*in[0])(b, j) += g(b, j);
            }
            continue;
          }
          for (std::size_t j = 0; j < C; ++j) {
            const double lse = result(b, j) - E(b, j);
            for (std::size_t i = 0; i < C; ++i) {
              const double w = g(b, j) * std::exp(A(b, i) + Tr(i, j) - lse);
              if (in[0]) (*in[0])(b, i) += w;
              if (in[1]) (*in[1])(i, j) += w;
            }
          }
        }
      });
}

std::size_t batch_size(std::span<const Value> emissions) {
  check_shape(!emissions.empty(), "CRF over zero timesteps");
  return emissions[0].rows();
}

void check_batch(std::span<const Value> emissions, const CrfParams& params,
                 const BatchMask& mask) {
  const std::size_t B = batch_size(emissions);
  const std::size_t C = params.num_tags();
  check_shape(params.transitions.cols() == C && params.start.rows() == 1 &&
                  params.start.cols() == C && params.end.rows() == 1 && params.end.cols() == C,
              "CRF parameter shapes disagree");
  check_shape(mask.size() == emissions.size(), "CRF mask length differs from emissions");
  for (std::size_t t = 0; t < emissions.size(); ++t) {
    check_shape(emissions[t].rows() == B && emissions[t].cols() == C,
                "CRF emissions at step " + std::to_string(t) + " are " +
                    emissions[t].data().shape_string());
    check_shape(mask[t].size() == B, "CRF mask width differs from batch size");
  }
  for (std::size_t b = 0; b < B; ++b) {
    bool any = false;
    for (std::size_t t = 0; t < mask.size() && !any; ++t) any = mask[t][b] != 0;
    if (!any) throw UsageError("EmptySequence", "sequence " + std::to_string(b) +
                                                    " has no unmasked timestep");
  }
}

BatchMask single_mask(std::size_t T, std::span<const std::uint8_t> mask) {
  if (!mask.empty()) check_shape(mask.size() == T, "mask length differs from emissions");
  BatchMask out(T, std::vector<std::uint8_t>(1, 1));
  for (std::size_t t = 0; t < mask.size(); ++t) out[t][0] = mask[t] ? 1 : 0;
  return out;
}

std::vector<Value> split_steps(const Value& emissions) {
  std::vector<Value> steps;
  for (std::size_t t = 0; t < emissions.rows(); ++t) {
    steps.push_back(nn::slice_rows(emissions, t, t + 1));
  }
  return steps;
}

}  // namespace

CrfParams make_crf(nn::ParameterStore& store, std::size_t num_tags) {
  check_shape(num_tags >= 1, "CRF needs at least one tag");
  CrfParams p;
  p.transitions = store.add("crf.transitions", Matrix(num_tags, num_tags));
  p.start = store.add("crf.start", Matrix(1, num_tags));
  p.end = store.add("crf.end", Matrix(1, num_tags));
  return p;
}

CrfParams make_crf_leaves(Matrix transitions, Matrix start, Matrix end) {
  return CrfParams{Value::leaf(std::move(transitions)), Value::leaf(std::move(start)),
                   Value::leaf(std::move(end))};
}

Value log_partition_batch(std::span<const Value> emissions, const CrfParams& params,
                          const BatchMask& mask) {
  check_batch(emissions, params, mask);
  const std::size_t B = batch_size(emissions);
  const std::size_t C = params.num_tags();
  Value alpha = nn::add_row(Value::constant(Matrix(B, C)), params.start);
  std::vector<std::uint8_t> started(B, 0);
  for (std::size_t t = 0; t < emissions.size(); ++t) {
    alpha = forward_step(alpha, params.transitions, emissions[t], started, mask[t]);
    for (std::size_t b = 0; b < B; ++b) started[b] |= mask[t][b];
  }
  return nn::logsumexp_rows(nn::add_row(alpha, params.end));
}

Value path_score_batch(std::span<const Value> emissions,
                       const std::vector<std::vector<int>>& tags, const CrfParams& params,
                       const BatchMask& mask) {
  check_batch(emissions, params, mask);
  const std::size_t B = batch_size(emissions);
  const std::size_t T = emissions.size();
  const int C = static_cast<int>(params.num_tags());
  check_shape(tags.size() == B, "one tag sequence per batch row required");
  for (std::size_t b = 0; b < B; ++b) {
    check_shape(tags[b].size() == T, "tag sequence length differs from emissions");
    for (std::size_t t = 0; t < T; ++t) {
      if (mask[t][b] && (tags[b][t] < 0 || tags[b][t] >= C)) {
        throw UsageError("ClassOutOfRange", "tag " + std::to_string(tags[b][t]) +
                                                " outside [0, " + std::to_string(C) + ")");
      }
    }
  }
  const Matrix& Tr = params.transitions.data();
  const Matrix& S = params.start.data();
  const Matrix& E = params.end.data();
  Matrix out(B, 1);
  for (std::size_t b = 0; b < B; ++b) {
    int prev = -1;
    double score = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      if (!mask[t][b]) continue;
      const int tag = tags[b][t];
      score += prev < 0 ? S(0, tag) : Tr(prev, tag);
      score += emissions[t].data()(b, tag);
      prev = tag;
    }
    out(b, 0) = score + E(0, prev);
  }
  std::vector<Value> inputs(emissions.begin(), emissions.end());
  inputs.push_back(params.transitions);
  inputs.push_back(params.start);
  inputs.push_back(params.end);
  return nn::make_op(std::move(out), std::move(inputs),
                     [tags, mask, T, B](const Matrix& g, std::span<Matrix* const> in) {
                       Matrix* g_trans = in[T];
                       Matrix* g_start = in[T + 1];
                       Matrix* g_end = in[T + 2];
                       for (std::size_t b = 0; b < B; ++b) {
                         const double gb = g(b, 0);
                         int prev = -1;
                         for (std::size_t t = 0; t < T; ++t) {
                           if (!mask[t][b]) continue;
                           const int tag = tags[b][t];
                           if (prev < 0) {
                             if (g_start) (*g_start)(0, tag) += gb;
                           } else if (g_trans) {
                             (*g_trans)(prev, tag) += gb;
                           }
                           if (in[t]) (*in[t])(b, tag) += gb;
                           prev = tag;
                         }
                         if (g_end) (*g_end)(0, prev) += gb;
                       }
                     });
}

Value neg_log_likelihood_batch(std::span<const Value> emissions,
                               const std::vector<std::vector<int>>& tags,
                               const CrfParams& params, const BatchMask& mask) {
  Value score = path_score_batch(emissions, tags, params, mask);
  Value log_z = log_partition_batch(emissions, params, mask);
  return nn::sum(nn::sub(log_z, score));
}

Value crf_log_partition(const Value& emissions, const CrfParams& params,
                        std::span<const std::uint8_t> mask) {
  auto steps = split_steps(emissions);
  return nn::sum(log_partition_batch(steps, params, single_mask(emissions.rows(), mask)));
}

Value crf_score(const Value& emissions, std::span<const int> tags, const CrfParams& params,
                std::span<const std::uint8_t> mask) {
  auto steps = split_steps(emissions);
  std::vector<std::vector<int>> batch_tags{std::vector<int>(tags.begin(), tags.end())};
  return nn::sum(
      path_score_batch(steps, batch_tags, params, single_mask(emissions.rows(), mask)));
}

Value crf_neg_log_likelihood(const Value& emissions, std::span<const int> tags,
                             const CrfParams& params, std::span<const std::uint8_t> mask) {
  auto steps = split_steps(emissions);
  std::vector<std::vector<int>> batch_tags{std::vector<int>(tags.begin(), tags.end())};
  return neg_log_likelihood_batch(steps, batch_tags, params,
                                  single_mask(emissions.rows(), mask));
}

ViterbiResult viterbi_decode(const Matrix& emissions, const Matrix& transitions,
                             const Matrix& start, const Matrix& end,
                             std::span<const std::uint8_t> mask) {
  const std::size_t T = emissions.rows();
  const std::size_t C = emissions.cols();
  check_shape(transitions.rows() == C && transitions.cols() == C && start.cols() == C &&
                  end.cols() == C,
              "viterbi: parameter shapes disagree with emissions " + emissions.shape_string());
  if (!mask.empty()) check_shape(mask.size() == T, "viterbi: mask length");
  std::vector<std::size_t> steps;
  for (std::size_t t = 0; t < T; ++t) {
    if (mask.empty() || mask[t]) steps.push_back(t);
  }
  if (steps.empty()) throw UsageError("EmptySequence", "viterbi over no unmasked timestep");

  std::vector<double> score(C), next(C);
  std::vector<std::vector<int>> back(steps.size(), std::vector<int>(C, 0));
  for (std::size_t j = 0; j < C; ++j) score[j] = start(0, j) + emissions(steps[0], j);
  for (std::size_t k = 1; k < steps.size(); ++k) {
    for (std::size_t j = 0; j < C; ++j) {
      double best = score[0] + transitions(0, j);
      int arg = 0;
      for (std::size_t i = 1; i < C; ++i) {
        const double s = score[i] + transitions(i, j);
        if (s > best) {
          best = s;
          arg = static_cast<int>(i);
        }
      }
      next[j] = best + emissions(steps[k], j);
      back[k][j] = arg;
    }
    std::swap(score, next);
  }
  double best = score[0] + end(0, 0);
  int last = 0;
  for (std::size_t j = 1; j < C; ++j) {
    const double s = score[j] + end(0, j);
    if (s > best) {
      best = s;
      last = static_cast<int>(j);
    }
  }
  ViterbiResult result;
  result.score = best;
  result.path.assign(T, -1);
  int tag = last;
  for (std::size_t k = steps.size(); k-- > 0;) {
    result.path[steps[k]] = tag;
    tag = back[k][tag];
  }
  return result;
}

ViterbiResult viterbi_decode(const Value& emissions, const CrfParams& params,
                             std::span<const std::uint8_t> mask) {
  return viterbi_decode(emissions.data(), params.transitions.data(), params.start.data(),
                        params.end.data(), mask);
}

}  // namespace casefold::crf

#ifndef CASEFOLD_CRF_H_
#define CASEFOLD_CRF_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "casefold/autodiff.h"
#include "casefold/layers.h"

namespace casefold::crf {

using nn::Matrix;
using nn::Value;

// Linear-chain CRF scores. transitions(i, j) scores tag i followed by tag j.
struct CrfParams {
  Value transitions;  // [C x C]
  Value start;        // [1 x C]
  Value end;          // [1 x C]

  std::size_t num_tags() const { return transitions.rows(); }
};

// Registers crf.transitions, crf.start and crf.end (zero-initialized).
CrfParams make_crf(nn::ParameterStore& store, std::size_t num_tags);
// Differentiable leaves wrapping the given scores (tests, oracles).
CrfParams make_crf_leaves(Matrix transitions, Matrix start, Matrix end);

// Time-major batch: mask[t][b] == 0 marks a skipped (padded) step.
using BatchMask = std::vector<std::vector<std::uint8_t>>;

// Forward algorithm in log space, one log Z per sequence: [B x 1]. Throws
// UsageError "EmptySequence" if a sequence has no unmasked step.
Value log_partition_batch(std::span<const Value> emissions, const CrfParams& params,
                          const BatchMask& mask);
// Unnormalized score of tags[b] (length T; masked entries ignored): [B x 1].
Value path_score_batch(std::span<const Value> emissions,
                       const std::vector<std::vector<int>>& tags, const CrfParams& params,
                       const BatchMask& mask);
// Sum over the batch of log Z - score.
Value neg_log_likelihood_batch(std::span<const Value> emissions,
                               const std::vector<std::vector<int>>& tags,
                               const CrfParams& params, const BatchMask& mask);

// Single-sequence forms over emissions [T x C]. An empty mask means every
// step is real.
Value crf_log_partition(const Value& emissions, const CrfParams& params,
                        std::span<const std::uint8_t> mask = {});
Value crf_score(const Value& emissions, std::span<const int> tags, const CrfParams& params,
                std::span<const std::uint8_t> mask = {});
Value crf_neg_log_likelihood(const Value& emissions, std::span<const int> tags,
                             const CrfParams& params, std::span<const std::uint8_t> mask = {});

struct ViterbiResult {
  // One tag per timestep; masked steps hold -1.
  std::vector<int> path;
  double score = 0.0;
};

// Highest-scoring path. Ties go to the lower tag id at every decision.
ViterbiResult viterbi_decode(const Matrix& emissions, const Matrix& transitions,
                             const Matrix& start, const Matrix& end,
                             std::span<const std::uint8_t> mask = {});
ViterbiResult viterbi_decode(const Value& emissions, const CrfParams& params,
                             std::span<const std::uint8_t> mask = {});

}  // namespace casefold::crf

#endif  // CASEFOLD_CRF_H_

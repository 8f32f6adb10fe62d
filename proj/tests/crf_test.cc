#include "casefold/crf.h"

#include <cmath>

#include "doctest.h"
#include "support/oracles.h"

using namespace casefold;
using nn::Matrix;
using nn::Value;

TEST_CASE("log partition and viterbi agree with enumeration") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 1 + rng.uniform_index(6);
    const std::size_t C = 1 + rng.uniform_index(4);
    Matrix e = oracle::random_matrix(T, C, rng, 3.0);
    Matrix tr = oracle::random_matrix(C, C, rng, 3.0);
    Matrix st = oracle::random_matrix(1, C, rng, 3.0);
    Matrix en = oracle::random_matrix(1, C, rng, 3.0);
    const auto ref = oracle::enumerate_paths(e, tr, st, en);
    auto params = crf::make_crf_leaves(tr, st, en);
    const double z = crf::crf_log_partition(Value::constant(e), params).item();
    CHECK(std::abs(z - ref.log_partition) < 1e-9);
    const auto best = crf::viterbi_decode(e, tr, st, en);
    CHECK(best.path == ref.best_path);
    CHECK(std::abs(best.score - ref.best_score) < 1e-9);
    const double score = crf::crf_score(Value::constant(e), best.path, params).item();
    CHECK(std::abs(score - ref.best_score) < 1e-9);
  }
}

TEST_CASE("single step with no transitions") {
  Matrix e = Matrix::from_rows({{0.0, std::log(3.0)}});
  auto params = crf::make_crf_leaves(Matrix(2, 2), Matrix(1, 2), Matrix(1, 2));
  CHECK(crf::crf_log_partition(Value::constant(e), params).item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  const int tags[] = {0};
  CHECK(crf::crf_neg_log_likelihood(Value::constant(e), tags, params).item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("viterbi breaks ties toward lower ids") {
  const Matrix zeros(3, 3);
  const auto r = crf::viterbi_decode(zeros, Matrix(3, 3), Matrix(1, 3), Matrix(1, 3));
  CHECK(r.path == std::vector<int>{0, 0, 0});
  CHECK(r.score == 0.0);

  Matrix e = Matrix::from_rows({{1.0, 1.0}, {0.0, 2.0}});
  const auto r2 = crf::viterbi_decode(e, Matrix(2, 2), Matrix(1, 2), Matrix(1, 2));
  CHECK(r2.path == std::vector<int>{0, 1});
  CHECK(r2.score == 3.0);
}

TEST_CASE("masked steps are skipped") {
  Rng rng(9);
  Matrix e = oracle::random_matrix(5, 3, rng);
  Matrix tr = oracle::random_matrix(3, 3, rng);
  Matrix st = oracle::random_matrix(1, 3, rng);
  Matrix en = oracle::random_matrix(1, 3, rng);
  const std::uint8_t mask[] = {1, 0, 1, 1, 0};
  Matrix packed(3, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    packed(0, k) = e(0, k);
    packed(1, k) = e(2, k);
    packed(2, k) = e(3, k);
  }
  auto params = crf::make_crf_leaves(tr, st, en);
  CHECK(crf::crf_log_partition(Value::constant(e), params, mask).item() ==
        doctest::Approx(crf::crf_log_partition(Value::constant(packed), params).item())
            .epsilon(1e-12));
  const auto full = crf::viterbi_decode(e, tr, st, en, mask);
  const auto short_path = crf::viterbi_decode(packed, tr, st, en);
  REQUIRE(full.path.size() == 5);
  CHECK(full.path[1] == -1);
  CHECK(full.path[4] == -1);
  CHECK(full.path[0] == short_path.path[0]);
  CHECK(full.path[2] == short_path.path[1]);
  CHECK(full.path[3] == short_path.path[2]);
  CHECK(full.score == doctest::Approx(short_path.score).epsilon(1e-12));
}

TEST_CASE("batched forms match per-sequence forms") {
  Rng rng(4);
  const std::size_t C = 3;
  const std::vector<std::size_t> lengths{3, 1, 2};
  std::vector<Matrix> seqs;
  for (std::size_t len : lengths) seqs.push_back(oracle::random_matrix(len, C, rng));
  std::vector<std::vector<int>> tags(3, std::vector<int>(3, 0));
  crf::BatchMask mask(3, std::vector<std::uint8_t>(3, 0));
  std::vector<Value> steps;
  for (std::size_t t = 0; t < 3; ++t) {
    Matrix step(3, C, -50.0);
    for (std::size_t b = 0; b < 3; ++b) {
      tags[b][t] = static_cast<int>((t + b) % C);
      if (t < lengths[b]) {
        mask[t][b] = 1;
        for (std::size_t k = 0; k < C; ++k) step(b, k) = seqs[b](t, k);
      }
    }
    steps.push_back(Value::constant(step));
  }
  auto params = crf::make_crf_leaves(oracle::random_matrix(C, C, rng),
                                     oracle::random_matrix(1, C, rng),
                                     oracle::random_matrix(1, C, rng));
  const Matrix z = crf::log_partition_batch(steps, params, mask).data();
  double nll_sum = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    Value e = Value::constant(seqs[b]);
    CHECK(z(b, 0) == doctest::Approx(crf::crf_log_partition(e, params).item()).epsilon(1e-12));
    std::vector<int> own(tags[b].begin(), tags[b].begin() + static_cast<long>(lengths[b]));
    nll_sum += crf::crf_neg_log_likelihood(e, own, params).item();
  }
  CHECK(crf::neg_log_likelihood_batch(steps, tags, params, mask).item() ==
        doctest::Approx(nll_sum).epsilon(1e-12));
}

TEST_CASE("nll is non-negative") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = 1 + rng.uniform_index(5);
    Matrix e = oracle::random_matrix(T, 3, rng, 4.0);
    auto params = crf::make_crf_leaves(oracle::random_matrix(3, 3, rng, 4.0),
                                       oracle::random_matrix(1, 3, rng),
                                       oracle::random_matrix(1, 3, rng));
    std::vector<int> tags(T);
    for (int& y : tags) y = static_cast<int>(rng.uniform_index(3));
    CHECK(crf::crf_neg_log_likelihood(Value::constant(e), tags, params).item() >= -1e-12);
  }
}

TEST_CASE("a fully masked sequence is an error") {
  auto params = crf::make_crf_leaves(Matrix(2, 2), Matrix(1, 2), Matrix(1, 2));
  const std::uint8_t mask[] = {0, 0};
  CHECK(oracle::error_code([&] {
          crf::crf_log_partition(Value::constant(Matrix(2, 2)), params, mask);
        }) == "EmptySequence");
}

TEST_CASE("store-backed parameters start at zero") {
  nn::ParameterStore store;
  auto params = crf::make_crf(store, 4);
  CHECK(params.num_tags() == 4);
  CHECK(params.transitions.data() == Matrix(4, 4));
  CHECK(store.contains("crf.transitions"));
  CHECK(store.contains("crf.start"));
  CHECK(store.contains("crf.end"));
}

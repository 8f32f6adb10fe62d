#include "casefold/rng.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "doctest.h"

using casefold::Rng;

TEST_CASE("engine matches the standard mt19937_64 sequence") {
  Rng rng(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next();
  CHECK(x == 9981545732273789042ULL);
}

TEST_CASE("uniform01 matches an independent trace") {
  // Values from a separate MT19937-64 implementation with (x >> 11) * 2^-53.
  Rng rng(42);
  CHECK(rng.uniform01() == 0.755155532954539);
  CHECK(rng.uniform01() == 0.6390313938546974);
  CHECK(rng.uniform01() == 0.7521452007480266);
}

TEST_CASE("uniform_index and bernoulli stay in range") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.uniform_index(7) < 7);
    double u = rng.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
  }
  CHECK_FALSE(rng.bernoulli(0.0));
  CHECK(rng.bernoulli(1.0));
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> a(50);
  std::iota(a.begin(), a.end(), 0);
  auto b = a;
  Rng r1(9), r2(9);
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("sample_without_replacement") {
  Rng rng(3);
  auto s = rng.sample_without_replacement(20, 10);
  REQUIRE(s.size() == 10);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 10);
  CHECK(s.back() < 20);
  CHECK(rng.sample_without_replacement(5, 5) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(rng.sample_without_replacement(5, 0).empty());
}

TEST_CASE("derive_seed separates streams") {
  CHECK(casefold::derive_seed(7, 1) == casefold::derive_seed(7, 1));
  CHECK(casefold::derive_seed(7, 1) != casefold::derive_seed(7, 2));
  CHECK(casefold::derive_seed(7, 1) != casefold::derive_seed(8, 1));
}

#ifndef CASEFOLD_RNG_H_
#define CASEFOLD_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace casefold {

// The single pseudo-random generator used by every module.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. All derived draws are implemented here rather than through
// <random> distributions (whose algorithms are implementation-defined), so a
// seed produces the same stream with any conforming standard library:
//
//   uniform01()        (next() >> 11) * 2^-53, in [0, 1)
//   uniform_index(n)   rejection sampling on next() to remove modulo bias
//   bernoulli(p)       uniform01() < p
//   shuffle(v)         Fisher-Yates from the back, j = uniform_index(i + 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01();
  double uniform(double low, double high);
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Uniform sample of k distinct indices from [0, n), returned sorted.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

 private:
  std::mt19937_64 engine_;
};

// Derives an independent seed for a named sub-stream (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace casefold

#endif  // CASEFOLD_RNG_H_

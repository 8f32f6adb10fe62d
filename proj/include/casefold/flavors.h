#ifndef CASEFOLD_FLAVORS_H_
#define CASEFOLD_FLAVORS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "casefold/corpus.h"

namespace casefold {

// The six train/test casing regimes.
enum class Flavor { kCased, kUncased, kCasedPlusUncased, kCasedPlusUncased50, kTruecaseTest, kTruecaseAll };

inline constexpr Flavor kAllFlavors[] = {
    Flavor::kCased,        Flavor::kUncased,      Flavor::kCasedPlusUncased,
    Flavor::kCasedPlusUncased50, Flavor::kTruecaseTest, Flavor::kTruecaseAll};

// Table name, e.g. "C+U 50".
std::string_view display_name(Flavor flavor);
// CLI and file-suffix name: c, u, cu, cu50, tt, ta.
std::string_view short_name(Flavor flavor);
Flavor parse_flavor(std::string_view name);
bool needs_truecaser(Flavor flavor);

// Anything that restores casing in lowercased text without changing its
// length in code points.
class CaseRestorer {
 public:
  virtual ~CaseRestorer() = default;
  virtual std::string restore(std::string_view lowercased) const = 0;
  virtual std::string id() const = 0;
};

struct FlavoredDataset {
  std::vector<Sentence> train;
  std::vector<Sentence> test_cased;
  std::vector<Sentence> test_uncased;
  Flavor flavor = Flavor::kCased;
  std::uint64_t seed = 0;
  std::optional<std::string> truecaser_id;
};

Sentence lowercase_sentence(const Sentence& sentence);
std::vector<Sentence> lowercase_all(std::span<const Sentence> sentences);

// truecaser(lowercase(s)), mapped back onto the original token boundaries.
Sentence truecase_sentence(const Sentence& sentence, const CaseRestorer& truecaser);

// Applies the training-side transform of a flavor. C+U 50 lowercases a seeded
// uniform sample of exactly floor(n/2) sentences.
std::vector<Sentence> flavor_train_side(std::span<const Sentence> train, Flavor flavor,
                                        std::uint64_t seed, const CaseRestorer* truecaser);

// Throws UsageError "MissingTruecaser" / "UnexpectedTruecaser" when the
// truecaser argument does not match the flavor.
FlavoredDataset make_flavor(std::span<const Sentence> train, std::span<const Sentence> test,
                            Flavor flavor, std::uint64_t seed, const CaseRestorer* truecaser);

}  // namespace casefold

#endif  // CASEFOLD_FLAVORS_H_

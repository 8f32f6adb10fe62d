#include "casefold/flavors.h"

#include "casefold/error.h"
#include "casefold/rng.h"
#include "casefold/unicode.h"

namespace casefold {
namespace {

constexpr std::uint64_t kHalfMixStream = 0xC050;

void check_truecaser(Flavor flavor, const CaseRestorer* truecaser) {
  if (needs_truecaser(flavor) && truecaser == nullptr) {
    throw UsageError("MissingTruecaser", std::string("flavor ") +
                                             std::string(short_name(flavor)) +
                                             " requires a truecaser model");
  }
  if (!needs_truecaser(flavor) && truecaser != nullptr) {
    throw UsageError("UnexpectedTruecaser", std::string("flavor ") +
                                                std::string(short_name(flavor)) +
                                                " does not take a truecaser model");
  }
}

std::vector<Sentence> truecase_all(std::span<const Sentence> sentences,
                                   const CaseRestorer& truecaser) {
  std::vector<Sentence> out;
  out.reserve(sentences.size());
  for (const Sentence& s : sentences) out.push_back(truecase_sentence(s, truecaser));
  return out;
}

}  // namespace

std::string_view display_name(Flavor flavor) {
  switch (flavor) {
    case Flavor::kCased: return "C";
    case Flavor::kUncased: return "U";
    case Flavor::kCasedPlusUncased: return "C+U";
    case Flavor::kCasedPlusUncased50: return "C+U 50";
    case Flavor::kTruecaseTest: return "TT";
    case Flavor::kTruecaseAll: return "TA";
  }
  return "?";
}

std::string_view short_name(Flavor flavor) {
  switch (flavor) {
    case Flavor::kCased: return "c";
    case Flavor::kUncased: return "u";
    case Flavor::kCasedPlusUncased: return "cu";
    case Flavor::kCasedPlusUncased50: return "cu50";
    case Flavor::kTruecaseTest: return "tt";
    case Flavor::kTruecaseAll: return "ta";
  }
  return "?";
}

Flavor parse_flavor(std::string_view name) {
  for (Flavor f : kAllFlavors) {
    if (name == short_name(f) || name == display_name(f)) return f;
  }
  throw UsageError("UnknownFlavor", "unknown flavor '" + std::string(name) +
                                        "' (expected c, u, cu, cu50, tt or ta)");
}

bool needs_truecaser(Flavor flavor) {
  return flavor == Flavor::kTruecaseTest || flavor == Flavor::kTruecaseAll;
}

Sentence lowercase_sentence(const Sentence& sentence) {
  Sentence out = sentence;
  for (Token& t : out.tokens) t.surface = unicode::to_lower(t.surface);
  return out;
}

std::vector<Sentence> lowercase_all(std::span<const Sentence> sentences) {
  std::vector<Sentence> out;
  out.reserve(sentences.size());
  for (const Sentence& s : sentences) out.push_back(lowercase_sentence(s));
  return out;
}

Sentence truecase_sentence(const Sentence& sentence, const CaseRestorer& truecaser) {
  Sentence lowered = lowercase_sentence(sentence);
  std::u32string restored = unicode::decode(truecaser.restore(sentence_text(lowered)));
  Sentence out = lowered;
  std::size_t pos = 0;
  for (Token& t : out.tokens) {
    std::size_t len = unicode::decode(t.surface).size();
    if (pos + len > restored.size()) {
      throw DataError("TruecaserLength", "truecaser changed the text length");
    }
    t.surface = unicode::encode(std::u32string_view(restored).substr(pos, len));
    pos += len + 1;
  }
  return out;
}

std::vector<Sentence> flavor_train_side(std::span<const Sentence> train, Flavor flavor,
                                        std::uint64_t seed, const CaseRestorer* truecaser) {
  check_truecaser(flavor, truecaser);
  switch (flavor) {
    case Flavor::kCased:
    case Flavor::kTruecaseTest:
      return {train.begin(), train.end()};
    case Flavor::kUncased:
      return lowercase_all(train);
    case Flavor::kCasedPlusUncased: {
      std::vector<Sentence> out(train.begin(), train.end());
      auto lowered = lowercase_all(train);
      out.insert(out.end(), lowered.begin(), lowered.end());
      return out;
    }
    case Flavor::kCasedPlusUncased50: {
      std::vector<Sentence> out(train.begin(), train.end());
      Rng rng(derive_seed(seed, kHalfMixStream));
      for (std::size_t i : rng.sample_without_replacement(out.size(), out.size() / 2)) {
        out[i] = lowercase_sentence(out[i]);
      }
      return out;
    }
    case Flavor::kTruecaseAll:
      return truecase_all(train, *truecaser);
  }
  return {};
}

FlavoredDataset make_flavor(std::span<const Sentence> train, std::span<const Sentence> test,
                            Flavor flavor, std::uint64_t seed, const CaseRestorer* truecaser) {
  FlavoredDataset data;
  data.flavor = flavor;
  data.seed = seed;
  data.train = flavor_train_side(train, flavor, seed, truecaser);
  if (needs_truecaser(flavor)) {
    data.truecaser_id = truecaser->id();
    data.test_cased = truecase_all(test, *truecaser);
    data.test_uncased = data.test_cased;
  } else {
    data.test_cased.assign(test.begin(), test.end());
    data.test_uncased = lowercase_all(test);
  }
  return data;
}

}  // namespace casefold

#ifndef CASEFOLD_CORPUS_H_
#define CASEFOLD_CORPUS_H_

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "casefold/rng.h"

namespace casefold {

struct Token {
  std::string surface;
  std::string label;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

std::vector<std::string> surfaces(const Sentence& sentence);
std::vector<std::string> labels(const Sentence& sentence);
// Token surfaces joined with single spaces.
std::string sentence_text(const Sentence& sentence);

struct LabeledCorpus {
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
  std::set<std::string> label_set;
};

// Builds the corpus and its label set from the three splits.
LabeledCorpus make_labeled_corpus(std::vector<Sentence> train,
                                  std::vector<Sentence> dev,
                                  std::vector<Sentence> test);

// Whitespace-separated columns, blank line between sentences. Throws
// DataError "MalformedLine" (with the 1-based line number) when a line lacks a
// requested column and "EmptyCorpus" when nothing was parsed.
std::vector<Sentence> parse_column_corpus(std::string_view text,
                                          std::size_t token_col,
                                          std::size_t label_col);

// One sentence per line, whitespace tokens, every label set to "_".
std::vector<Sentence> parse_plain_text(std::string_view text);

// Two columns "surface label", blank line after each sentence.
std::string write_column_corpus(std::span<const Sentence> sentences);
std::string write_plain_text(std::span<const Sentence> sentences);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

enum class UnitKind { kCharacter, kWord };
enum class OovKind { kStochasticAtRead, kFrequencyCutoff };

struct OovPolicy {
  OovKind kind = OovKind::kFrequencyCutoff;
  double rate = 0.005;
};

std::string_view to_string(UnitKind kind);
std::string_view to_string(OovKind kind);
OovKind parse_oov_kind(std::string_view name);

// Dense unit -> id map. Ids 0 and 1 are reserved for padding and
// out-of-vocabulary; real units take ids 2..N-1 in lexicographic order.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kOovId = 1;

  Vocabulary() = default;
  Vocabulary(UnitKind unit_kind, OovPolicy policy, std::vector<std::string> units);

  UnitKind unit_kind() const { return unit_kind_; }
  const OovPolicy& policy() const { return policy_; }
  int pad_id() const { return kPadId; }
  int oov_id() const { return kOovId; }

  // Total number of ids, reserved ones included.
  std::size_t size() const { return units_.size() + 2; }
  bool contains(std::string_view unit) const;
  // Unknown units map to oov_id().
  int id(std::string_view unit) const;
  // Real units in id order (units()[i] has id i + 2).
  const std::vector<std::string>& units() const { return units_; }

  // "casefold-vocab v1 <unit_kind> <policy> <rate>" then "unit<TAB>id" lines.
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);

  bool operator==(const Vocabulary& other) const;

 private:
  UnitKind unit_kind_ = UnitKind::kWord;
  OovPolicy policy_;
  std::vector<std::string> units_;
  std::unordered_map<std::string, int> id_of_;
};

// Units of a sentence: token surfaces for words, or the code points of
// sentence_text() (spaces included) for characters.
std::vector<std::string> units_of(const Sentence& sentence, UnitKind kind);
std::vector<std::string> char_units(std::string_view text);

// Units excluded by the frequency cutoff: sorted by increasing count (ties
// lexicographic), the shortest prefix whose total reaches rate * total_count.
// Returned in lexicographic order.
std::vector<std::string> frequency_cutoff_excluded(
    const std::unordered_map<std::string, std::size_t>& counts, double rate);

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> unit_sequences,
                            UnitKind unit_kind, OovPolicy policy);
Vocabulary build_vocabulary(std::span<const Sentence> sentences, UnitKind unit_kind,
                            OovPolicy policy);

enum class EncodeMode { kEval, kTrain };

// Maps units to ids. In kTrain mode with a stochastic_at_read policy every
// known unit is independently replaced by oov_id with probability rate, which
// requires an rng (UsageError "MissingRng" otherwise).
std::vector<int> encode(std::span<const std::string> units, const Vocabulary& vocab,
                        EncodeMode mode = EncodeMode::kEval, Rng* rng = nullptr);
std::vector<int> encode(const Sentence& sentence, const Vocabulary& vocab,
                        EncodeMode mode = EncodeMode::kEval, Rng* rng = nullptr);

}  // namespace casefold

#endif  // CASEFOLD_CORPUS_H_

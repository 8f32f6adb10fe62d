#include "casefold/synthetic.h"

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "casefold/rng.h"

namespace casefold::synthetic {
namespace {

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& words) {
  return words[rng.uniform_index(N)];
}

constexpr std::array<std::string_view, 36> kTruecaseWords = {
    "the",   "a",     "city",  "is",    "big",   "old",   "we",    "went",  "to",
    "and",   "river", "near",  "small", "house", "train", "left",  "from",  "many",
    "people", "live", "in",    "it",    "rains", "often", "park",  "was",   "quiet",
    "new",   "bridge", "over", "north", "road",  "they",  "like",  "visit", "there"};

// Names that collide with a common word, and names that do not.
constexpr std::array<std::string_view, 12> kAmbiguousNames = {
    "Bill", "Will", "May", "Mark", "Rose", "Frank", "Grant", "Hope", "Sue", "Pat", "Rob", "Jack"};
constexpr std::array<std::string_view, 6> kPlainNames = {"John", "Mary", "Alice",
                                                         "Peter", "Anna",  "Tom"};
constexpr std::array<std::string_view, 4> kPlaces = {"London", "Paris", "Berlin", "Rome"};

constexpr std::array<std::string_view, 11> kNouns = {"dog",  "cat",  "bill",  "car",
                                                     "book", "house", "report", "plan",
                                                     "mark", "rose", "jack"};
constexpr std::array<std::string_view, 2> kNounsHope = {"hope", "letter"};
constexpr std::array<std::string_view, 7> kAdjectives = {"big", "small", "red",  "frank",
                                                         "old", "new",   "happy"};
constexpr std::array<std::string_view, 6> kPast = {"saw", "liked", "found", "met", "took", "called"};
constexpr std::array<std::string_view, 5> kModals = {"will", "may", "can", "must", "should"};
constexpr std::array<std::string_view, 9> kBase = {"see",  "grant", "sue",  "pat", "rob",
                                                   "help", "call",  "visit", "meet"};
constexpr std::array<std::string_view, 4> kDeterminers = {"the", "a", "this", "every"};
constexpr std::array<std::string_view, 4> kPronouns = {"he", "she", "they", "we"};
constexpr std::array<std::string_view, 4> kPrepositions = {"with", "for", "near", "about"};
constexpr std::array<std::string_view, 4> kLinking = {"seemed", "looked", "was", "felt"};

class Builder {
 public:
  explicit Builder(Rng& rng) : rng_(rng) {}

  void add(std::string_view word, std::string_view tag) {
    sentence_.tokens.push_back(Token{std::string(word), std::string(tag)});
  }
  void name() {
    if (rng_.bernoulli(0.9)) {
      add(pick(rng_, kAmbiguousNames), "NNP");
    } else {
      add(pick(rng_, kPlainNames), "NNP");
    }
  }
  void noun_phrase(bool adjective) {
    add(pick(rng_, kDeterminers), "DT");
    if (adjective) add(pick(rng_, kAdjectives), "JJ");
    if (rng_.bernoulli(0.15)) {
      add(pick(rng_, kNounsHope), "NN");
    } else {
      add(pick(rng_, kNouns), "NN");
    }
  }
  Sentence finish() {
    add(".", ".");
    Token& first = sentence_.tokens.front();
    if (first.surface[0] >= 'a' && first.surface[0] <= 'z') first.surface[0] -= 32;
    return std::move(sentence_);
  }
  Rng& rng() { return rng_; }

 private:
  Rng& rng_;
  Sentence sentence_;
};

Sentence pos_sentence(Rng& rng) {
  Builder b(rng);
  switch (rng.uniform_index(10)) {
    case 0:
      b.name();
      b.add(pick(rng, kPast), "VBD");
      b.noun_phrase(rng.bernoulli(0.5));
      break;
    case 1:
      b.noun_phrase(rng.bernoulli(0.5));
      b.add(pick(rng, kPast), "VBD");
      b.name();
      break;
    case 2:
      b.name();
      b.add(pick(rng, kModals), "MD");
      b.add(pick(rng, kBase), "VB");
      b.noun_phrase(false);
      break;
    case 3:
      b.noun_phrase(true);
      b.add(pick(rng, kModals), "MD");
      b.add(pick(rng, kBase), "VB");
      b.add(pick(rng, kPrepositions), "IN");
      b.name();
      break;
    case 4:
      b.add(pick(rng, kPronouns), "PRP");
      b.add(pick(rng, kPast), "VBD");
      b.noun_phrase(false);
      b.add(pick(rng, kPrepositions), "IN");
      b.add(pick(rng, kPlaces), "NNP");
      break;
    case 5:
      b.name();
      b.add("and", "CC");
      b.name();
      b.add(pick(rng, kPast), "VBD");
      b.noun_phrase(true);
      break;
    case 6:
      b.noun_phrase(false);
      b.add(pick(rng, kPrepositions), "IN");
      b.name();
      b.add(pick(rng, kLinking), "VBD");
      b.add(pick(rng, kAdjectives), "JJ");
      break;
    case 7:
      b.name();
      b.add(pick(rng, kPast), "VBD");
      b.name();
      b.add(pick(rng, kPrepositions), "IN");
      b.name();
      break;
    case 8:
      b.name();
      b.add(pick(rng, kModals), "MD");
      b.add(pick(rng, kBase), "VB");
      b.name();
      b.add("and", "CC");
      b.name();
      break;
    default:
      b.add(pick(rng, kPronouns), "PRP");
      b.add(pick(rng, kModals), "MD");
      b.add(pick(rng, kBase), "VB");
      b.name();
      b.add(pick(rng, kPrepositions), "IN");
      b.add(pick(rng, kPlaces), "NNP");
      break;
  }
  return b.finish();
}

bool is_place(std::string_view word) {
  for (auto p : kPlaces) {
    if (p == word) return true;
  }
  return false;
}

}  // namespace

std::vector<Sentence> truecase_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sentence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sentence s;
    const std::size_t len = 4 + rng.uniform_index(6);
    const std::size_t london_at = rng.bernoulli(0.4) ? rng.uniform_index(len) : len;
    for (std::size_t k = 0; k < len; ++k) {
      std::string word(k == london_at ? std::string_view("london") : pick(rng, kTruecaseWords));
      if (word == "london" || k == 0) word[0] = static_cast<char>(word[0] - 32);
      s.tokens.push_back(Token{std::move(word), "_"});
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> pos_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sentence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pos_sentence(rng));
  return out;
}

std::vector<Sentence> ner_from_pos(std::span<const Sentence> pos) {
  std::vector<Sentence> out(pos.begin(), pos.end());
  for (Sentence& s : out) {
    for (Token& t : s.tokens) {
      if (t.label != "NNP") {
        t.label = "O";
      } else {
        t.label = is_place(t.surface) ? "B-LOC" : "B-PER";
      }
    }
  }
  return out;
}

}  // namespace casefold::synthetic

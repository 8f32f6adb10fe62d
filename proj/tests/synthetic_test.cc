#include "casefold/synthetic.h"

#include <set>

#include "casefold/unicode.h"
#include "doctest.h"

using namespace casefold;

TEST_CASE("truecasing corpus follows its rule") {
  const auto corpus = synthetic::truecase_corpus(200, 5);
  REQUIRE(corpus.size() == 200);
  std::size_t with_london = 0;
  for (const auto& s : corpus) {
    REQUIRE(s.size() >= 4);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string& w = s.tokens[i].surface;
      const std::string lower = unicode::to_lower(w);
      const bool upper = i == 0 || lower == "london";
      std::string expected = lower;
      if (upper) expected[0] = static_cast<char>(expected[0] - 32);
      CHECK(w == expected);
      if (lower == "london") ++with_london;
    }
  }
  CHECK(with_london > 40);
  CHECK(synthetic::truecase_corpus(200, 5) == corpus);
  CHECK(synthetic::truecase_corpus(200, 6) != corpus);
}

TEST_CASE("tagged corpus") {
  const auto pos = synthetic::pos_corpus(300, 1);
  REQUIRE(pos.size() == 300);
  std::set<std::string> tags;
  for (const auto& s : pos) {
    for (const auto& t : s.tokens) tags.insert(t.label);
    CHECK(s.tokens[0].surface[0] >= 'A');
    CHECK(s.tokens[0].surface[0] <= 'Z');
  }
  CHECK(tags.count("NNP") == 1);
  CHECK(tags.count("MD") == 1);
  CHECK(synthetic::pos_corpus(300, 1) == pos);

  const auto ner = synthetic::ner_from_pos(pos);
  REQUIRE(ner.size() == pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    REQUIRE(ner[i].size() == pos[i].size());
    for (std::size_t k = 0; k < pos[i].size(); ++k) {
      CHECK(ner[i].tokens[k].surface == pos[i].tokens[k].surface);
      const std::string& l = ner[i].tokens[k].label;
      CHECK((l == "O" || l == "B-PER" || l == "B-LOC"));
      CHECK((l == "O") == (pos[i].tokens[k].label != "NNP"));
    }
  }
}

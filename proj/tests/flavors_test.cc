#include "casefold/flavors.h"

#include <set>

#include "casefold/error.h"
#include "casefold/synthetic.h"
#include "casefold/unicode.h"
#include "doctest.h"
#include "support/oracles.h"

using namespace casefold;
using oracle::error_code;

namespace {

class Identity : public CaseRestorer {
 public:
  std::string restore(std::string_view s) const override { return std::string(s); }
  std::string id() const override { return "identity"; }
};

class CapitalizeFirst : public CaseRestorer {
 public:
  std::string restore(std::string_view s) const override {
    std::string out(s);
    if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 32);
    return out;
  }
  std::string id() const override { return "capitalize-first"; }
};

Sentence make(std::initializer_list<std::pair<const char*, const char*>> tokens) {
  Sentence s;
  for (auto [w, l] : tokens) s.tokens.push_back(Token{w, l});
  return s;
}

bool is_lowercase(const Sentence& s) {
  for (const Token& t : s.tokens) {
    if (unicode::to_lower(t.surface) != t.surface) return false;
  }
  return true;
}

std::vector<std::string> all_labels(const std::vector<Sentence>& sentences) {
  std::vector<std::string> out;
  for (const Sentence& s : sentences) {
    for (const Token& t : s.tokens) out.push_back(t.label);
  }
  return out;
}

}  // namespace

TEST_CASE("flavor names") {
  for (Flavor f : kAllFlavors) {
    CHECK(parse_flavor(short_name(f)) == f);
    CHECK(parse_flavor(display_name(f)) == f);
  }
  CHECK(display_name(Flavor::kCasedPlusUncased50) == "C+U 50");
  CHECK(error_code([] { parse_flavor("xx"); }) != "");
}

TEST_CASE("lowercase_sentence") {
  auto s = lowercase_sentence(make({{"Apple", "NNP"}, {"pie", "NN"}}));
  CHECK(s == make({{"apple", "NNP"}, {"pie", "NN"}}));
  CHECK(lowercase_sentence(s) == s);
  CHECK(lowercase_sentence(make({{"EU", "B-ORG"}})) == make({{"eu", "B-ORG"}}));
}

TEST_CASE("C+U concatenates cased then lowercased") {
  std::vector<Sentence> train{make({{"A", "X"}}), make({{"B", "Y"}}), make({{"Cc", "Z"}})};
  auto out = flavor_train_side(train, Flavor::kCasedPlusUncased, 1, nullptr);
  REQUIRE(out.size() == 6);
  for (int i = 0; i < 3; ++i) {
    CHECK(out[i] == train[i]);
    CHECK(out[i + 3] == lowercase_sentence(train[i]));
  }
}

TEST_CASE("C+U 50 lowercases exactly half") {
  std::vector<Sentence> train{make({{"A", "X"}}), make({{"B", "X"}}), make({{"C", "X"}}),
                              make({{"D", "X"}})};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto out = flavor_train_side(train, Flavor::kCasedPlusUncased50, seed, nullptr);
    REQUIRE(out.size() == 4);
    int lowered = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (out[i] != train[i]) {
        ++lowered;
        CHECK(out[i] == lowercase_sentence(train[i]));
      }
    }
    CHECK(lowered == 2);
  }
}

TEST_CASE("C+U 50 selections depend on the seed") {
  auto train = synthetic::pos_corpus(40, 5);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto a = flavor_train_side(train, Flavor::kCasedPlusUncased50, seed, nullptr);
    CHECK(a == flavor_train_side(train, Flavor::kCasedPlusUncased50, seed, nullptr));
    seen.insert(write_column_corpus(a));
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("flavor properties on a generated corpus") {
  auto train = synthetic::pos_corpus(101, 3);
  auto test = synthetic::pos_corpus(20, 4);
  const CapitalizeFirst restorer;
  for (Flavor f : kAllFlavors) {
    const CaseRestorer* tc = needs_truecaser(f) ? &restorer : nullptr;
    auto ds = make_flavor(train, test, f, 11, tc);
    CHECK(ds.flavor == f);
    CHECK(ds.test_cased.size() == test.size());
    CHECK(ds.test_uncased.size() == test.size());
    CHECK(all_labels(ds.test_cased) == all_labels(test));
    CHECK(all_labels(ds.test_uncased) == all_labels(test));
    if (tc == nullptr) {
      for (const Sentence& s : ds.test_uncased) CHECK(is_lowercase(s));
    }
    if (f == Flavor::kCasedPlusUncased) {
      CHECK(ds.train.size() == 2 * train.size());
    } else {
      CHECK(ds.train.size() == train.size());
      CHECK(all_labels(ds.train) == all_labels(train));
    }
    if (f == Flavor::kUncased) {
      for (const Sentence& s : ds.train) CHECK(is_lowercase(s));
    }
    if (tc != nullptr) {
      CHECK(ds.truecaser_id == std::optional<std::string>("capitalize-first"));
      CHECK(ds.test_cased == ds.test_uncased);
      CHECK(ds.test_cased[0].tokens[0].surface[0] >= 'A');
    } else {
      CHECK(ds.test_cased == test);
      CHECK_FALSE(ds.truecaser_id.has_value());
    }
  }
}

TEST_CASE("TT truecases only the test side, TA both") {
  std::vector<Sentence> train{make({{"Hello", "X"}, {"World", "Y"}})};
  std::vector<Sentence> test{make({{"GOOD", "X"}, {"Day", "Y"}})};
  const CapitalizeFirst restorer;
  auto tt = make_flavor(train, test, Flavor::kTruecaseTest, 0, &restorer);
  CHECK(tt.train == train);
  CHECK(tt.test_cased[0] == make({{"Good", "X"}, {"day", "Y"}}));
  auto ta = make_flavor(train, test, Flavor::kTruecaseAll, 0, &restorer);
  CHECK(ta.train[0] == make({{"Hello", "X"}, {"world", "Y"}}));
}

TEST_CASE("identity truecaser on lowercase test") {
  std::vector<Sentence> test{make({{"a", "X"}, {"b", "Y"}})};
  const Identity id;
  auto ds = make_flavor(test, test, Flavor::kTruecaseTest, 0, &id);
  CHECK(ds.test_cased == lowercase_all(test));
}

TEST_CASE("truecaser preconditions") {
  std::vector<Sentence> s{make({{"a", "X"}})};
  const Identity id;
  CHECK(error_code([&] { make_flavor(s, s, Flavor::kTruecaseTest, 0, nullptr); }) ==
        "MissingTruecaser");
  CHECK(error_code([&] { make_flavor(s, s, Flavor::kTruecaseAll, 0, nullptr); }) ==
        "MissingTruecaser");
  CHECK(error_code([&] { make_flavor(s, s, Flavor::kCased, 0, &id); }) == "UnexpectedTruecaser");
}

TEST_CASE("multi-byte tokens keep their boundaries") {
  std::vector<Sentence> test{make({{"ÉCOLE", "X"}, {"été", "Y"}})};
  class Upper : public CaseRestorer {
   public:
    std::string restore(std::string_view s) const override {
      std::u32string u = unicode::decode(s);
      for (char32_t& c : u) c = unicode::to_upper(c);
      return unicode::encode(u);
    }
    std::string id() const override { return "upper"; }
  } upper;
  auto out = truecase_sentence(test[0], upper);
  CHECK(out == make({{"ÉCOLE", "X"}, {"ÉTÉ", "Y"}}));
}

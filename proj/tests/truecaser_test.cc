#include "casefold/truecaser.h"

#include "casefold/synthetic.h"
#include "casefold/unicode.h"
#include "doctest.h"
#include "support/oracles.h"

using namespace casefold;
using namespace casefold::truecase;
using oracle::error_code;

namespace {

TruecaserConfig small_config() {
  TruecaserConfig cfg;
  cfg.hidden_size = 24;
  cfg.embed_size = 24;
  cfg.layers = 1;
  cfg.batch_size = 4;
  cfg.epochs = 60;
  cfg.adam.learning_rate = 0.01;
  return cfg;
}

Sentence words(std::initializer_list<const char*> ws) {
  Sentence s;
  for (const char* w : ws) s.tokens.push_back(Token{w, "_"});
  return s;
}

const TrainResult& overfit_model() {
  static const TrainResult result = [] {
    std::vector<Sentence> train{words({"London", "is", "big"}), words({"We", "like", "London"}),
                                words({"It", "is", "big"}), words({"We", "are", "here"})};
    return train_truecaser(train, train, small_config(), 7);
  }();
  return result;
}

}  // namespace

TEST_CASE("casing examples") {
  const auto ex = make_casing_example("Ab é É");
  CHECK(ex.lower_chars == std::vector<std::string>{"a", "b", " ", "é", " ", "é"});
  CHECK(ex.targets == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 1});
  CHECK(make_casing_example("").lower_chars.empty());
}

TEST_CASE("config validation") {
  TruecaserConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.embed_size = 10;
  CHECK(error_code([&] { cfg.validate(); }) == "InvalidConfig");
  cfg = TruecaserConfig{};
  cfg.layers = 0;
  CHECK(error_code([&] { cfg.validate(); }) == "InvalidConfig");
}

TEST_CASE("a small model memorizes its training sentences") {
  const auto& r = overfit_model();
  CHECK(apply_truecaser(r.model, "london is big") == "London is big");
  CHECK(apply_truecaser(r.model, "we like london") == "We like London");
  CHECK(r.log.epochs.size() == 60);
  CHECK(r.log.selected_epoch >= 1);
  double best = r.log.epochs[0].dev_loss;
  for (const auto& e : r.log.epochs) best = std::min(best, e.dev_loss);
  CHECK(r.log.epochs[r.log.selected_epoch - 1].dev_loss == best);
}

TEST_CASE("restoration only changes case") {
  const auto& model = overfit_model().model;
  CHECK(apply_truecaser(model, "") == "");
  for (const char* text : {"london is big", "unseen ünïcode words", "x  y", "123 !?"}) {
    const std::string out = apply_truecaser(model, text);
    CHECK(unicode::to_lower(out) == text);
  }
}

TEST_CASE("serialization round trip") {
  const auto& model = overfit_model().model;
  const std::string bytes = model.serialize();
  const auto copy = TruecaserModel::parse(bytes);
  CHECK(copy.serialize() == bytes);
  CHECK(copy.id() == model.id());
  for (const char* text : {"london is big", "we are here", "something else entirely"}) {
    CHECK(apply_truecaser(copy, text) == apply_truecaser(model, text));
  }
}

TEST_CASE("training is deterministic per seed") {
  const auto corpus = synthetic::truecase_corpus(12, 3);
  auto cfg = small_config();
  cfg.epochs = 2;
  const auto a = train_truecaser(corpus, corpus, cfg, 11);
  const auto b = train_truecaser(corpus, corpus, cfg, 11);
  const auto c = train_truecaser(corpus, corpus, cfg, 12);
  CHECK(a.model.serialize() == b.model.serialize());
  CHECK(a.model.serialize() != c.model.serialize());
}

TEST_CASE("caseless text scores zero") {
  std::vector<Sentence> digits{words({"12", "34"}), words({"5", "6", "7"})};
  auto cfg = small_config();
  cfg.epochs = 2;
  const auto r = train_truecaser(digits, digits, cfg, 1);
  CHECK(evaluate_truecaser(r.model, digits) == 0.0);
}

TEST_CASE("empty splits are rejected") {
  std::vector<Sentence> some{words({"A"})};
  CHECK(error_code([&] { train_truecaser({}, some, small_config(), 1); }) == "EmptySplit");
  CHECK(error_code([&] { train_truecaser(some, {}, small_config(), 1); }) == "EmptySplit");
}

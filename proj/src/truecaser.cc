#include "casefold/truecaser.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "casefold/error.h"
#include "casefold/log.h"
#include "casefold/metrics.h"
#include "casefold/model_io.h"
#include "casefold/unicode.h"

namespace casefold::truecase {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kOovStream = 3;
// Predictions are computed in chunks of this many sentences.
constexpr std::size_t kInferenceBatch = 64;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

nlohmann::json config_to_json(const TruecaserConfig& c) {
  return {{"hidden_size", c.hidden_size},
          {"embed_size", c.embed_size},
          {"layers", c.layers},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"oov_policy", std::string(to_string(c.oov.kind))},
          {"oov_rate", c.oov.rate}};
}

TruecaserConfig config_from_json(const nlohmann::json& j) {
  TruecaserConfig c;
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.embed_size = j.at("embed_size").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<int>();
  c.adam.learning_rate = j.at("learning_rate").get<double>();
  c.adam.beta1 = j.at("beta1").get<double>();
  c.adam.beta2 = j.at("beta2").get<double>();
  c.adam.epsilon = j.at("epsilon").get<double>();
  c.oov.kind = parse_oov_kind(j.at("oov_policy").get<std::string>());
  c.oov.rate = j.at("oov_rate").get<double>();
  return c;
}

}  // namespace

void TruecaserConfig::validate() const {
  if (hidden_size == 0 || embed_size == 0 || layers == 0 || batch_size == 0 || epochs <= 0) {
    throw UsageError("InvalidConfig", "truecaser sizes and epochs must be positive");
  }
  if (embed_size != hidden_size) {
    throw UsageError("InvalidConfig", "truecaser embedding size must equal the hidden size");
  }
  if (!(oov.rate >= 0.0 && oov.rate <= 1.0)) {
    throw UsageError("InvalidConfig", "OOV rate must lie in [0, 1]");
  }
}

CasingExample make_casing_example(std::string_view text) {
  CasingExample ex;
  for (char32_t c : unicode::decode(text)) {
    ex.lower_chars.push_back(unicode::encode(unicode::to_lower(c)));
    ex.targets.push_back(unicode::is_upper(c) && unicode::to_lower(c) != c ? 1 : 0);
  }
  return ex;
}

std::vector<CasingExample> make_casing_examples(std::span<const Sentence> sentences) {
  std::vector<CasingExample> out;
  out.reserve(sentences.size());
  for (const Sentence& s : sentences) out.push_back(make_casing_example(sentence_text(s)));
  return out;
}

TruecaserModel::TruecaserModel(TruecaserConfig config, Vocabulary vocab,
                               std::uint64_t init_seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  Rng rng(init_seed);
  // A one-hot input has fan-in 1, hence the unit bound.
  embedding_ = store_.add_uniform("embed.char", vocab_.size(), config_.embed_size, 1.0, rng);
  lstm_ = nn::make_bilstm(store_, "lstm", config_.embed_size, config_.hidden_size,
                          config_.layers, rng);
  output_ = nn::make_dense(store_, "output", 2 * config_.hidden_size, 2, rng);
}

nn::Value TruecaserModel::logits(const std::vector<std::vector<int>>& ids,
                                 std::vector<std::uint8_t>* flat_mask) const {
  const std::size_t B = ids.size();
  std::size_t T = 0;
  for (const auto& seq : ids) T = std::max(T, seq.size());
  std::vector<nn::Value> inputs;
  std::vector<std::vector<std::uint8_t>> mask(T, std::vector<std::uint8_t>(B, 0));
  flat_mask->assign(T * B, 0);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<int> step(B, vocab_.pad_id());
    for (std::size_t b = 0; b < B; ++b) {
      if (t < ids[b].size()) {
        step[b] = ids[b][t];
        mask[t][b] = 1;
        (*flat_mask)[t * B + b] = 1;
      }
    }
    inputs.push_back(nn::gather_rows(embedding_, step));
  }
  auto out = nn::run_bilstm(lstm_, inputs, mask, nn::BiLstmOptions{});
  return nn::apply(output_, nn::concat_rows(out.outputs));
}

nn::Value TruecaserModel::batch_loss(std::span<const CasingExample* const> batch, bool training,
                                     Rng* rng) const {
  std::vector<std::vector<int>> ids;
  ids.reserve(batch.size());
  for (const CasingExample* ex : batch) {
    ids.push_back(encode(ex->lower_chars, vocab_,
                         training ? EncodeMode::kTrain : EncodeMode::kEval, rng));
  }
  std::vector<std::uint8_t> mask;
  nn::Value out = logits(ids, &mask);
  const std::size_t B = batch.size();
  std::vector<int> targets(mask.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) targets[i] = batch[i % B]->targets[i / B];
  }
  return nn::softmax_cross_entropy(out, targets, mask);
}

double TruecaserModel::mean_loss(std::span<const CasingExample> examples) const {
  nn::NoGradGuard no_grad;
  double total = 0.0;
  std::size_t chars = 0;
  for (std::size_t i = 0; i < examples.size(); i += kInferenceBatch) {
    std::vector<const CasingExample*> batch;
    std::size_t batch_chars = 0;
    for (std::size_t k = i; k < std::min(examples.size(), i + kInferenceBatch); ++k) {
      batch.push_back(&examples[k]);
      batch_chars += examples[k].targets.size();
    }
    if (batch_chars == 0) continue;
    total += batch_loss(batch, false, nullptr).item() * static_cast<double>(batch_chars);
    chars += batch_chars;
  }
  return chars == 0 ? 0.0 : total / static_cast<double>(chars);
}

std::vector<std::vector<std::uint8_t>> TruecaserModel::predict(
    std::span<const CasingExample> examples) const {
  nn::NoGradGuard no_grad;
  std::vector<std::vector<std::uint8_t>> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); i += kInferenceBatch) {
    const std::size_t end = std::min(examples.size(), i + kInferenceBatch);
    std::vector<std::vector<int>> ids;
    for (std::size_t k = i; k < end; ++k) ids.push_back(encode(examples[k].lower_chars, vocab_));
    const std::size_t B = ids.size();
    bool any = false;
    for (const auto& seq : ids) any = any || !seq.empty();
    if (!any) {
      for (std::size_t k = i; k < end; ++k) out.emplace_back();
      continue;
    }
    std::vector<std::uint8_t> mask;
    nn::Value scores = logits(ids, &mask);
    for (std::size_t b = 0; b < B; ++b) {
      std::vector<std::uint8_t> pred(ids[b].size(), 0);
      for (std::size_t t = 0; t < pred.size(); ++t) {
        const double* row = scores.data().row(t * B + b);
        pred[t] = row[1] > row[0] ? 1 : 0;
      }
      out.push_back(std::move(pred));
    }
  }
  return out;
}

std::string TruecaserModel::restore(std::string_view lowercased) const {
  return apply_truecaser(*this, lowercased);
}

std::string TruecaserModel::id() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "truecaser-%016llx",
                static_cast<unsigned long long>(fnv1a(serialize())));
  return buf;
}

std::string TruecaserModel::serialize() const {
  nlohmann::json meta = {{"kind", "truecaser"},
                         {"config", config_to_json(config_)},
                         {"vocabulary", vocab_.serialize()}};
  return nn::serialize_model(meta, store_);
}

TruecaserModel TruecaserModel::parse(std::string_view bytes) {
  nn::ModelFile file = nn::parse_model(bytes);
  try {
    if (file.meta.at("kind") != "truecaser") {
      throw DataError("BadModel", "not a truecaser model");
    }
    TruecaserModel model(config_from_json(file.meta.at("config")),
                         Vocabulary::parse(file.meta.at("vocabulary").get<std::string>()), 0);
    nn::load_parameters(file, model.store_);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("BadModel", std::string("bad truecaser metadata: ") + e.what());
  }
}

TrainResult train_truecaser(std::span<const Sentence> train, std::span<const Sentence> dev,
                            const TruecaserConfig& config, std::uint64_t seed) {
  config.validate();
  if (train.empty()) throw DataError("EmptySplit", "truecaser training split is empty");
  if (dev.empty()) throw DataError("EmptySplit", "truecaser dev split is empty");

  const auto train_examples = make_casing_examples(train);
  const auto dev_examples = make_casing_examples(dev);
  std::vector<std::vector<std::string>> unit_seqs;
  for (const auto& ex : train_examples) unit_seqs.push_back(ex.lower_chars);
  Vocabulary vocab = build_vocabulary(std::span<const std::vector<std::string>>(unit_seqs),
                                      UnitKind::kCharacter, config.oov);

  TruecaserModel model(config, std::move(vocab), derive_seed(seed, kInitStream));
  Rng shuffle_rng(derive_seed(seed, kShuffleStream));
  Rng oov_rng(derive_seed(seed, kOovStream));
  nn::Adam adam(config.adam);

  TrainingLog log;
  double best_dev = std::numeric_limits<double>::infinity();
  std::vector<nn::Matrix> best = model.parameters().snapshot();
  std::vector<std::size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t chars = 0;
    for (std::size_t i = 0; i < order.size(); i += config.batch_size) {
      std::vector<const CasingExample*> batch;
      std::size_t batch_chars = 0;
      for (std::size_t k = i; k < std::min(order.size(), i + config.batch_size); ++k) {
        batch.push_back(&train_examples[order[k]]);
        batch_chars += train_examples[order[k]].targets.size();
      }
      model.parameters().zero_grad();
      nn::Value loss = model.batch_loss(batch, true, &oov_rng);
      if (!std::isfinite(loss.item())) {
        throw NumericError("NonFiniteLoss", "truecaser loss became non-finite in epoch " +
                                                std::to_string(epoch));
      }
      loss.backward();
      adam.step(model.parameters());
      loss_sum += loss.item() * static_cast<double>(batch_chars);
      chars += batch_chars;
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = chars == 0 ? 0.0 : loss_sum / static_cast<double>(chars);
    entry.dev_loss = model.mean_loss(dev_examples);
    log.epochs.push_back(entry);
    if (entry.dev_loss < best_dev) {
      best_dev = entry.dev_loss;
      best = model.parameters().snapshot();
      log.selected_epoch = epoch;
    }
    log_debug("truecaser epoch " + std::to_string(epoch) + " train_loss " +
              std::to_string(entry.train_loss) + " dev_loss " + std::to_string(entry.dev_loss));
  }
  model.parameters().restore(best);
  return TrainResult{std::move(model), std::move(log)};
}

TrainResult train_truecaser(const LabeledCorpus& corpus, const TruecaserConfig& config,
                            std::uint64_t seed) {
  if (!corpus.dev.empty()) return train_truecaser(corpus.train, corpus.dev, config, seed);
  const std::size_t held = std::max<std::size_t>(1, corpus.train.size() / 10);
  if (corpus.train.size() <= held) {
    throw DataError("EmptySplit", "too few training sentences to hold out a dev split");
  }
  std::span<const Sentence> all(corpus.train);
  return train_truecaser(all.first(all.size() - held), all.last(held), config, seed);
}

std::string apply_truecaser(const TruecaserModel& model, std::string_view lowercased) {
  if (lowercased.empty()) return {};
  std::u32string text = unicode::decode(lowercased);
  CasingExample ex;
  for (char32_t c : text) ex.lower_chars.push_back(unicode::encode(c));
  ex.targets.assign(text.size(), 0);
  auto pred = model.predict(std::span<const CasingExample>(&ex, 1)).front();
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!pred[i]) continue;
    const char32_t upper = unicode::to_upper(text[i]);
    // Only mappings that lowercase back to the input keep the text recoverable.
    if (unicode::to_lower(upper) == text[i]) text[i] = upper;
  }
  return unicode::encode(text);
}

double evaluate_truecaser(const TruecaserModel& model, std::span<const Sentence> sentences) {
  const auto examples = make_casing_examples(sentences);
  const auto predictions = model.predict(examples);
  std::vector<std::uint8_t> gold, pred;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    gold.insert(gold.end(), examples[i].targets.begin(), examples[i].targets.end());
    pred.insert(pred.end(), predictions[i].begin(), predictions[i].end());
  }
  return metrics::char_f1(gold, pred);
}

}  // namespace casefold::truecase

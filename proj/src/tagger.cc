#include "casefold/tagger.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "casefold/adam.h"
#include "casefold/error.h"
#include "casefold/log.h"
#include "casefold/metrics.h"
#include "casefold/model_io.h"

namespace casefold::tagging {
namespace {

constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kShuffleStream = 12;
constexpr std::uint64_t kDropoutStream = 13;
constexpr std::uint64_t kOovStream = 14;

std::size_t parse_size(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0) {
    throw UsageError("InvalidEmbeddings", std::string(what) + " must be a positive integer, got '" +
                                              std::string(text) + "'");
  }
  return value;
}

nlohmann::json config_to_json(const TaggerConfig& c) {
  return {{"hidden_units", c.hidden_units},
          {"lstm_dropout", c.lstm_dropout},
          {"recurrent_dropout", c.recurrent_dropout},
          {"learning_rate", c.learning_rate},
          {"head", std::string(to_string(c.head))},
          {"embeddings", c.embeddings.to_spec()},
          {"word_dim", c.embeddings.word_dim},
          {"max_epochs", c.max_epochs},
          {"min_delta", c.min_delta},
          {"patience", c.patience},
          {"batch_size", c.batch_size},
          {"word_oov_policy", std::string(to_string(c.word_oov.kind))},
          {"word_oov_rate", c.word_oov.rate},
          {"clip_norm", c.clip_norm}};
}

TaggerConfig config_from_json(const nlohmann::json& j) {
  TaggerConfig c;
  c.hidden_units = j.at("hidden_units").get<std::size_t>();
  c.lstm_dropout = j.at("lstm_dropout").get<double>();
  c.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.head = parse_head(j.at("head").get<std::string>());
  c.embeddings = EmbeddingSource::parse(j.at("embeddings").get<std::string>());
  c.embeddings.word_dim = j.at("word_dim").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.min_delta = j.at("min_delta").get<double>();
  c.patience = j.at("patience").get<int>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.word_oov.kind = parse_oov_kind(j.at("word_oov_policy").get<std::string>());
  c.word_oov.rate = j.at("word_oov_rate").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  return c;
}

std::vector<std::vector<std::string>> gold_labels(std::span<const Sentence> sentences) {
  std::vector<std::vector<std::string>> out;
  out.reserve(sentences.size());
  for (const Sentence& s : sentences) out.push_back(labels(s));
  return out;
}

}  // namespace

std::string_view to_string(Head head) { return head == Head::kCrf ? "crf" : "softmax"; }

Head parse_head(std::string_view name) {
  if (name == "crf") return Head::kCrf;
  if (name == "softmax") return Head::kSoftmax;
  throw UsageError("UnknownHead", "unknown head '" + std::string(name) +
                                      "' (expected crf or softmax)");
}

EmbeddingSource EmbeddingSource::parse(std::string_view spec) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw UsageError("InvalidEmbeddings", "expected trainable:D, static:PATH or char:WD,CD,CH");
  }
  const std::string_view kind = spec.substr(0, colon);
  const std::string_view arg = spec.substr(colon + 1);
  EmbeddingSource src;
  if (kind == "trainable") {
    src.kind = Kind::kTrainable;
    src.word_dim = parse_size(arg, "embedding dimension");
  } else if (kind == "static") {
    if (arg.empty()) throw UsageError("InvalidEmbeddings", "static embeddings need a path");
    src.kind = Kind::kStaticFile;
    src.static_path = std::string(arg);
  } else if (kind == "char") {
    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos <= arg.size()) {
      std::size_t comma = arg.find(',', pos);
      if (comma == std::string_view::npos) comma = arg.size();
      dims.push_back(parse_size(arg.substr(pos, comma - pos), "char embedding size"));
      pos = comma + 1;
    }
    if (dims.size() != 3) throw UsageError("InvalidEmbeddings", "char:WD,CD,CH needs 3 sizes");
    src.kind = Kind::kTrainablePlusChar;
    src.word_dim = dims[0];
    src.char_dim = dims[1];
    src.char_hidden = dims[2];
  } else {
    throw UsageError("InvalidEmbeddings", "unknown embedding source '" + std::string(kind) + "'");
  }
  return src;
}

std::string EmbeddingSource::to_spec() const {
  switch (kind) {
    case Kind::kTrainable: return "trainable:" + std::to_string(word_dim);
    case Kind::kStaticFile: return "static:" + static_path;
    case Kind::kTrainablePlusChar:
      return "char:" + std::to_string(word_dim) + "," + std::to_string(char_dim) + "," +
             std::to_string(char_hidden);
  }
  return {};
}

TaggerConfig TaggerConfig::ner_defaults() {
  TaggerConfig c;
  c.hidden_units = 200;
  c.lstm_dropout = 0.5;
  c.learning_rate = 0.015;
  c.embeddings.kind = EmbeddingSource::Kind::kTrainablePlusChar;
  c.embeddings.word_dim = 100;
  c.embeddings.char_dim = 25;
  c.embeddings.char_hidden = 25;
  return c;
}

void TaggerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw UsageError("InvalidConfig", msg); };
  if (hidden_units == 0 || batch_size == 0 || max_epochs <= 0 || patience <= 0) {
    fail("tagger sizes, epochs and patience must be positive");
  }
  if (embeddings.kind != EmbeddingSource::Kind::kStaticFile && embeddings.word_dim == 0) {
    fail("word embedding dimension must be positive");
  }
  if (embeddings.kind == EmbeddingSource::Kind::kTrainablePlusChar &&
      (embeddings.char_dim == 0 || embeddings.char_hidden == 0)) {
    fail("char embedding sizes must be positive");
  }
  if (!(lstm_dropout >= 0.0 && lstm_dropout < 1.0) ||
      !(recurrent_dropout >= 0.0 && recurrent_dropout < 1.0)) {
    fail("dropout rates must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0)) fail("learning rate must be positive");
}

TaggerModel::TaggerModel(TaggerConfig config, Vocabulary word_vocab,
                         std::optional<Vocabulary> char_vocab, std::vector<std::string> labels,
                         std::uint64_t init_seed, const StaticEmbeddings* static_embeddings)
    : config_(std::move(config)),
      word_vocab_(std::move(word_vocab)),
      char_vocab_(std::move(char_vocab)),
      labels_(std::move(labels)) {
  config_.validate();
  if (labels_.empty()) throw UsageError("InvalidConfig", "tagger needs at least one label");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    label_index_.emplace(labels_[i], static_cast<int>(i));
  }
  const bool use_chars = config_.embeddings.kind == EmbeddingSource::Kind::kTrainablePlusChar;
  if (use_chars != char_vocab_.has_value()) {
    throw UsageError("InvalidConfig", "char vocabulary must be given iff char embeddings are used");
  }
  Rng rng(init_seed);
  if (config_.embeddings.kind == EmbeddingSource::Kind::kStaticFile) {
    if (static_embeddings != nullptr) config_.embeddings.word_dim = static_embeddings->dim;
    nn::Matrix table(word_vocab_.size(), config_.embeddings.word_dim);
    if (static_embeddings != nullptr) {
      const auto& units = word_vocab_.units();
      for (std::size_t i = 0; i < units.size(); ++i) {
        auto vec = static_embeddings->lookup(units[i]);
        std::copy(vec.begin(), vec.end(), table.row(i + 2));
      }
    }
    word_embedding_ = store_.add("embed.word", std::move(table), /*trainable=*/false);
  } else {
    // Unit bound: a one-hot input has fan-in 1.
    word_embedding_ =
        store_.add_uniform("embed.word", word_vocab_.size(), config_.embeddings.word_dim, 1.0, rng);
  }
  std::size_t input_size = config_.embeddings.word_dim;
  if (use_chars) {
    char_embedding_ = store_.add_uniform("embed.char", char_vocab_->size(),
                                         config_.embeddings.char_dim, 1.0, rng);
    char_lstm_ = nn::make_bilstm(store_, "char_lstm", config_.embeddings.char_dim,
                                 config_.embeddings.char_hidden, 1, rng);
    input_size += 2 * config_.embeddings.char_hidden;
  }
  lstm_ = nn::make_bilstm(store_, "lstm", input_size, config_.hidden_units, 1, rng);
  dense_ = nn::make_dense(store_, "dense", 2 * config_.hidden_units, labels_.size(), rng);
  if (config_.head == Head::kCrf) crf_ = crf::make_crf(store_, labels_.size());
}

int TaggerModel::label_id(const std::string& label) const {
  auto it = label_index_.find(label);
  if (it == label_index_.end()) {
    throw DataError("UnknownLabel", "label '" + label + "' is not in the model's label set");
  }
  return it->second;
}

TaggerModel::Forward TaggerModel::forward(std::span<const Sentence* const> batch, bool training,
                                          Rng* rng) const {
  const std::size_t B = batch.size();
  std::size_t T = 0;
  for (const Sentence* s : batch) T = std::max(T, s->size());
  if (B == 0 || T == 0) throw UsageError("EmptySequence", "cannot tag an empty batch");

  Forward fw;
  fw.mask.assign(T, std::vector<std::uint8_t>(B, 0));
  std::vector<std::vector<int>> word_ids(B);
  for (std::size_t b = 0; b < B; ++b) {
    word_ids[b] = encode(*batch[b], word_vocab_,
                         training ? EncodeMode::kTrain : EncodeMode::kEval, rng);
    for (std::size_t t = 0; t < batch[b]->size(); ++t) fw.mask[t][b] = 1;
  }

  // Character features: one row per real token, ordered by (b, t).
  nn::Value char_features;
  std::vector<std::vector<int>> token_row(T, std::vector<int>(B, -1));
  if (char_lstm_) {
    std::vector<std::vector<int>> char_ids;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t t = 0; t < batch[b]->size(); ++t) {
        token_row[t][b] = static_cast<int>(char_ids.size());
        auto units = char_units(batch[b]->tokens[t].surface);
        char_ids.push_back(encode(std::span<const std::string>(units), *char_vocab_));
      }
    }
    const std::size_t N = char_ids.size();
    std::size_t L = 0;
    for (const auto& ids : char_ids) L = std::max(L, ids.size());
    std::vector<nn::Value> char_inputs;
    std::vector<std::vector<std::uint8_t>> char_mask(L, std::vector<std::uint8_t>(N, 0));
    for (std::size_t k = 0; k < L; ++k) {
      std::vector<int> step(N, char_vocab_->pad_id());
      for (std::size_t n = 0; n < N; ++n) {
        if (k < char_ids[n].size()) {
          step[n] = char_ids[n][k];
          char_mask[k][n] = 1;
        }
      }
      char_inputs.push_back(nn::gather_rows(char_embedding_, step));
    }
    auto out = nn::run_bilstm(*char_lstm_, char_inputs, char_mask, nn::BiLstmOptions{});
    const nn::Value finals[] = {out.forward_final, out.backward_final};
    char_features = nn::concat_cols(finals);
  }

  std::vector<nn::Value> inputs;
  inputs.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<int> ids(B, word_vocab_.pad_id());
    for (std::size_t b = 0; b < B; ++b) {
      if (t < word_ids[b].size()) ids[b] = word_ids[b][t];
    }
    nn::Value x = nn::gather_rows(word_embedding_, ids);
    if (char_lstm_) {
      const nn::Value parts[] = {x, nn::gather_rows(char_features, token_row[t])};
      x = nn::concat_cols(parts);
    }
    inputs.push_back(x);
  }

  nn::BiLstmOptions options;
  options.dropout = config_.lstm_dropout;
  options.recurrent_dropout = config_.recurrent_dropout;
  options.training = training;
  options.rng = rng;
  auto out = nn::run_bilstm(lstm_, inputs, fw.mask, options);
  nn::Value logits = nn::apply(dense_, nn::concat_rows(out.outputs));
  fw.emissions.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    fw.emissions.push_back(nn::slice_rows(logits, t * B, (t + 1) * B));
  }
  return fw;
}

nn::Value TaggerModel::batch_loss(std::span<const Sentence* const> batch, bool training,
                                  Rng* rng) const {
  Forward fw = forward(batch, training, rng);
  const std::size_t B = batch.size();
  const std::size_t T = fw.mask.size();
  if (crf_) {
    std::vector<std::vector<int>> tags(B, std::vector<int>(T, 0));
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t t = 0; t < batch[b]->size(); ++t) {
        tags[b][t] = label_id(batch[b]->tokens[t].label);
      }
    }
    return nn::scale(crf::neg_log_likelihood_batch(fw.emissions, tags, *crf_, fw.mask),
                     1.0 / static_cast<double>(B));
  }
  std::vector<int> targets(T * B, 0);
  std::vector<std::uint8_t> flat_mask(T * B, 0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < batch[b]->size(); ++t) {
      targets[t * B + b] = label_id(batch[b]->tokens[t].label);
      flat_mask[t * B + b] = 1;
    }
  }
  return nn::softmax_cross_entropy(nn::concat_rows(fw.emissions), targets, flat_mask);
}

double TaggerModel::mean_loss(std::span<const Sentence> sentences) const {
  nn::NoGradGuard no_grad;
  double total = 0.0;
  std::size_t weight = 0;
  for (std::size_t i = 0; i < sentences.size(); i += config_.batch_size) {
    std::vector<const Sentence*> batch;
    std::size_t tokens = 0;
    for (std::size_t k = i; k < std::min(sentences.size(), i + config_.batch_size); ++k) {
      batch.push_back(&sentences[k]);
      tokens += sentences[k].size();
    }
    const std::size_t w = crf_ ? batch.size() : tokens;
    total += batch_loss(batch, false, nullptr).item() * static_cast<double>(w);
    weight += w;
  }
  return weight == 0 ? 0.0 : total / static_cast<double>(weight);
}

std::vector<std::vector<std::string>> TaggerModel::decode(
    std::span<const Sentence* const> batch) const {
  nn::NoGradGuard no_grad;
  Forward fw = forward(batch, false, nullptr);
  const std::size_t B = batch.size();
  const std::size_t C = labels_.size();
  std::vector<std::vector<std::string>> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t len = batch[b]->size();
    if (crf_) {
      nn::Matrix emissions(len, C);
      for (std::size_t t = 0; t < len; ++t) {
        std::copy(fw.emissions[t].data().row(b), fw.emissions[t].data().row(b) + C,
                  emissions.row(t));
      }
      auto best = crf::viterbi_decode(emissions, crf_->transitions.data(), crf_->start.data(),
                                      crf_->end.data());
      for (int tag : best.path) out[b].push_back(labels_[tag]);
    } else {
      for (std::size_t t = 0; t < len; ++t) {
        const double* row = fw.emissions[t].data().row(b);
        const std::size_t arg = static_cast<std::size_t>(std::max_element(row, row + C) - row);
        out[b].push_back(labels_[arg]);
      }
    }
  }
  return out;
}

std::vector<std::string> TaggerModel::predict(const Sentence& sentence) const {
  if (sentence.tokens.empty()) return {};
  const Sentence* one[] = {&sentence};
  return decode(one).front();
}

std::vector<std::vector<std::string>> TaggerModel::predict_all(
    std::span<const Sentence> sentences, std::size_t batch_size) const {
  std::vector<std::vector<std::string>> out;
  out.reserve(sentences.size());
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t i = 0; i < sentences.size(); i += batch_size) {
    std::vector<const Sentence*> batch;
    for (std::size_t k = i; k < std::min(sentences.size(), i + batch_size); ++k) {
      batch.push_back(&sentences[k]);
    }
    auto decoded = decode(batch);
    for (auto& labels : decoded) out.push_back(std::move(labels));
  }
  return out;
}

std::string TaggerModel::serialize() const {
  nlohmann::json meta = {{"kind", "tagger"},
                         {"config", config_to_json(config_)},
                         {"labels", labels_},
                         {"word_vocabulary", word_vocab_.serialize()}};
  if (char_vocab_) meta["char_vocabulary"] = char_vocab_->serialize();
  return nn::serialize_model(meta, store_);
}

TaggerModel TaggerModel::parse(std::string_view bytes) {
  nn::ModelFile file = nn::parse_model(bytes);
  try {
    if (file.meta.at("kind") != "tagger") throw DataError("BadModel", "not a tagger model");
    std::optional<Vocabulary> chars;
    if (file.meta.contains("char_vocabulary")) {
      chars = Vocabulary::parse(file.meta.at("char_vocabulary").get<std::string>());
    }
    TaggerModel model(config_from_json(file.meta.at("config")),
                      Vocabulary::parse(file.meta.at("word_vocabulary").get<std::string>()),
                      std::move(chars), file.meta.at("labels").get<std::vector<std::string>>(), 0);
    nn::load_parameters(file, model.store_);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("BadModel", std::string("bad tagger metadata: ") + e.what());
  }
}

TrainResult train_tagger(std::span<const Sentence> train, std::span<const Sentence> dev,
                         const TaggerConfig& config_in, std::uint64_t seed,
                         const StaticEmbeddings* static_embeddings) {
  TaggerConfig config = config_in;
  config.validate();
  if (train.empty()) throw DataError("EmptySplit", "tagger training split is empty");
  if (dev.empty()) throw DataError("EmptySplit", "tagger dev split is empty");

  std::set<std::string> seen;
  for (auto split : {train, dev}) {
    for (const Sentence& s : split) {
      for (const Token& t : s.tokens) seen.insert(t.label);
    }
  }
  std::vector<std::string> label_list;
  if (config.labels.empty()) {
    label_list.assign(seen.begin(), seen.end());
  } else {
    label_list = config.labels;
    std::sort(label_list.begin(), label_list.end());
    label_list.erase(std::unique(label_list.begin(), label_list.end()), label_list.end());
    for (const std::string& l : seen) {
      if (!std::binary_search(label_list.begin(), label_list.end(), l)) {
        throw DataError("UnknownLabel", "label '" + l + "' is not in the configured label set");
      }
    }
  }

  std::optional<StaticEmbeddings> loaded;
  Vocabulary word_vocab;
  if (config.embeddings.kind == EmbeddingSource::Kind::kStaticFile) {
    if (static_embeddings == nullptr) {
      loaded = load_static_embeddings(config.embeddings.static_path);
      static_embeddings = &*loaded;
    }
    config.embeddings.word_dim = static_embeddings->dim;
    std::vector<std::string> units;
    units.reserve(static_embeddings->table.size());
    for (const auto& [word, vec] : static_embeddings->table) units.push_back(word);
    for (const Sentence& s : train) {
      for (const Token& t : s.tokens) units.push_back(t.surface);
    }
    word_vocab = Vocabulary(UnitKind::kWord, OovPolicy{OovKind::kFrequencyCutoff, 0.0},
                            std::move(units));
  } else {
    word_vocab = build_vocabulary(train, UnitKind::kWord, config.word_oov);
  }
  std::optional<Vocabulary> char_vocab;
  if (config.embeddings.kind == EmbeddingSource::Kind::kTrainablePlusChar) {
    std::vector<std::vector<std::string>> seqs;
    for (const Sentence& s : train) {
      for (const Token& t : s.tokens) seqs.push_back(char_units(t.surface));
    }
    char_vocab = build_vocabulary(std::span<const std::vector<std::string>>(seqs),
                                  UnitKind::kCharacter, OovPolicy{OovKind::kFrequencyCutoff, 0.0});
  }

  TaggerModel model(config, std::move(word_vocab), std::move(char_vocab), label_list,
                    derive_seed(seed, kInitStream), static_embeddings);
  Rng shuffle_rng(derive_seed(seed, kShuffleStream));
  Rng dropout_rng(derive_seed(seed, kDropoutStream));
  Rng oov_rng(derive_seed(seed, kOovStream));
  nn::Adam adam(nn::AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
  const auto dev_gold = gold_labels(dev);

  TrainingLog log;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double reference_acc = -std::numeric_limits<double>::infinity();
  double best_acc = -std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<nn::Matrix> best = model.parameters().snapshot();
  int waited = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t i = 0; i < order.size(); i += config.batch_size) {
      std::vector<const Sentence*> batch;
      for (std::size_t k = i; k < std::min(order.size(), i + config.batch_size); ++k) {
        batch.push_back(&train[order[k]]);
      }
      model.parameters().zero_grad();
      nn::Value loss = model.batch_loss(batch, true, &dropout_rng);
      if (!std::isfinite(loss.item())) {
        throw NumericError("NonFiniteLoss", "tagger loss became non-finite in epoch " +
                                                std::to_string(epoch));
      }
      loss.backward();
      if (config.clip_norm > 0.0) model.parameters().clip_grad_norm(config.clip_norm);
      adam.step(model.parameters());
      loss_sum += loss.item();
      ++batches;
    }
    (void)oov_rng;

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, batches));
    entry.dev_loss = model.mean_loss(dev);
    entry.dev_accuracy = metrics::score_sentences(metrics::MetricKind::kAccuracy, dev_gold,
                                                  model.predict_all(dev, config.batch_size));
    log.epochs.push_back(entry);
    log_debug("tagger epoch " + std::to_string(epoch) + " train_loss " +
              std::to_string(entry.train_loss) + " dev_loss " + std::to_string(entry.dev_loss) +
              " dev_acc " + std::to_string(entry.dev_accuracy));

    if (entry.dev_accuracy > best_acc ||
        (entry.dev_accuracy == best_acc && entry.dev_loss < best_loss)) {
      best_acc = entry.dev_accuracy;
      best_loss = entry.dev_loss;
      best = model.parameters().snapshot();
      log.selected_epoch = epoch;
    }
    // min_delta is a fraction; accuracies are percentages.
    if (entry.dev_accuracy - reference_acc >= 100.0 * config.min_delta - 1e-12) {
      reference_acc = entry.dev_accuracy;
      waited = 0;
    } else if (++waited >= config.patience) {
      log.stopped_early = true;
      break;
    }
  }
  model.parameters().restore(best);
  return TrainResult{std::move(model), std::move(log)};
}

TrainResult train_tagger(const FlavoredDataset& data, std::span<const Sentence> dev,
                         const TaggerConfig& config, std::uint64_t seed,
                         const StaticEmbeddings* static_embeddings) {
  return train_tagger(data.train, dev, config, seed, static_embeddings);
}

std::vector<std::string> predict(const TaggerModel& model, const Sentence& sentence) {
  return model.predict(sentence);
}

}  // namespace casefold::tagging

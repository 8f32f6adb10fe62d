#ifndef CASEFOLD_TAGGER_H_
#define CASEFOLD_TAGGER_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "casefold/corpus.h"
#include "casefold/crf.h"
#include "casefold/embeddings.h"
#include "casefold/flavors.h"
#include "casefold/layers.h"

namespace casefold::tagging {

enum class Head { kSoftmax, kCrf };
std::string_view to_string(Head head);
Head parse_head(std::string_view name);

struct EmbeddingSource {
  enum class Kind { kTrainable, kStaticFile, kTrainablePlusChar };

  Kind kind = Kind::kTrainable;
  std::size_t word_dim = 128;
  std::string static_path;  // kStaticFile
  std::size_t char_dim = 25;     // kTrainablePlusChar
  std::size_t char_hidden = 25;  // per direction

  // "trainable:D", "static:PATH" or "char:WD,CD,CH".
  static EmbeddingSource parse(std::string_view spec);
  std::string to_spec() const;
};

struct TaggerConfig {
  std::size_t hidden_units = 512;
  double lstm_dropout = 0.0;
  double recurrent_dropout = 0.0;
  double learning_rate = 0.001;
  Head head = Head::kCrf;
  EmbeddingSource embeddings;
  int max_epochs = 40;
  double min_delta = 0.001;  // on dev accuracy as a fraction
  int patience = 4;
  std::size_t batch_size = 32;
  // Rare training words map to OOV so its embedding gets trained.
  OovPolicy word_oov{OovKind::kFrequencyCutoff, 0.01};
  double clip_norm = 5.0;
  // Fixed label inventory; empty means "labels of train and dev".
  std::vector<std::string> labels;

  // NER setting: char embeddings, hidden 200, dropout 0.5, lr 0.015.
  static TaggerConfig ner_defaults();
  // Throws UsageError "InvalidConfig".
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_accuracy = 0.0;  // percent
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  int selected_epoch = 0;
  bool stopped_early = false;
};

// Word embeddings (+ optional char BiLSTM features) -> BiLSTM -> per-step
// dense layer -> softmax or CRF.
class TaggerModel {
 public:
  // Builds and initializes the architecture. `static_embeddings` is required
  // for EmbeddingSource::kStaticFile and fills the frozen table.
  TaggerModel(TaggerConfig config, Vocabulary word_vocab, std::optional<Vocabulary> char_vocab,
              std::vector<std::string> labels, std::uint64_t init_seed,
              const StaticEmbeddings* static_embeddings = nullptr);
  TaggerModel(TaggerModel&&) = default;
  TaggerModel& operator=(TaggerModel&&) = default;
  TaggerModel(const TaggerModel&) = delete;
  TaggerModel& operator=(const TaggerModel&) = delete;

  const TaggerConfig& config() const { return config_; }
  const Vocabulary& word_vocabulary() const { return word_vocab_; }
  const std::vector<std::string>& labels() const { return labels_; }
  int label_id(const std::string& label) const;
  bool has_crf() const { return crf_.has_value(); }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  // Masked loss of a batch: mean token cross-entropy (softmax head) or mean
  // sentence negative log-likelihood (CRF head).
  nn::Value batch_loss(std::span<const Sentence* const> batch, bool training, Rng* rng) const;
  // Same quantity averaged over a whole split, without gradients.
  double mean_loss(std::span<const Sentence> sentences) const;

  std::vector<std::string> predict(const Sentence& sentence) const;
  // Sentences are processed in padded batches of `batch_size`.
  std::vector<std::vector<std::string>> predict_all(std::span<const Sentence> sentences,
                                                    std::size_t batch_size = 32) const;

  std::string serialize() const;
  static TaggerModel parse(std::string_view bytes);

 private:
  struct Forward {
    std::vector<nn::Value> emissions;  // T x [B x C]
    std::vector<std::vector<std::uint8_t>> mask;
  };
  Forward forward(std::span<const Sentence* const> batch, bool training, Rng* rng) const;
  std::vector<std::vector<std::string>> decode(std::span<const Sentence* const> batch) const;

  TaggerConfig config_;
  Vocabulary word_vocab_;
  std::optional<Vocabulary> char_vocab_;
  std::vector<std::string> labels_;
  std::map<std::string, int> label_index_;
  nn::ParameterStore store_;
  nn::Value word_embedding_;
  nn::Value char_embedding_;
  std::optional<nn::BiLstm> char_lstm_;
  nn::BiLstm lstm_;
  nn::Dense dense_;
  std::optional<crf::CrfParams> crf_;
};

struct TrainResult {
  TaggerModel model;
  TrainingLog log;
};

// Minibatch Adam with seeded per-epoch shuffling. After each epoch the dev
// token accuracy is measured; training stops at max_epochs or once it has not
// improved by min_delta for `patience` epochs, and the best-dev parameters
// are returned. Throws DataError "EmptySplit" / "UnknownLabel" and
// NumericError "NonFiniteLoss".
TrainResult train_tagger(std::span<const Sentence> train, std::span<const Sentence> dev,
                         const TaggerConfig& config, std::uint64_t seed,
                         const StaticEmbeddings* static_embeddings = nullptr);
TrainResult train_tagger(const FlavoredDataset& data, std::span<const Sentence> dev,
                         const TaggerConfig& config, std::uint64_t seed,
                         const StaticEmbeddings* static_embeddings = nullptr);

std::vector<std::string> predict(const TaggerModel& model, const Sentence& sentence);

}  // namespace casefold::tagging

#endif  // CASEFOLD_TAGGER_H_

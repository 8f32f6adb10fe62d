#ifndef CASEFOLD_TRUECASER_H_
#define CASEFOLD_TRUECASER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "casefold/adam.h"
#include "casefold/corpus.h"
#include "casefold/flavors.h"
#include "casefold/layers.h"

namespace casefold::truecase {

struct TruecaserConfig {
  std::size_t hidden_size = 300;
  std::size_t embed_size = 300;  // must equal hidden_size
  std::size_t layers = 2;
  std::size_t batch_size = 100;
  int epochs = 30;
  nn::AdamConfig adam;
  OovPolicy oov{OovKind::kFrequencyCutoff, 0.005};

  // Throws UsageError "InvalidConfig".
  void validate() const;
};

// Per-character training pair for one sentence.
struct CasingExample {
  std::vector<std::string> lower_chars;  // one UTF-8 encoded code point each
  std::vector<std::uint8_t> targets;     // 1 where the source char is uppercase
};

// The character stream is the token surfaces joined by single spaces.
CasingExample make_casing_example(std::string_view text);
std::vector<CasingExample> make_casing_examples(std::span<const Sentence> sentences);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  int selected_epoch = 0;  // 1-based epoch whose parameters were kept
};

// Character-level 2-layer BiLSTM with a binary output per character.
class TruecaserModel : public CaseRestorer {
 public:
  TruecaserModel(TruecaserConfig config, Vocabulary vocab, std::uint64_t init_seed);
  TruecaserModel(TruecaserModel&&) = default;
  TruecaserModel& operator=(TruecaserModel&&) = default;
  TruecaserModel(const TruecaserModel&) = delete;
  TruecaserModel& operator=(const TruecaserModel&) = delete;

  const TruecaserConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  // Mean per-character cross-entropy over a batch. In training mode a
  // stochastic OOV policy masks units using `rng`.
  nn::Value batch_loss(std::span<const CasingExample* const> batch, bool training,
                       Rng* rng) const;
  // Mean per-character loss over all examples, without recording gradients.
  double mean_loss(std::span<const CasingExample> examples) const;

  // 1 where the class-1 logit exceeds the class-0 logit.
  std::vector<std::vector<std::uint8_t>> predict(std::span<const CasingExample> examples) const;

  std::string restore(std::string_view lowercased) const override;
  std::string id() const override;

  std::string serialize() const;
  static TruecaserModel parse(std::string_view bytes);

 private:
  // Logits [(T*B) x 2], time-major rows, plus the flattened validity mask.
  nn::Value logits(const std::vector<std::vector<int>>& ids,
                   std::vector<std::uint8_t>* flat_mask) const;

  TruecaserConfig config_;
  Vocabulary vocab_;
  nn::ParameterStore store_;
  nn::Value embedding_;
  nn::BiLstm lstm_;
  nn::Dense output_;
};

struct TrainResult {
  TruecaserModel model;
  TrainingLog log;
};

// Minibatch Adam on per-character cross-entropy; keeps the epoch with the
// lowest dev loss. Deterministic for a given seed. Throws DataError
// "EmptySplit" and NumericError "NonFiniteLoss".
TrainResult train_truecaser(std::span<const Sentence> train, std::span<const Sentence> dev,
                            const TruecaserConfig& config, std::uint64_t seed);
// Uses corpus.dev, or the last 10% of corpus.train when dev is empty.
TrainResult train_truecaser(const LabeledCorpus& corpus, const TruecaserConfig& config,
                            std::uint64_t seed);

std::string apply_truecaser(const TruecaserModel& model, std::string_view lowercased);

// Character F1 (percent) of the uppercase class over make_casing_examples.
double evaluate_truecaser(const TruecaserModel& model, std::span<const Sentence> sentences);

}  // namespace casefold::truecase

#endif  // CASEFOLD_TRUECASER_H_

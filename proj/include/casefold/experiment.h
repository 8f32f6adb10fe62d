#ifndef CASEFOLD_EXPERIMENT_H_
#define CASEFOLD_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "casefold/corpus.h"
#include "casefold/flavors.h"
#include "casefold/metrics.h"
#include "casefold/tagger.h"
#include "casefold/truecaser.h"

namespace casefold::experiment {

// Flat "key = value" file; '#' starts a comment. Relative paths are resolved
// against the directory of the config file.
struct ExperimentConfig {
  std::string task = "pos";  // pos or ner
  std::string train;
  std::string dev;  // optional: last 10% of train when empty
  std::string test;
  std::size_t token_col = 0;
  std::size_t label_col = 1;
  std::vector<Flavor> flavors;
  std::uint64_t seed = 0;
  std::string truecaser;  // model path; trained on the train split when empty
  tagging::TaggerConfig tagger;
  truecase::TruecaserConfig truecaser_config;
  metrics::MetricKind metric = metrics::MetricKind::kAccuracy;
  std::vector<std::string> tables{"matrix"};
  std::vector<std::string> encodings;                            // embedding specs
  std::vector<std::pair<std::string, std::string>> extra_tests;  // name, path
  std::string out;
  // Every key = value pair as written, for the manifest.
  std::vector<std::pair<std::string, std::string>> entries;
};

// Throws UsageError "BadConfigLine", "UnknownKey", "MissingSeed", "NoFlavors"
// or "MissingPath".
ExperimentConfig parse_experiment_config(std::string_view text,
                                         const std::filesystem::path& base_dir = {});
// Also checks that every referenced file exists (DataError "FileNotFound").
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentData {
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
  std::vector<std::pair<std::string, std::vector<Sentence>>> extra_tests;
};

ExperimentData load_experiment_data(const ExperimentConfig& config);

// Trains one tagger per (flavor, head, embeddings) and caches it, so the
// tables share models. Flavors needing a truecaser use the given one, or one
// trained on the train split on first use.
class Runner {
 public:
  Runner(const ExperimentConfig& config, const ExperimentData& data,
         const CaseRestorer* truecaser = nullptr);

  metrics::ReportRow score(Flavor flavor, const tagging::TaggerConfig& tagger,
                           std::span<const Sentence> test);
  metrics::EvalReport matrix(const tagging::TaggerConfig& tagger);
  const tagging::TaggerModel& model(Flavor flavor, const tagging::TaggerConfig& tagger);
  const CaseRestorer* truecaser_for(Flavor flavor);

 private:
  const ExperimentConfig& config_;
  const ExperimentData& data_;
  const CaseRestorer* truecaser_;
  std::unique_ptr<truecase::TruecaserModel> owned_truecaser_;
  std::map<std::string, std::unique_ptr<tagging::TaggerModel>> models_;
};

// Flavor matrix of one configuration; the metric is config.metric.
metrics::EvalReport evaluate_flavor_matrix(const ExperimentConfig& config,
                                           const ExperimentData& data,
                                           const CaseRestorer* truecaser = nullptr);

// Rows are flavors, one column per variant, cells are rounded averages.
std::string comparison_tsv(const std::vector<std::string>& columns,
                           const std::vector<std::pair<Flavor, std::vector<double>>>& rows);

// Writes the requested tables (matrix.tsv, crf_ablation.tsv, encodings.tsv,
// datasets.tsv) into `out_dir`, returning file name -> contents.
std::map<std::string, std::string> reproduce_tables(const ExperimentConfig& config,
                                                    const ExperimentData& data,
                                                    const std::filesystem::path& out_dir,
                                                    const CaseRestorer* truecaser = nullptr);

// Config echo, seed, code version and wall time as pretty JSON.
std::string make_manifest(std::string_view command,
                          const std::vector<std::pair<std::string, std::string>>& config,
                          std::uint64_t seed, double wall_seconds);

std::string_view code_version();

}  // namespace casefold::experiment

#endif  // CASEFOLD_EXPERIMENT_H_

#include "casefold/experiment.h"

#include <filesystem>

#include <json.hpp>

#include "casefold/synthetic.h"
#include "doctest.h"
#include "support/oracles.h"

using namespace casefold;
using namespace casefold::experiment;
using oracle::error_code;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = "train = a.txt\ntest = b.txt\nflavors = c\nseed = 1\n";

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("casefold_experiment_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config grammar") {
  const auto cfg = parse_experiment_config(
      "# comment\n"
      "train = data/train.txt   # trailing comment\n"
      "dev=/abs/dev.txt\n"
      "test = test.txt\n"
      "flavors = c, u cu50\n"
      "seed = 42\n"
      "head = softmax\n"
      "embeddings = static:vec.txt\n"
      "hidden = 64\n"
      "learning_rate = 0.01\n"
      "tables = matrix crf_ablation\n"
      "truecaser_hidden = 64\n"
      "extra_test.web = web.txt\n",
      "/base");
  CHECK(cfg.train == "/base/data/train.txt");
  CHECK(cfg.dev == "/abs/dev.txt");
  CHECK(cfg.flavors ==
        std::vector<Flavor>{Flavor::kCased, Flavor::kUncased, Flavor::kCasedPlusUncased50});
  CHECK(cfg.seed == 42);
  CHECK(cfg.tagger.head == tagging::Head::kSoftmax);
  CHECK(cfg.tagger.embeddings.static_path == "/base/vec.txt");
  CHECK(cfg.tagger.hidden_units == 64);
  CHECK(cfg.tagger.learning_rate == 0.01);
  CHECK(cfg.tables == std::vector<std::string>{"matrix", "crf_ablation"});
  CHECK(cfg.truecaser_config.hidden_size == 64);
  CHECK(cfg.truecaser_config.embed_size == 64);
  REQUIRE(cfg.extra_tests.size() == 1);
  CHECK(cfg.extra_tests[0].first == "web");
  CHECK(cfg.entries.size() == 12);
  CHECK(cfg.entries[0].first == "train");
  CHECK(cfg.entries[0].second == "data/train.txt");
}

TEST_CASE("ner task switches defaults regardless of key order") {
  const auto cfg = parse_experiment_config(
      "train = a\ntest = b\nflavors = all\nhidden = 50\nseed = 3\ntask = ner\n");
  CHECK(cfg.task == "ner");
  CHECK(cfg.metric == metrics::MetricKind::kSpanF1);
  CHECK(cfg.tagger.hidden_units == 50);
  CHECK(cfg.tagger.lstm_dropout == 0.5);
  CHECK(cfg.flavors.size() == 6);
}

TEST_CASE("config errors") {
  CHECK(error_code([] { parse_experiment_config(std::string(kMinimal) + "oops\n"); }) ==
        "BadConfigLine");
  CHECK(error_code([] { parse_experiment_config(std::string(kMinimal) + "colour = red\n"); }) ==
        "UnknownKey");
  CHECK(error_code([] { parse_experiment_config("train = a\ntest = b\nflavors = c\n"); }) ==
        "MissingSeed");
  CHECK(error_code([] { parse_experiment_config("train = a\ntest = b\nseed = 1\n"); }) ==
        "NoFlavors");
  CHECK(error_code([] { parse_experiment_config("train = a\nflavors = c\nseed = 1\n"); }) ==
        "MissingPath");
  CHECK(error_code([] { parse_experiment_config(std::string(kMinimal) + "hidden = lots\n"); }) ==
        "BadConfigLine");
  CHECK(error_code([] { parse_experiment_config(std::string(kMinimal) + "tables = encodings\n"); }) ==
        "BadConfigLine");
  CHECK(error_code([] { load_experiment_config("/nonexistent/casefold.cfg"); }) == "FileNotFound");
}

TEST_CASE("comparison tables") {
  const std::string tsv = comparison_tsv(
      {"No CRF", "CRF"}, {{Flavor::kCased, {92.795, 90.0}}, {Flavor::kCasedPlusUncased, {1, 2}}});
  CHECK(tsv == "flavor\tNo CRF\tCRF\nC\t92.80\t90.00\nC+U\t1.00\t2.00\n");
}

TEST_CASE("manifest") {
  const std::string m = make_manifest("flavor-matrix", {{"seed", "7"}, {"hidden", "8"}}, 7, 1.5);
  const auto j = nlohmann::ordered_json::parse(m);
  CHECK(j["command"] == "flavor-matrix");
  CHECK(j["version"] == std::string(code_version()));
  CHECK(j["seed"] == 7);
  CHECK(j["config"]["hidden"] == "8");
  CHECK(j["wall_time_seconds"] == 1.5);
  CHECK(j.begin().key() == "command");
}

TEST_CASE("small flavor matrix is deterministic") {
  const fs::path dir = scratch_dir("matrix");
  const auto pos = synthetic::pos_corpus(60, 5);
  write_file((dir / "train.txt").string(),
             write_column_corpus(std::span(pos).first(40)));
  write_file((dir / "test.txt").string(), write_column_corpus(std::span(pos).subspan(40)));
  write_file((dir / "run.cfg").string(),
             "train = train.txt\ntest = test.txt\nflavors = c u cu cu50\nseed = 5\n"
             "hidden = 8\nembeddings = trainable:8\nmax_epochs = 2\nhead = softmax\n");
  const auto cfg = load_experiment_config((dir / "run.cfg").string());
  const auto data = load_experiment_data(cfg);
  CHECK(data.train.size() == 36);
  CHECK(data.dev.size() == 4);
  const auto a = evaluate_flavor_matrix(cfg, data);
  const auto b = evaluate_flavor_matrix(cfg, data);
  CHECK(a.rows.size() == 4);
  CHECK(a.to_tsv() == b.to_tsv());
  CHECK(a.to_json() == b.to_json());
  for (const auto& [flavor, row] : a.rows) {
    CHECK(row.test_cased >= 0.0);
    CHECK(row.test_cased <= 100.0);
  }
  fs::remove_all(dir);
}

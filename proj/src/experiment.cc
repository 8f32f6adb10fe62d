#include "casefold/experiment.h"

#include <algorithm>
#include <charconv>
#include <iterator>
#include <set>

#include "casefold/error.h"
#include "casefold/log.h"
#include "json.hpp"

#ifndef CASEFOLD_VERSION
#define CASEFOLD_VERSION "unknown"
#endif

namespace casefold::experiment {
namespace {

const std::set<std::string> kTables = {"matrix", "crf_ablation", "encodings", "datasets"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view text, std::string_view delims) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find_first_of(delims, pos);
    const std::string_view piece = trim(text.substr(pos, end - pos));
    if (!piece.empty()) out.emplace_back(piece);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, std::size_t line) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw UsageError("BadConfigLine", "line " + std::to_string(line) + ": '" + std::string(key) +
                                          "' expects a number, got '" + std::string(value) + "'");
  }
  return out;
}

std::string resolve(const std::filesystem::path& base, const std::string& path) {
  if (path.empty() || base.empty()) return path;
  std::filesystem::path p(path);
  return p.is_absolute() ? path : (base / p).string();
}

tagging::EmbeddingSource resolve_embeddings(const std::filesystem::path& base,
                                            std::string_view spec) {
  tagging::EmbeddingSource src = tagging::EmbeddingSource::parse(spec);
  if (src.kind == tagging::EmbeddingSource::Kind::kStaticFile) {
    src.static_path = resolve(base, src.static_path);
  }
  return src;
}

void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw DataError("FileNotFound", "cannot open '" + path + "'");
  }
}

std::vector<std::vector<std::string>> gold_of(std::span<const Sentence> sentences) {
  std::vector<std::vector<std::string>> out;
  out.reserve(sentences.size());
  for (const Sentence& s : sentences) out.push_back(labels(s));
  return out;
}

}  // namespace

std::string_view code_version() { return CASEFOLD_VERSION; }

ExperimentConfig parse_experiment_config(std::string_view text,
                                         const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::vector<std::size_t> line_of;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || trim(line.substr(0, eq)).empty()) {
      throw UsageError("BadConfigLine",
                       "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    cfg.entries.emplace_back(std::string(trim(line.substr(0, eq))),
                             std::string(trim(line.substr(eq + 1))));
    line_of.push_back(line_no);
  }

  for (const auto& [key, value] : cfg.entries) {
    if (key != "task") continue;
    if (value == "ner") {
      cfg.task = "ner";
      cfg.tagger = tagging::TaggerConfig::ner_defaults();
      cfg.metric = metrics::MetricKind::kSpanF1;
    } else if (value == "pos") {
      cfg.task = "pos";
    } else {
      throw UsageError("BadConfigLine", "task must be pos or ner, got '" + value + "'");
    }
  }

  bool have_seed = false;
  for (std::size_t i = 0; i < cfg.entries.size(); ++i) {
    const std::string& key = cfg.entries[i].first;
    const std::string& value = cfg.entries[i].second;
    const std::size_t ln = line_of[i];
    auto size_value = [&] { return parse_number<std::size_t>(key, value, ln); };
    auto int_value = [&] { return parse_number<int>(key, value, ln); };
    auto double_value = [&] { return parse_number<double>(key, value, ln); };
    if (key == "task") {
    } else if (key == "train") {
      cfg.train = resolve(base_dir, value);
    } else if (key == "dev") {
      cfg.dev = resolve(base_dir, value);
    } else if (key == "test") {
      cfg.test = resolve(base_dir, value);
    } else if (key == "token_col") {
      cfg.token_col = size_value();
    } else if (key == "label_col") {
      cfg.label_col = size_value();
    } else if (key == "flavors") {
      cfg.flavors.clear();
      if (value == "all") {
        cfg.flavors.assign(std::begin(kAllFlavors), std::end(kAllFlavors));
      } else {
        for (const std::string& name : split(value, ", ")) cfg.flavors.push_back(parse_flavor(name));
      }
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(key, value, ln);
      have_seed = true;
    } else if (key == "truecaser") {
      cfg.truecaser = resolve(base_dir, value);
    } else if (key == "truecaser_hidden") {
      cfg.truecaser_config.hidden_size = cfg.truecaser_config.embed_size = size_value();
    } else if (key == "truecaser_layers") {
      cfg.truecaser_config.layers = size_value();
    } else if (key == "truecaser_epochs") {
      cfg.truecaser_config.epochs = int_value();
    } else if (key == "truecaser_batch_size") {
      cfg.truecaser_config.batch_size = size_value();
    } else if (key == "truecaser_oov") {
      cfg.truecaser_config.oov.kind = parse_oov_kind(value);
    } else if (key == "truecaser_oov_rate") {
      cfg.truecaser_config.oov.rate = double_value();
    } else if (key == "head") {
      cfg.tagger.head = tagging::parse_head(value);
    } else if (key == "embeddings") {
      cfg.tagger.embeddings = resolve_embeddings(base_dir, value);
    } else if (key == "hidden") {
      cfg.tagger.hidden_units = size_value();
    } else if (key == "dropout") {
      cfg.tagger.lstm_dropout = double_value();
    } else if (key == "recurrent_dropout") {
      cfg.tagger.recurrent_dropout = double_value();
    } else if (key == "learning_rate") {
      cfg.tagger.learning_rate = double_value();
    } else if (key == "max_epochs") {
      cfg.tagger.max_epochs = int_value();
    } else if (key == "min_delta") {
      cfg.tagger.min_delta = double_value();
    } else if (key == "patience") {
      cfg.tagger.patience = int_value();
    } else if (key == "batch_size") {
      cfg.tagger.batch_size = size_value();
    } else if (key == "word_oov") {
      cfg.tagger.word_oov.kind = parse_oov_kind(value);
    } else if (key == "word_oov_rate") {
      cfg.tagger.word_oov.rate = double_value();
    } else if (key == "clip_norm") {
      cfg.tagger.clip_norm = double_value();
    } else if (key == "labels") {
      cfg.tagger.labels = split(value, ", ");
    } else if (key == "metric") {
      cfg.metric = metrics::parse_metric(value);
    } else if (key == "tables") {
      cfg.tables = split(value, ", ");
      for (const std::string& t : cfg.tables) {
        if (!kTables.contains(t)) {
          throw UsageError("BadConfigLine", "line " + std::to_string(ln) + ": unknown table '" +
                                                t + "'");
        }
      }
    } else if (key == "encodings") {
      cfg.encodings.clear();
      for (const std::string& spec : split(value, " \t")) {
        cfg.encodings.push_back(resolve_embeddings(base_dir, spec).to_spec());
      }
    } else if (key.starts_with("extra_test.") && key.size() > 11) {
      cfg.extra_tests.emplace_back(key.substr(11), resolve(base_dir, value));
    } else if (key == "out") {
      cfg.out = resolve(base_dir, value);
    } else {
      throw UsageError("UnknownKey",
                       "line " + std::to_string(ln) + ": unknown key '" + key + "'");
    }
  }

  if (!have_seed) throw UsageError("MissingSeed", "config must set 'seed'");
  if (cfg.flavors.empty()) throw UsageError("NoFlavors", "config must list at least one flavor");
  if (cfg.train.empty() || cfg.test.empty()) {
    throw UsageError("MissingPath", "config must set 'train' and 'test'");
  }
  auto wants = [&](std::string_view t) {
    return std::find(cfg.tables.begin(), cfg.tables.end(), t) != cfg.tables.end();
  };
  if (wants("encodings") && cfg.encodings.empty()) {
    throw UsageError("BadConfigLine", "table 'encodings' needs an 'encodings' key");
  }
  if (wants("datasets") && cfg.extra_tests.empty()) {
    throw UsageError("BadConfigLine", "table 'datasets' needs at least one 'extra_test.NAME' key");
  }
  cfg.tagger.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  ExperimentConfig cfg = parse_experiment_config(
      read_file(path), std::filesystem::path(path).parent_path());
  require_file(cfg.train);
  require_file(cfg.test);
  if (!cfg.dev.empty()) require_file(cfg.dev);
  if (!cfg.truecaser.empty()) require_file(cfg.truecaser);
  for (const auto& [name, p] : cfg.extra_tests) require_file(p);
  return cfg;
}

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  auto load = [&](const std::string& path) {
    return parse_column_corpus(read_file(path), config.token_col, config.label_col);
  };
  ExperimentData data;
  data.train = load(config.train);
  data.test = load(config.test);
  if (config.dev.empty()) {
    const std::size_t held = std::max<std::size_t>(1, data.train.size() / 10);
    if (data.train.size() < 2) throw DataError("EmptySplit", "train split too small to hold out dev");
    data.dev.assign(data.train.end() - static_cast<std::ptrdiff_t>(held), data.train.end());
    data.train.resize(data.train.size() - held);
  } else {
    data.dev = load(config.dev);
  }
  for (const auto& [name, path] : config.extra_tests) data.extra_tests.emplace_back(name, load(path));
  return data;
}

Runner::Runner(const ExperimentConfig& config, const ExperimentData& data,
               const CaseRestorer* truecaser)
    : config_(config), data_(data), truecaser_(truecaser) {}

const CaseRestorer* Runner::truecaser_for(Flavor flavor) {
  if (!needs_truecaser(flavor)) return nullptr;
  if (truecaser_ != nullptr) return truecaser_;
  if (!config_.truecaser.empty()) {
    owned_truecaser_ = std::make_unique<truecase::TruecaserModel>(
        truecase::TruecaserModel::parse(read_file(config_.truecaser)));
  } else {
    log_info("training truecaser on the train split");
    auto result = truecase::train_truecaser(data_.train, data_.dev, config_.truecaser_config,
                                            config_.seed);
    owned_truecaser_ = std::make_unique<truecase::TruecaserModel>(std::move(result.model));
  }
  truecaser_ = owned_truecaser_.get();
  return truecaser_;
}

const tagging::TaggerModel& Runner::model(Flavor flavor, const tagging::TaggerConfig& tagger) {
  const std::string key = std::string(short_name(flavor)) + "|" +
                          std::string(tagging::to_string(tagger.head)) + "|" +
                          tagger.embeddings.to_spec();
  auto it = models_.find(key);
  if (it != models_.end()) return *it->second;
  const CaseRestorer* tc = truecaser_for(flavor);
  auto train = flavor_train_side(data_.train, flavor, config_.seed, tc);
  auto dev = flavor_train_side(data_.dev, flavor, config_.seed, tc);
  log_info("training tagger " + key);
  auto result = tagging::train_tagger(train, dev, tagger, config_.seed);
  auto owned = std::make_unique<tagging::TaggerModel>(std::move(result.model));
  const tagging::TaggerModel& ref = *owned;
  models_.emplace(key, std::move(owned));
  return ref;
}

metrics::ReportRow Runner::score(Flavor flavor, const tagging::TaggerConfig& tagger,
                                 std::span<const Sentence> test) {
  const tagging::TaggerModel& m = model(flavor, tagger);
  const CaseRestorer* tc = truecaser_for(flavor);
  std::vector<Sentence> cased;
  std::vector<Sentence> uncased;
  if (tc != nullptr) {
    for (const Sentence& s : test) cased.push_back(truecase_sentence(s, *tc));
    uncased = cased;
  } else {
    cased.assign(test.begin(), test.end());
    uncased = lowercase_all(test);
  }
  const auto gold = gold_of(test);
  metrics::ReportRow row;
  row.test_cased = metrics::score_sentences(config_.metric, gold, m.predict_all(cased));
  row.test_uncased = tc != nullptr
                         ? row.test_cased
                         : metrics::score_sentences(config_.metric, gold, m.predict_all(uncased));
  return row;
}

metrics::EvalReport Runner::matrix(const tagging::TaggerConfig& tagger) {
  metrics::EvalReport report;
  report.metric = config_.metric;
  for (Flavor f : config_.flavors) report.rows[f] = score(f, tagger, data_.test);
  return report;
}

metrics::EvalReport evaluate_flavor_matrix(const ExperimentConfig& config,
                                           const ExperimentData& data,
                                           const CaseRestorer* truecaser) {
  Runner runner(config, data, truecaser);
  return runner.matrix(config.tagger);
}

std::string comparison_tsv(const std::vector<std::string>& columns,
                           const std::vector<std::pair<Flavor, std::vector<double>>>& rows) {
  std::string out = "flavor";
  for (const std::string& c : columns) out += '\t' + c;
  out += '\n';
  for (const auto& [flavor, values] : rows) {
    out += display_name(flavor);
    for (double v : values) out += '\t' + metrics::format_score(v);
    out += '\n';
  }
  return out;
}

std::map<std::string, std::string> reproduce_tables(const ExperimentConfig& config,
                                                    const ExperimentData& data,
                                                    const std::filesystem::path& out_dir,
                                                    const CaseRestorer* truecaser) {
  Runner runner(config, data, truecaser);
  std::map<std::string, std::string> files;
  auto wants = [&](std::string_view t) {
    return std::find(config.tables.begin(), config.tables.end(), t) != config.tables.end();
  };
  if (wants("matrix")) {
    const metrics::EvalReport report = runner.matrix(config.tagger);
    files["matrix.tsv"] = report.to_tsv();
    files["matrix.json"] = report.to_json();
  }
  if (wants("crf_ablation")) {
    std::vector<std::pair<Flavor, std::vector<double>>> rows;
    for (Flavor f : config.flavors) {
      std::vector<double> values;
      for (tagging::Head head : {tagging::Head::kSoftmax, tagging::Head::kCrf}) {
        tagging::TaggerConfig t = config.tagger;
        t.head = head;
        values.push_back(runner.score(f, t, data.test).avg());
      }
      rows.emplace_back(f, std::move(values));
    }
    files["crf_ablation.tsv"] = comparison_tsv({"No CRF", "CRF"}, rows);
  }
  if (wants("encodings")) {
    std::vector<std::pair<Flavor, std::vector<double>>> rows;
    for (Flavor f : config.flavors) {
      std::vector<double> values;
      for (const std::string& spec : config.encodings) {
        tagging::TaggerConfig t = config.tagger;
        t.embeddings = tagging::EmbeddingSource::parse(spec);
        values.push_back(runner.score(f, t, data.test).avg());
      }
      rows.emplace_back(f, std::move(values));
    }
    files["encodings.tsv"] = comparison_tsv(config.encodings, rows);
  }
  if (wants("datasets")) {
    std::vector<std::string> columns{"test"};
    for (const auto& [name, sentences] : data.extra_tests) columns.push_back(name);
    std::vector<std::pair<Flavor, std::vector<double>>> rows;
    for (Flavor f : config.flavors) {
      std::vector<double> values{runner.score(f, config.tagger, data.test).avg()};
      for (const auto& [name, sentences] : data.extra_tests) {
        values.push_back(runner.score(f, config.tagger, sentences).avg());
      }
      rows.emplace_back(f, std::move(values));
    }
    files["datasets.tsv"] = comparison_tsv(columns, rows);
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, content] : files) write_file((out_dir / name).string(), content);
  }
  return files;
}

std::string make_manifest(std::string_view command,
                          const std::vector<std::pair<std::string, std::string>>& config,
                          std::uint64_t seed, double wall_seconds) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = code_version();
  j["seed"] = seed;
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) echo[k] = v;
  j["config"] = std::move(echo);
  j["wall_time_seconds"] = wall_seconds;
  return j.dump(2) + "\n";
}

}  // namespace casefold::experiment

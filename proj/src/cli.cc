#include "casefold/cli.h"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "casefold/error.h"
#include "casefold/experiment.h"
#include "casefold/log.h"
#include "casefold/synthetic.h"
#include "casefold/tagger.h"
#include "casefold/truecaser.h"
#include "casefold/unicode.h"

namespace casefold::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using Echo = std::vector<std::pair<std::string, std::string>>;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct ColumnArgs {
  std::size_t token_col = 0;
  std::size_t label_col = 1;

  void add(CLI::App* app) {
    app->add_option("--token-col", token_col, "0-based token column")->capture_default_str();
    app->add_option("--label-col", label_col, "0-based label column")->capture_default_str();
  }
  std::vector<Sentence> load(const std::string& path) const {
    return parse_column_corpus(read_file(path), token_col, label_col);
  }
};

std::vector<Sentence> load_text(const std::string& path, const std::string& format,
                                const ColumnArgs& columns) {
  if (format == "column") return columns.load(path);
  return parse_plain_text(read_file(path));
}

void write_manifest(const std::string& path, std::string_view command, const Echo& echo,
                    std::uint64_t seed, Clock::time_point start) {
  write_file(path, experiment::make_manifest(command, echo, seed, seconds_since(start)));
}

std::optional<truecase::TruecaserModel> load_truecaser(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return truecase::TruecaserModel::parse(read_file(path));
}

// Subcommand state lives here so the callbacks stay small.
struct Options {
  std::string train, dev, test, out, model, in, gold, config, json, kind, truecaser;
  std::string format = "plain";
  std::string oov = "frequency";
  double oov_rate = -1.0;
  std::uint64_t seed = 0;
  std::size_t hidden = 0;
  std::size_t layers = 0;
  std::size_t batch_size = 0;
  int epochs = 0;
  std::string head, embeddings, metric = "acc", task = "pos";
  double dropout = -1.0;
  double learning_rate = 0.0;
  bool lowercase = false;
  std::size_t count = 0;
  ColumnArgs columns;
};

int cmd_flavor(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const Flavor flavor = parse_flavor(o.kind);
  auto tc = load_truecaser(o.truecaser);
  auto train = o.columns.load(o.train);
  auto test = o.columns.load(o.test);
  FlavoredDataset ds = make_flavor(train, test, flavor, o.seed, tc ? &*tc : nullptr);
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  write_file((dir / ("train." + std::string(short_name(flavor)))).string(),
             write_column_corpus(ds.train));
  write_file((dir / "test.c").string(), write_column_corpus(ds.test_cased));
  write_file((dir / "test.u").string(), write_column_corpus(ds.test_uncased));
  Echo echo{{"train", o.train}, {"test", o.test}, {"kind", std::string(short_name(flavor))}};
  if (tc) echo.emplace_back("truecaser", tc->id());
  write_manifest((dir / "manifest.json").string(), "flavor", echo, o.seed, start);
  out << "wrote " << ds.train.size() << " train and " << ds.test_cased.size()
      << " test sentences to " << o.out << "\n";
  return 0;
}

int cmd_train_truecaser(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  truecase::TruecaserConfig cfg;
  if (o.hidden > 0) cfg.hidden_size = cfg.embed_size = o.hidden;
  if (o.layers > 0) cfg.layers = o.layers;
  if (o.epochs > 0) cfg.epochs = o.epochs;
  if (o.batch_size > 0) cfg.batch_size = o.batch_size;
  cfg.oov.kind = parse_oov_kind(o.oov);
  if (o.oov_rate >= 0.0) cfg.oov.rate = o.oov_rate;
  LabeledCorpus corpus;
  corpus.train = load_text(o.train, o.format, o.columns);
  if (!o.dev.empty()) corpus.dev = load_text(o.dev, o.format, o.columns);
  auto result = truecase::train_truecaser(corpus, cfg, o.seed);
  write_file(o.out, result.model.serialize());
  Echo echo{{"train", o.train},
            {"dev", o.dev},
            {"oov", std::string(to_string(cfg.oov.kind))},
            {"oov_rate", std::to_string(cfg.oov.rate)},
            {"hidden", std::to_string(cfg.hidden_size)},
            {"layers", std::to_string(cfg.layers)},
            {"epochs", std::to_string(cfg.epochs)},
            {"batch_size", std::to_string(cfg.batch_size)},
            {"selected_epoch", std::to_string(result.log.selected_epoch)}};
  write_manifest(o.out + ".manifest.json", "train-truecaser", echo, o.seed, start);
  out << "selected epoch " << result.log.selected_epoch << ", model written to " << o.out << "\n";
  return 0;
}

int cmd_apply_truecaser(const Options& o) {
  auto model = truecase::TruecaserModel::parse(read_file(o.model));
  const std::string text = read_file(o.in);
  std::string result;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      const Sentence s = parse_plain_text(line).front();
      result += truecase::apply_truecaser(model, unicode::to_lower(sentence_text(s)));
    }
    result += '\n';
    pos = end + 1;
  }
  write_file(o.out, result);
  return 0;
}

int cmd_eval_truecaser(const Options& o, std::ostream& out) {
  auto model = truecase::TruecaserModel::parse(read_file(o.model));
  auto gold = load_text(o.gold, o.format, o.columns);
  out << metrics::format_score(truecase::evaluate_truecaser(model, gold)) << "\n";
  return 0;
}

int cmd_train_tagger(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  tagging::TaggerConfig cfg =
      o.task == "ner" ? tagging::TaggerConfig::ner_defaults() : tagging::TaggerConfig{};
  if (o.task != "ner" && o.task != "pos") throw UsageError("BadTask", "task must be pos or ner");
  if (!o.head.empty()) cfg.head = tagging::parse_head(o.head);
  if (!o.embeddings.empty()) cfg.embeddings = tagging::EmbeddingSource::parse(o.embeddings);
  if (o.hidden > 0) cfg.hidden_units = o.hidden;
  if (o.epochs > 0) cfg.max_epochs = o.epochs;
  if (o.batch_size > 0) cfg.batch_size = o.batch_size;
  if (o.dropout >= 0.0) cfg.lstm_dropout = o.dropout;
  if (o.learning_rate > 0.0) cfg.learning_rate = o.learning_rate;
  cfg.validate();
  const Flavor flavor = parse_flavor(o.kind);
  auto tc = load_truecaser(o.truecaser);
  const CaseRestorer* restorer = tc ? &*tc : nullptr;
  auto train = flavor_train_side(o.columns.load(o.train), flavor, o.seed, restorer);
  auto dev = flavor_train_side(o.columns.load(o.dev), flavor, o.seed, restorer);
  auto result = tagging::train_tagger(train, dev, cfg, o.seed);
  write_file(o.out, result.model.serialize());
  Echo echo{{"train", o.train},
            {"dev", o.dev},
            {"flavor", std::string(short_name(flavor))},
            {"task", o.task},
            {"head", std::string(tagging::to_string(cfg.head))},
            {"embeddings", cfg.embeddings.to_spec()},
            {"hidden", std::to_string(cfg.hidden_units)},
            {"max_epochs", std::to_string(cfg.max_epochs)},
            {"batch_size", std::to_string(cfg.batch_size)},
            {"selected_epoch", std::to_string(result.log.selected_epoch)}};
  if (tc) echo.emplace_back("truecaser", tc->id());
  write_manifest(o.out + ".manifest.json", "train-tagger", echo, o.seed, start);
  out << "selected epoch " << result.log.selected_epoch << ", model written to " << o.out << "\n";
  return 0;
}

int cmd_eval_tagger(const Options& o, std::ostream& out) {
  auto model = tagging::TaggerModel::parse(read_file(o.model));
  auto test = o.columns.load(o.test);
  std::vector<std::vector<std::string>> gold;
  for (const Sentence& s : test) gold.push_back(labels(s));
  if (o.lowercase) test = lowercase_all(test);
  const double score =
      metrics::score_sentences(metrics::parse_metric(o.metric), gold, model.predict_all(test));
  out << metrics::format_score(score) << "\n";
  return 0;
}

int cmd_flavor_matrix(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  auto cfg = experiment::load_experiment_config(o.config);
  auto data = experiment::load_experiment_data(cfg);
  auto report = experiment::evaluate_flavor_matrix(cfg, data);
  write_file(o.out, report.to_tsv());
  if (!o.json.empty()) write_file(o.json, report.to_json());
  write_manifest(o.out + ".manifest.json", "flavor-matrix", cfg.entries, cfg.seed, start);
  out << report.to_tsv();
  return 0;
}

int cmd_reproduce(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  auto cfg = experiment::load_experiment_config(o.config);
  const std::string dir = o.out.empty() ? cfg.out : o.out;
  if (dir.empty()) throw UsageError("MissingOutput", "give --out or set 'out' in the config");
  auto data = experiment::load_experiment_data(cfg);
  auto files = experiment::reproduce_tables(cfg, data, dir);
  write_manifest((fs::path(dir) / "manifest.json").string(), "reproduce", cfg.entries, cfg.seed,
                 start);
  for (const auto& [name, content] : files) {
    if (name.ends_with(".tsv")) out << "== " << name << "\n" << content;
  }
  return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
  std::vector<Sentence> sentences;
  if (o.kind == "pos") {
    sentences = synthetic::pos_corpus(o.count, o.seed);
  } else if (o.kind == "ner") {
    sentences = synthetic::ner_from_pos(synthetic::pos_corpus(o.count, o.seed));
  } else if (o.kind == "truecase") {
    sentences = synthetic::truecase_corpus(o.count, o.seed);
  } else {
    throw UsageError("BadKind", "synth kind must be pos, ner or truecase");
  }
  write_file(o.out, o.format == "plain" ? write_plain_text(sentences)
                                        : write_column_corpus(sentences));
  out << "wrote " << sentences.size() << " sentences to " << o.out << "\n";
  return 0;
}

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::kUsage: return 1;
    case ErrorClass::kData: return 2;
    case ErrorClass::kNumeric: return 3;
  }
  return 2;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Case-robust sequence tagging toolkit", "casefold"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(experiment::code_version()));
  int verbosity = 0;
  app.add_option("--verbose", verbosity, "stderr logging level")
      ->check(CLI::Range(0, 2))
      ->capture_default_str();

  Options o;
  const std::vector<std::string> flavor_names{"c", "u", "cu", "cu50", "tt", "ta"};

  auto* flavor = app.add_subcommand("flavor", "write a flavored copy of a train/test pair");
  flavor->add_option("--train", o.train)->required()->check(CLI::ExistingFile);
  flavor->add_option("--test", o.test)->required()->check(CLI::ExistingFile);
  flavor->add_option("--kind", o.kind)->required()->check(CLI::IsMember(flavor_names));
  flavor->add_option("--seed", o.seed)->required();
  flavor->add_option("--out", o.out, "output directory")->required();
  flavor->add_option("--truecaser", o.truecaser, "truecaser model (tt, ta)");
  o.columns.add(flavor);

  auto* train_tc = app.add_subcommand("train-truecaser", "train a character-level truecaser");
  train_tc->add_option("--train", o.train)->required()->check(CLI::ExistingFile);
  train_tc->add_option("--dev", o.dev, "defaults to the last 10% of train")
      ->check(CLI::ExistingFile);
  train_tc->add_option("--out", o.out)->required();
  train_tc->add_option("--oov", o.oov)->check(CLI::IsMember({"stochastic", "frequency"}));
  train_tc->add_option("--oov-rate", o.oov_rate);
  train_tc->add_option("--seed", o.seed)->required();
  train_tc->add_option("--hidden", o.hidden);
  train_tc->add_option("--layers", o.layers);
  train_tc->add_option("--epochs", o.epochs);
  train_tc->add_option("--batch-size", o.batch_size);
  train_tc->add_option("--format", o.format)->check(CLI::IsMember({"plain", "column"}));
  o.columns.add(train_tc);

  auto* apply_tc = app.add_subcommand("apply-truecaser", "restore casing, one sentence per line");
  apply_tc->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
  apply_tc->add_option("--in", o.in)->required()->check(CLI::ExistingFile);
  apply_tc->add_option("--out", o.out)->required();

  auto* eval_tc = app.add_subcommand("eval-truecaser", "character F1 against cased text");
  eval_tc->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
  eval_tc->add_option("--gold", o.gold)->required()->check(CLI::ExistingFile);
  eval_tc->add_option("--format", o.format)->check(CLI::IsMember({"plain", "column"}));
  o.columns.add(eval_tc);

  auto* train_tg = app.add_subcommand("train-tagger", "train a BiLSTM tagger on one flavor");
  train_tg->add_option("--train", o.train)->required()->check(CLI::ExistingFile);
  train_tg->add_option("--dev", o.dev)->required()->check(CLI::ExistingFile);
  train_tg->add_option("--flavor", o.kind)->required()->check(CLI::IsMember(flavor_names));
  train_tg->add_option("--truecaser", o.truecaser)->check(CLI::ExistingFile);
  train_tg->add_option("--task", o.task)->check(CLI::IsMember({"pos", "ner"}));
  train_tg->add_option("--head", o.head)->check(CLI::IsMember({"crf", "softmax"}));
  train_tg->add_option("--embeddings", o.embeddings, "trainable:D | static:PATH | char:WD,CD,CH");
  train_tg->add_option("--hidden", o.hidden);
  train_tg->add_option("--max-epochs", o.epochs);
  train_tg->add_option("--batch-size", o.batch_size);
  train_tg->add_option("--dropout", o.dropout);
  train_tg->add_option("--learning-rate", o.learning_rate);
  train_tg->add_option("--seed", o.seed)->required();
  train_tg->add_option("--out", o.out)->required();
  o.columns.add(train_tg);

  auto* eval_tg = app.add_subcommand("eval-tagger", "score a tagger on a column file");
  eval_tg->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
  eval_tg->add_option("--test", o.test)->required()->check(CLI::ExistingFile);
  eval_tg->add_option("--metric", o.metric)->check(CLI::IsMember({"acc", "span-f1"}));
  eval_tg->add_flag("--lowercase", o.lowercase, "lowercase the test surfaces first");
  o.columns.add(eval_tg);

  auto* matrix = app.add_subcommand("flavor-matrix", "train and score every configured flavor");
  matrix->add_option("--config", o.config)->required()->check(CLI::ExistingFile);
  matrix->add_option("--out", o.out, "report TSV")->required();
  matrix->add_option("--json", o.json, "also write the report as flat JSON");

  auto* reproduce = app.add_subcommand("reproduce", "write every table listed in the config");
  reproduce->add_option("--config", o.config)->required()->check(CLI::ExistingFile);
  reproduce->add_option("--out", o.out, "output directory (default: config 'out')");

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--kind", o.kind)->required()->check(CLI::IsMember({"pos", "ner", "truecase"}));
  synth->add_option("--n", o.count)->required();
  synth->add_option("--seed", o.seed)->required();
  synth->add_option("--out", o.out)->required();
  synth->add_option("--format", o.format, "default: column, plain for truecase")
      ->check(CLI::IsMember({"plain", "column"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << experiment::code_version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  set_verbosity(verbosity);

  try {
    if (*flavor) return cmd_flavor(o, out);
    if (*train_tc) return cmd_train_truecaser(o, out);
    if (*apply_tc) return cmd_apply_truecaser(o);
    if (*eval_tc) return cmd_eval_truecaser(o, out);
    if (*train_tg) return cmd_train_tagger(o, out);
    if (*eval_tg) return cmd_eval_tagger(o, out);
    if (*matrix) return cmd_flavor_matrix(o, out);
    if (*reproduce) return cmd_reproduce(o, out);
    if (*synth) {
      if (synth->count("--format") == 0 && o.kind != "truecase") o.format = "column";
      return cmd_synth(o, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace casefold::cli

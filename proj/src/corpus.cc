#include "casefold/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "casefold/error.h"
#include "casefold/unicode.h"

namespace casefold {
namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_ascii_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_ascii_space(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

// Calls fn(line_no, line) for every line; line_no is 1-based.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    fn(++line_no, text.substr(pos, end - pos));
    pos = end + 1;
  }
}

std::string format_rate(double rate) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), rate);
  return std::string(buf, ptr);
}

void check_policy(const OovPolicy& policy) {
  if (!(policy.rate >= 0.0 && policy.rate <= 1.0)) {
    throw UsageError("InvalidOovRate", "OOV rate must lie in [0, 1], got " +
                                           format_rate(policy.rate));
  }
}

}  // namespace

std::vector<std::string> surfaces(const Sentence& sentence) {
  std::vector<std::string> out;
  out.reserve(sentence.size());
  for (const Token& t : sentence.tokens) out.push_back(t.surface);
  return out;
}

std::vector<std::string> labels(const Sentence& sentence) {
  std::vector<std::string> out;
  out.reserve(sentence.size());
  for (const Token& t : sentence.tokens) out.push_back(t.label);
  return out;
}

std::string sentence_text(const Sentence& sentence) {
  std::string out;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += sentence.tokens[i].surface;
  }
  return out;
}

LabeledCorpus make_labeled_corpus(std::vector<Sentence> train, std::vector<Sentence> dev,
                                  std::vector<Sentence> test) {
  LabeledCorpus corpus;
  corpus.train = std::move(train);
  corpus.dev = std::move(dev);
  corpus.test = std::move(test);
  for (const auto* split : {&corpus.train, &corpus.dev, &corpus.test}) {
    for (const Sentence& s : *split) {
      for (const Token& t : s.tokens) corpus.label_set.insert(t.label);
    }
  }
  return corpus;
}

std::vector<Sentence> parse_column_corpus(std::string_view text, std::size_t token_col,
                                          std::size_t label_col) {
  std::vector<Sentence> sentences;
  Sentence current;
  const std::size_t needed = std::max(token_col, label_col) + 1;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto fields = split_fields(line);
    if (fields.empty()) {
      if (!current.tokens.empty()) sentences.push_back(std::move(current));
      current = Sentence{};
      return;
    }
    if (fields.size() < needed) {
      throw DataError("MalformedLine", "line " + std::to_string(line_no) + " has " +
                                           std::to_string(fields.size()) +
                                           " column(s), need " + std::to_string(needed));
    }
    current.tokens.push_back(
        Token{std::string(fields[token_col]), std::string(fields[label_col])});
  });
  if (!current.tokens.empty()) sentences.push_back(std::move(current));
  if (sentences.empty()) throw DataError("EmptyCorpus", "no sentences parsed");
  return sentences;
}

std::vector<Sentence> parse_plain_text(std::string_view text) {
  std::vector<Sentence> sentences;
  for_each_line(text, [&](std::size_t, std::string_view line) {
    Sentence s;
    for (std::string_view field : split_fields(line)) {
      s.tokens.push_back(Token{std::string(field), "_"});
    }
    if (!s.tokens.empty()) sentences.push_back(std::move(s));
  });
  if (sentences.empty()) throw DataError("EmptyCorpus", "no sentences parsed");
  return sentences;
}

std::string write_column_corpus(std::span<const Sentence> sentences) {
  std::string out;
  for (const Sentence& s : sentences) {
    for (const Token& t : s.tokens) {
      out += t.surface;
      out.push_back(' ');
      out += t.label;
      out.push_back('\n');
    }
    out.push_back('\n');
  }
  return out;
}

std::string write_plain_text(std::span<const Sentence> sentences) {
  std::string out;
  for (const Sentence& s : sentences) {
    out += sentence_text(s);
    out.push_back('\n');
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("FileNotFound", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("WriteFailed", "cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("WriteFailed", "cannot write '" + path + "'");
}

std::string_view to_string(UnitKind kind) {
  return kind == UnitKind::kCharacter ? "character" : "word";
}

std::string_view to_string(OovKind kind) {
  return kind == OovKind::kStochasticAtRead ? "stochastic_at_read" : "frequency_cutoff";
}

OovKind parse_oov_kind(std::string_view name) {
  if (name == "stochastic_at_read" || name == "stochastic") return OovKind::kStochasticAtRead;
  if (name == "frequency_cutoff" || name == "frequency") return OovKind::kFrequencyCutoff;
  throw UsageError("UnknownOovPolicy", "unknown OOV policy '" + std::string(name) + "'");
}

Vocabulary::Vocabulary(UnitKind unit_kind, OovPolicy policy, std::vector<std::string> units)
    : unit_kind_(unit_kind), policy_(policy), units_(std::move(units)) {
  check_policy(policy_);
  std::sort(units_.begin(), units_.end());
  units_.erase(std::unique(units_.begin(), units_.end()), units_.end());
  id_of_.reserve(units_.size());
  for (std::size_t i = 0; i < units_.size(); ++i) {
    id_of_.emplace(units_[i], static_cast<int>(i) + 2);
  }
}

bool Vocabulary::contains(std::string_view unit) const {
  return id_of_.find(std::string(unit)) != id_of_.end();
}

int Vocabulary::id(std::string_view unit) const {
  auto it = id_of_.find(std::string(unit));
  return it == id_of_.end() ? kOovId : it->second;
}

std::string Vocabulary::serialize() const {
  std::string out = "casefold-vocab v1 ";
  out += to_string(unit_kind_);
  out.push_back(' ');
  out += to_string(policy_.kind);
  out.push_back(' ');
  out += format_rate(policy_.rate);
  out.push_back('\n');
  for (std::size_t i = 0; i < units_.size(); ++i) {
    out += units_[i];
    out.push_back('\t');
    out += std::to_string(i + 2);
    out.push_back('\n');
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::size_t eol = text.find('\n');
  std::string_view header = text.substr(0, eol);
  auto fields = split_fields(header);
  if (fields.size() != 5 || fields[0] != "casefold-vocab" || fields[1] != "v1") {
    throw DataError("BadVocabulary", "missing 'casefold-vocab v1' header");
  }
  UnitKind kind;
  if (fields[2] == "character") {
    kind = UnitKind::kCharacter;
  } else if (fields[2] == "word") {
    kind = UnitKind::kWord;
  } else {
    throw DataError("BadVocabulary", "unknown unit kind '" + std::string(fields[2]) + "'");
  }
  OovPolicy policy;
  policy.kind = parse_oov_kind(fields[3]);
  auto [ptr, ec] =
      std::from_chars(fields[4].data(), fields[4].data() + fields[4].size(), policy.rate);
  if (ec != std::errc{}) throw DataError("BadVocabulary", "bad OOV rate");

  std::vector<std::string> units;
  if (eol != std::string_view::npos) {
    for_each_line(text.substr(eol + 1), [&](std::size_t line_no, std::string_view line) {
      if (line.empty()) return;
      std::size_t tab = line.rfind('\t');
      if (tab == std::string_view::npos) {
        throw DataError("BadVocabulary", "line " + std::to_string(line_no + 1) + " lacks a tab");
      }
      std::size_t id = 0;
      std::string_view id_text = line.substr(tab + 1);
      auto res = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
      if (res.ec != std::errc{} || id != units.size() + 2) {
        throw DataError("BadVocabulary", "ids must be dense and ordered (line " +
                                             std::to_string(line_no + 1) + ")");
      }
      units.emplace_back(line.substr(0, tab));
    });
  }
  Vocabulary vocab(kind, policy, units);
  if (vocab.units() != units) throw DataError("BadVocabulary", "units are not sorted and unique");
  return vocab;
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  return unit_kind_ == other.unit_kind_ && policy_.kind == other.policy_.kind &&
         policy_.rate == other.policy_.rate && units_ == other.units_;
}

std::vector<std::string> char_units(std::string_view text) {
  std::vector<std::string> out;
  for (char32_t c : unicode::decode(text)) out.push_back(unicode::encode(c));
  return out;
}

std::vector<std::string> units_of(const Sentence& sentence, UnitKind kind) {
  if (kind == UnitKind::kWord) return surfaces(sentence);
  return char_units(sentence_text(sentence));
}

std::vector<std::string> frequency_cutoff_excluded(
    const std::unordered_map<std::string, std::size_t>& counts, double rate) {
  check_policy(OovPolicy{OovKind::kFrequencyCutoff, rate});
  if (rate <= 0.0 || counts.empty()) return {};
  std::vector<std::pair<std::size_t, std::string>> order;
  order.reserve(counts.size());
  std::size_t total = 0;
  for (const auto& [unit, count] : counts) {
    order.emplace_back(count, unit);
    total += count;
  }
  std::sort(order.begin(), order.end());
  const double threshold = rate * static_cast<double>(total);
  std::vector<std::string> excluded;
  std::size_t cumulative = 0;
  for (const auto& [count, unit] : order) {
    cumulative += count;
    excluded.push_back(unit);
    if (static_cast<double>(cumulative) >= threshold) break;
  }
  std::sort(excluded.begin(), excluded.end());
  return excluded;
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> unit_sequences,
                            UnitKind unit_kind, OovPolicy policy) {
  check_policy(policy);
  if (unit_sequences.empty()) {
    throw DataError("EmptyCorpus", "cannot build a vocabulary from no sentences");
  }
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& seq : unit_sequences) {
    for (const std::string& unit : seq) ++counts[unit];
  }
  std::vector<std::string> units;
  units.reserve(counts.size());
  if (policy.kind == OovKind::kFrequencyCutoff) {
    auto excluded = frequency_cutoff_excluded(counts, policy.rate);
    std::set<std::string> dropped(excluded.begin(), excluded.end());
    for (const auto& [unit, count] : counts) {
      if (!dropped.count(unit)) units.push_back(unit);
    }
  } else {
    for (const auto& [unit, count] : counts) units.push_back(unit);
  }
  return Vocabulary(unit_kind, policy, std::move(units));
}

Vocabulary build_vocabulary(std::span<const Sentence> sentences, UnitKind unit_kind,
                            OovPolicy policy) {
  std::vector<std::vector<std::string>> seqs;
  seqs.reserve(sentences.size());
  for (const Sentence& s : sentences) seqs.push_back(units_of(s, unit_kind));
  return build_vocabulary(std::span<const std::vector<std::string>>(seqs), unit_kind, policy);
}

std::vector<int> encode(std::span<const std::string> units, const Vocabulary& vocab,
                        EncodeMode mode, Rng* rng) {
  const bool stochastic = mode == EncodeMode::kTrain &&
                          vocab.policy().kind == OovKind::kStochasticAtRead;
  if (stochastic && rng == nullptr) {
    throw UsageError("MissingRng", "stochastic OOV masking needs a seeded generator");
  }
  std::vector<int> ids;
  ids.reserve(units.size());
  for (const std::string& unit : units) {
    int id = vocab.id(unit);
    // Masking only fires when the rate is positive, so rate 0 consumes no draws.
    if (stochastic && id != vocab.oov_id() && vocab.policy().rate > 0.0 &&
        rng->bernoulli(vocab.policy().rate)) {
      id = vocab.oov_id();
    }
    ids.push_back(id);
  }
  return ids;
}

std::vector<int> encode(const Sentence& sentence, const Vocabulary& vocab, EncodeMode mode,
                        Rng* rng) {
  auto units = units_of(sentence, vocab.unit_kind());
  return encode(std::span<const std::string>(units), vocab, mode, rng);
}

}  // namespace casefold

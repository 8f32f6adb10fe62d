#include "casefold/metrics.h"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "casefold/error.h"
#include "casefold/log.h"

namespace casefold::metrics {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw UsageError("LengthMismatch", std::string(what) + ": " + std::to_string(a) + " vs " +
                                           std::to_string(b));
  }
}

}  // namespace

double round_half_up(double value, int decimals) {
  const double factor = std::pow(10.0, decimals);
  // The small nudge turns decimal ties that binary floating point stores just
  // below .5 (92.795 -> 92.79499...) into real ties.
  return std::floor(value * factor + 0.5 + 1e-9) / factor;
}

std::string format_score(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", round_half_up(value));
  return buf;
}

Counts& Counts::operator+=(const Counts& o) {
  true_positive += o.true_positive;
  false_positive += o.false_positive;
  false_negative += o.false_negative;
  return *this;
}

PrecisionRecall precision_recall(const Counts& c) {
  PrecisionRecall pr;
  const double tp = static_cast<double>(c.true_positive);
  if (c.true_positive + c.false_positive > 0) {
    pr.precision = tp / static_cast<double>(c.true_positive + c.false_positive);
  }
  if (c.true_positive + c.false_negative > 0) {
    pr.recall = tp / static_cast<double>(c.true_positive + c.false_negative);
  }
  if (pr.precision + pr.recall > 0) {
    pr.f1 = 2.0 * pr.precision * pr.recall / (pr.precision + pr.recall);
  }
  return pr;
}

double token_accuracy(std::span<const std::string> gold, std::span<const std::string> pred,
                      std::span<const std::uint8_t> mask) {
  check_lengths(gold.size(), pred.size(), "token_accuracy");
  if (!mask.empty()) check_lengths(gold.size(), mask.size(), "token_accuracy mask");
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    ++total;
    if (gold[i] == pred[i]) ++correct;
  }
  if (total == 0) {
    log_warning("token_accuracy: no tokens to score, reporting 0");
    return 0.0;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

SpanSet bio_decode(std::span<const std::string> labels) {
  SpanSet spans;
  bool open = false;
  Span current;
  auto close = [&](std::size_t at) {
    if (open) {
      current.end = at;
      spans.insert(current);
      open = false;
    }
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string& tag = labels[i];
    if (tag == "O") {
      close(i);
      continue;
    }
    if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') {
      throw DataError("MalformedTag", "'" + tag + "' is not O, B-TYPE or I-TYPE");
    }
    const std::string type = tag.substr(2);
    if (tag[0] == 'I' && open && current.type == type) continue;
    close(i);
    current = Span{i, 0, type};
    open = true;
  }
  close(labels.size());
  return spans;
}

std::vector<std::string> bio_encode(const SpanSet& spans, std::size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const Span& s : spans) {
    if (s.start >= s.end || s.end > length) {
      throw UsageError("SpanOutOfRange", "span outside the sentence");
    }
    tags[s.start] = "B-" + s.type;
    for (std::size_t i = s.start + 1; i < s.end; ++i) tags[i] = "I-" + s.type;
  }
  return tags;
}

Counts span_counts(const SpanSet& gold, const SpanSet& pred) {
  Counts c;
  for (const Span& s : pred) {
    if (gold.count(s)) {
      ++c.true_positive;
    } else {
      ++c.false_positive;
    }
  }
  c.false_negative = gold.size() - c.true_positive;
  return c;
}

double span_f1(std::span<const SpanSet> gold, std::span<const SpanSet> pred) {
  check_lengths(gold.size(), pred.size(), "span_f1");
  Counts total;
  for (std::size_t i = 0; i < gold.size(); ++i) total += span_counts(gold[i], pred[i]);
  return 100.0 * precision_recall(total).f1;
}

Counts binary_counts(std::span<const std::uint8_t> gold, std::span<const std::uint8_t> pred) {
  check_lengths(gold.size(), pred.size(), "char_f1");
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] && pred[i]) {
      ++c.true_positive;
    } else if (pred[i]) {
      ++c.false_positive;
    } else if (gold[i]) {
      ++c.false_negative;
    }
  }
  return c;
}

double char_f1(std::span<const std::uint8_t> gold, std::span<const std::uint8_t> pred) {
  Counts c = binary_counts(gold, pred);
  if (c.true_positive + c.false_positive + c.false_negative == 0) {
    log_warning("char_f1: no positive characters in gold or prediction, reporting 0");
    return 0.0;
  }
  return 100.0 * precision_recall(c).f1;
}

std::string_view to_string(MetricKind kind) {
  return kind == MetricKind::kAccuracy ? "acc" : "span-f1";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "acc" || name == "accuracy") return MetricKind::kAccuracy;
  if (name == "span-f1" || name == "f1") return MetricKind::kSpanF1;
  throw UsageError("UnknownMetric", "unknown metric '" + std::string(name) +
                                        "' (expected acc or span-f1)");
}

std::string EvalReport::to_tsv() const {
  std::string out = "flavor\ttest_c\ttest_u\tavg\n";
  for (const auto& [flavor, row] : rows) {
    out += display_name(flavor);
    out += '\t' + format_score(row.test_cased) + '\t' + format_score(row.test_uncased) + '\t' +
           format_score(row.avg()) + '\n';
  }
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["metric"] = to_string(metric);
  for (const auto& [flavor, row] : rows) {
    const std::string name(display_name(flavor));
    j[name + ".test_c"] = round_half_up(row.test_cased);
    j[name + ".test_u"] = round_half_up(row.test_uncased);
    j[name + ".avg"] = round_half_up(row.avg());
  }
  return j.dump(2) + "\n";
}

double score_sentences(MetricKind metric, const std::vector<std::vector<std::string>>& gold,
                       const std::vector<std::vector<std::string>>& pred) {
  check_lengths(gold.size(), pred.size(), "score_sentences");
  if (metric == MetricKind::kAccuracy) {
    std::vector<std::string> g, p;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      check_lengths(gold[i].size(), pred[i].size(), "score_sentences sentence");
      g.insert(g.end(), gold[i].begin(), gold[i].end());
      p.insert(p.end(), pred[i].begin(), pred[i].end());
    }
    return token_accuracy(g, p);
  }
  std::vector<SpanSet> gs, ps;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    check_lengths(gold[i].size(), pred[i].size(), "score_sentences sentence");
    gs.push_back(bio_decode(gold[i]));
    ps.push_back(bio_decode(pred[i]));
  }
  return span_f1(gs, ps);
}

}  // namespace casefold::metrics

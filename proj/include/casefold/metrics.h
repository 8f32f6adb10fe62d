#ifndef CASEFOLD_METRICS_H_
#define CASEFOLD_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "casefold/flavors.h"

namespace casefold::metrics {

// Percentages are reported rounded half-up to two decimals.
double round_half_up(double value, int decimals = 2);
std::string format_score(double value);

struct Counts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  Counts& operator+=(const Counts& o);
};

struct PrecisionRecall {
  double precision = 0.0;  // fractions in [0, 1]
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero denominators give 0 (and F1 = 0 when P + R = 0).
PrecisionRecall precision_recall(const Counts& counts);

// 100 * correct / total over unmasked positions; an empty mask means all
// positions count. No counted positions gives 0 with a warning.
double token_accuracy(std::span<const std::string> gold, std::span<const std::string> pred,
                      std::span<const std::uint8_t> mask = {});

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::string type;

  auto operator<=>(const Span&) const = default;
};
using SpanSet = std::set<Span>;

// Lenient (conlleval-style) BIO decoding: an I-X that does not continue an
// open X span starts a new one. Throws DataError "MalformedTag".
SpanSet bio_decode(std::span<const std::string> labels);
// Canonical BIO tags for a set of non-overlapping spans.
std::vector<std::string> bio_encode(const SpanSet& spans, std::size_t length);

Counts span_counts(const SpanSet& gold, const SpanSet& pred);
// Micro-averaged exact-match F1 over aligned sentences, as a percentage.
double span_f1(std::span<const SpanSet> gold, std::span<const SpanSet> pred);

Counts binary_counts(std::span<const std::uint8_t> gold, std::span<const std::uint8_t> pred);
// F1 of the positive class as a percentage; no positives at all gives 0 with
// a warning.
double char_f1(std::span<const std::uint8_t> gold, std::span<const std::uint8_t> pred);

enum class MetricKind { kAccuracy, kSpanF1 };
std::string_view to_string(MetricKind kind);
MetricKind parse_metric(std::string_view name);

struct ReportRow {
  double test_cased = 0.0;
  double test_uncased = 0.0;
  double avg() const { return (test_cased + test_uncased) / 2.0; }
};

// Scores keyed by flavor, in the canonical flavor order.
struct EvalReport {
  MetricKind metric = MetricKind::kAccuracy;
  std::map<Flavor, ReportRow> rows;

  // "flavor<TAB>test_c<TAB>test_u<TAB>avg" header, then one line per flavor.
  std::string to_tsv() const;
  // Flat object: {"metric": ..., "<flavor>.test_c": ..., "<flavor>.test_u":
  // ..., "<flavor>.avg": ...} with rounded scores.
  std::string to_json() const;
};

// Accuracy for POS-style tags, span F1 for BIO tags.
double score_sentences(MetricKind metric, const std::vector<std::vector<std::string>>& gold,
                       const std::vector<std::vector<std::string>>& pred);

}  // namespace casefold::metrics

#endif  // CASEFOLD_METRICS_H_

#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

namespace xslu {

// intent + slot tags predicted (or gold) for one sentence
struct SentenceLabels {
  std::string intent;
  std::vector<std::string> slot_tags;
};

double intent_accuracy(const std::vector<std::string>& pred,
                       const std::vector<std::string>& gold);

struct Span {
  std::size_t start;  // inclusive
  std::size_t end;    // inclusive
  std::string label;
  auto operator<=>(const Span&) const = default;
};

// spans are maximal B-X (I-X)* runs; an I-X with no compatible open span
// starts a new span (conlleval-style repair)
std::vector<Span> extract_spans(const std::vector<std::string>& tags);

// micro-averaged span F1 over exact (start, end, label) matches;
// F1 = 0 when precision + recall = 0
double span_f1(const std::vector<std::vector<std::string>>& pred,
               const std::vector<std::vector<std::string>>& gold);

// fraction of sentences whose intent and full slot tag sequence both match
double overall_accuracy(const std::vector<SentenceLabels>& pred,
                        const std::vector<SentenceLabels>& gold);

struct MetricsEntry {
  double intent_accuracy = 0.0;
  double slot_f1 = 0.0;
  double overall_accuracy = 0.0;
  double slot_exact_match = 0.0;  // sentence-level slot sequence accuracy
  std::size_t n_examples = 0;
};

struct MetricsReport {
  double intent_accuracy = 0.0;
  double slot_f1 = 0.0;
  double overall_accuracy = 0.0;
  double slot_exact_match = 0.0;
  std::size_t n_examples = 0;
  std::map<std::string, MetricsEntry> per_language;
};

// aggregates predictions against gold labels, grouping by language code
MetricsReport compute_report(const std::vector<SentenceLabels>& pred,
                             const std::vector<SentenceLabels>& gold,
                             const std::vector<std::string>& languages);

}  // namespace xslu

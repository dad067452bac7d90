#include "xslu/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "xslu/data.hpp"

namespace xslu {

double intent_accuracy(const std::vector<std::string>& pred,
                       const std::vector<std::string>& gold) {
  if (pred.empty() || pred.size() != gold.size()) {
    throw std::runtime_error("intent_accuracy: inputs must be non-empty and "
                             "of equal length");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == gold[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

std::vector<Span> extract_spans(const std::vector<std::string>& tags) {
  std::vector<Span> spans;
  bool open = false;
  Span current{};
  auto close = [&] {
    if (open) spans.push_back(current);
    open = false;
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    if (!is_valid_bio_tag(tag)) {
      throw std::runtime_error("extract_spans: malformed BIO tag '" + tag + "'");
    }
    if (tag == "O") {
      close();
      continue;
    }
    const std::string label = tag.substr(2);
    if (tag[0] == 'B' || !open || current.label != label) {
      close();
      current = {i, i, label};
      open = true;
    } else {
      current.end = i;
    }
  }
  close();
  return spans;
}

double span_f1(const std::vector<std::vector<std::string>>& pred,
               const std::vector<std::vector<std::string>>& gold) {
  if (pred.size() != gold.size()) {
    throw std::runtime_error("span_f1: sentence counts differ");
  }
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (pred[s].size() != gold[s].size()) {
      throw std::runtime_error("span_f1: tag sequence lengths differ at sentence " +
                               std::to_string(s));
    }
    const auto p = extract_spans(pred[s]);
    const auto g = extract_spans(gold[s]);
    const std::set<Span> gold_set(g.begin(), g.end());
    for (const auto& span : p) {
      if (gold_set.count(span)) ++tp;
    }
    n_pred += p.size();
    n_gold += g.size();
  }
  const double precision =
      n_pred > 0 ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
  const double recall =
      n_gold > 0 ? static_cast<double>(tp) / static_cast<double>(n_gold) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double overall_accuracy(const std::vector<SentenceLabels>& pred,
                        const std::vector<SentenceLabels>& gold) {
  if (pred.size() != gold.size()) {
    throw std::runtime_error("overall_accuracy: sentence counts differ");
  }
  if (pred.empty()) {
    throw std::runtime_error("overall_accuracy: empty input");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].intent == gold[i].intent &&
        pred[i].slot_tags == gold[i].slot_tags) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

namespace {

MetricsEntry entry_for(const std::vector<SentenceLabels>& pred,
                       const std::vector<SentenceLabels>& gold) {
  MetricsEntry e;
  e.n_examples = pred.size();
  std::vector<std::string> pi, gi;
  std::vector<std::vector<std::string>> pt, gt;
  std::size_t slot_exact = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pi.push_back(pred[i].intent);
    gi.push_back(gold[i].intent);
    pt.push_back(pred[i].slot_tags);
    gt.push_back(gold[i].slot_tags);
    if (pred[i].slot_tags == gold[i].slot_tags) ++slot_exact;
  }
  e.intent_accuracy = intent_accuracy(pi, gi);
  e.slot_f1 = span_f1(pt, gt);
  e.overall_accuracy = overall_accuracy(pred, gold);
  e.slot_exact_match =
      static_cast<double>(slot_exact) / static_cast<double>(pred.size());
  return e;
}

}  // namespace

MetricsReport compute_report(const std::vector<SentenceLabels>& pred,
                             const std::vector<SentenceLabels>& gold,
                             const std::vector<std::string>& languages) {
  if (pred.size() != gold.size() || pred.size() != languages.size()) {
    throw std::runtime_error("compute_report: input lengths differ");
  }
  if (pred.empty()) {
    throw std::runtime_error("compute_report: empty input");
  }
  MetricsReport report;
  const MetricsEntry all = entry_for(pred, gold);
  report.intent_accuracy = all.intent_accuracy;
  report.slot_f1 = all.slot_f1;
  report.overall_accuracy = all.overall_accuracy;
  report.slot_exact_match = all.slot_exact_match;
  report.n_examples = all.n_examples;

  std::vector<std::string> langs = languages;
  std::sort(langs.begin(), langs.end());
  langs.erase(std::unique(langs.begin(), langs.end()), langs.end());
  for (const auto& lang : langs) {
    std::vector<SentenceLabels> p, g;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (languages[i] == lang) {
        p.push_back(pred[i]);
        g.push_back(gold[i]);
      }
    }
    report.per_language[lang] = entry_for(p, g);
  }
  return report;
}

}  // namespace xslu

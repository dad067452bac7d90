#include "xslu/augment.hpp"

#include <stdexcept>

#include "xslu/rng.hpp"

namespace xslu {

namespace {

void validate(const CodeSwitchPolicy& policy) {
  if (!(policy.ratio >= 0.0 && policy.ratio <= 1.0)) {
    throw std::runtime_error("code_switch: ratio must be in [0,1]");
  }
  if (policy.target_languages.empty()) {
    throw std::runtime_error("code_switch: target_languages must be non-empty");
  }
}

}  // namespace

Example code_switch(const Example& example, const BilingualDictionary& dict,
                    const CodeSwitchPolicy& policy, std::uint64_t draw_index) {
  validate(policy);
  Example out = example;
  out.language = "cs";
  SplitMix64 rng(mix_seed(policy.seed, draw_index));
  for (auto& word : out.words) {
    const double u = rng.next_double();
    if (u >= policy.ratio) continue;
    const auto langs = dict.available_languages(word, policy.target_languages);
    if (langs.empty()) continue;
    const auto& lang = langs[rng.next_below(langs.size())];
    word = *dict.translate(word, lang);
  }
  return out;
}

std::vector<Example> augment_corpus(const std::vector<Example>& examples,
                                    const BilingualDictionary& dict,
                                    const CodeSwitchPolicy& policy,
                                    std::uint64_t epoch) {
  validate(policy);
  std::vector<Example> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out.push_back(
        code_switch(examples[i], dict, policy, epoch * examples.size() + i));
  }
  return out;
}

}  // namespace xslu

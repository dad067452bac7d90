#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xslu/data.hpp"

namespace xslu {

struct CodeSwitchPolicy {
  double ratio = 0.5;                         // per-word replacement probability
  std::vector<std::string> target_languages;  // non-empty
  std::uint64_t seed = 0;
};

// Replaces each word independently with probability `ratio` by its
// translation in a uniformly chosen available target language. Word count,
// slot tags, and intent are preserved (the position-wise slot distillation
// depends on that alignment); the language field becomes "cs". The RNG
// stream is derived from (policy.seed, draw_index), so the result depends
// only on the draw, not on evaluation order.
Example code_switch(const Example& example, const BilingualDictionary& dict,
                    const CodeSwitchPolicy& policy, std::uint64_t draw_index);

// element-wise code_switch with draw_index = epoch * |corpus| + position
std::vector<Example> augment_corpus(const std::vector<Example>& examples,
                                    const BilingualDictionary& dict,
                                    const CodeSwitchPolicy& policy,
                                    std::uint64_t epoch);

}  // namespace xslu

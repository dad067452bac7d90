#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xslu/augment.hpp"
#include "xslu/data.hpp"
#include "xslu/losses.hpp"
#include "xslu/metrics.hpp"
#include "xslu/model.hpp"
#include "xslu/optim.hpp"

namespace xslu {

enum class Deploy { ModelO, ModelC };

struct TrainConfig {
  LossWeights weights;
  double ratio = 0.5;                         // code-switch replacement rate
  std::vector<std::string> target_languages;  // empty = every dictionary language
  EncoderConfig encoder;
  std::size_t max_pieces = 512;
  double base_lr = 2e-3;
  std::size_t warmup_steps = 100;
  std::size_t batch_size = 8;
  std::size_t max_steps = 2000;
  std::size_t eval_every = 100;
  std::uint64_t seed = 1;
  bool disable_intra = false;  // treat lambda as 0
  bool disable_inter = false;  // treat gamma as 0
  bool shared_init = false;    // initialize model_c identically to model_o
  Deploy deploy = Deploy::ModelC;

  void validate() const;
};

struct EvalRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double l_intent = 0.0;
  double l_slot = 0.0;
  double l_intra = 0.0;
  double l_inter = 0.0;
  double total = 0.0;
  double dev_intent_acc = 0.0;
  double dev_slot_f1 = 0.0;
  double dev_overall_acc = 0.0;
};

struct TrainResult {
  Checkpoint best;   // parameters at the best dev step
  Checkpoint final;  // parameters at the last step
  std::size_t best_step = 0;
  double best_dev_overall = 0.0;
  std::vector<EvalRecord> log;
};

// Dual-model training: per step, each batch example is forwarded through
// model_o as-is and through model_c code-switched, the weighted loss is
// backpropagated once, and both models take an Adam step with the shared
// schedule. Every eval_every steps (and at the final step) the deployed
// model is scored on dev; the checkpoint with the highest dev overall
// accuracy is kept, earliest step winning ties. Deterministic in seed.
TrainResult train(const TrainConfig& config, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set,
                  const BilingualDictionary& dict);

// argmax decoding for one tokenized example
SentenceLabels predict_labels(const SluModel& model, const LabelVocab& labels,
                              const SubwordVocab& subwords, const Example& example);

// argmax decoding + metrics with per-language breakdown; corpora with labels
// missing from the vocab are an error
MetricsReport evaluate(const SluModel& model, const LabelVocab& labels,
                       const SubwordVocab& subwords,
                       const std::vector<Example>& corpus);

// evaluate per target language with no parameter updates; the top-level
// numbers are the macro average across languages
MetricsReport zero_shot_eval(const SluModel& model, const LabelVocab& labels,
                             const SubwordVocab& subwords,
                             const std::map<std::string, std::vector<Example>>&
                                 corpora_by_language);

const SluModel& deployed_model(const Checkpoint& ckpt, Deploy deploy);

// one JSON object per eval point, fixed key order (byte-stable across runs)
std::string metrics_record_json(const EvalRecord& record);
void write_metrics_log(const std::string& path,
                       const std::vector<EvalRecord>& records);

}  // namespace xslu

#include "xslu/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "xslu/rng.hpp"

namespace xslu {

namespace {

std::size_t argmax(const double* values, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void check_labels_known(const LabelVocab& labels, const Example& ex) {
  if (!labels.has_intent(ex.intent)) {
    throw std::runtime_error("evaluate: unknown intent label '" + ex.intent +
                             "' (label space is fixed by the training split)");
  }
  for (const auto& tag : ex.slot_tags) {
    if (!labels.has_slot(tag)) {
      throw std::runtime_error("evaluate: unknown slot tag '" + tag +
                               "' (label space is fixed by the training split)");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  weights.validate();
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw std::runtime_error("train config: ratio must be in [0,1]");
  }
  if (batch_size < 1) throw std::runtime_error("train config: batch_size must be >= 1");
  if (max_steps < 1) throw std::runtime_error("train config: max_steps must be >= 1");
  if (eval_every < 1) throw std::runtime_error("train config: eval_every must be >= 1");
  if (warmup_steps < 1) throw std::runtime_error("train config: warmup_steps must be >= 1");
  if (!(base_lr > 0.0)) throw std::runtime_error("train config: base_lr must be > 0");
}

SentenceLabels predict_labels(const SluModel& model, const LabelVocab& labels,
                              const SubwordVocab& subwords,
                              const Example& example) {
  Tape tape;
  tape.set_recording(false);
  const TokenizedExample tokens = tokenize(example, subwords);
  const PredictionBundle bundle = predict(tape, model, tokens);

  SentenceLabels out;
  out.intent = labels.intent_name(
      argmax(bundle.intent_dist->values.data(), model.n_intents));
  const std::size_t n_s = model.n_slot_tags;
  for (std::size_t t = 0; t < bundle.word_count; ++t) {
    out.slot_tags.push_back(labels.slot_name(
        argmax(bundle.slot_dists->values.data() + t * n_s, n_s)));
  }
  return out;
}

MetricsReport evaluate(const SluModel& model, const LabelVocab& labels,
                       const SubwordVocab& subwords,
                       const std::vector<Example>& corpus) {
  if (corpus.empty()) throw std::runtime_error("evaluate: empty corpus");
  std::vector<SentenceLabels> pred, gold;
  std::vector<std::string> langs;
  pred.reserve(corpus.size());
  gold.reserve(corpus.size());
  for (const auto& ex : corpus) {
    check_labels_known(labels, ex);
    pred.push_back(predict_labels(model, labels, subwords, ex));
    gold.push_back({ex.intent, ex.slot_tags});
    langs.push_back(ex.language);
  }
  return compute_report(pred, gold, langs);
}

MetricsReport zero_shot_eval(const SluModel& model, const LabelVocab& labels,
                             const SubwordVocab& subwords,
                             const std::map<std::string, std::vector<Example>>&
                                 corpora_by_language) {
  if (corpora_by_language.empty()) {
    throw std::runtime_error("zero_shot_eval: no target languages");
  }
  MetricsReport report;
  double sum_intent = 0.0, sum_f1 = 0.0, sum_overall = 0.0, sum_em = 0.0;
  for (const auto& [lang, corpus] : corpora_by_language) {
    const MetricsReport r = evaluate(model, labels, subwords, corpus);
    MetricsEntry e;
    e.intent_accuracy = r.intent_accuracy;
    e.slot_f1 = r.slot_f1;
    e.overall_accuracy = r.overall_accuracy;
    e.slot_exact_match = r.slot_exact_match;
    e.n_examples = r.n_examples;
    report.per_language[lang] = e;
    report.n_examples += r.n_examples;
    sum_intent += r.intent_accuracy;
    sum_f1 += r.slot_f1;
    sum_overall += r.overall_accuracy;
    sum_em += r.slot_exact_match;
  }
  const double k = static_cast<double>(corpora_by_language.size());
  report.intent_accuracy = sum_intent / k;
  report.slot_f1 = sum_f1 / k;
  report.overall_accuracy = sum_overall / k;
  report.slot_exact_match = sum_em / k;
  return report;
}

const SluModel& deployed_model(const Checkpoint& ckpt, Deploy deploy) {
  return deploy == Deploy::ModelC ? ckpt.dual.model_c : ckpt.dual.model_o;
}

TrainResult train(const TrainConfig& config, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set,
                  const BilingualDictionary& dict) {
  config.validate();
  if (train_set.empty()) throw std::runtime_error("train: empty training corpus");
  if (dev_set.empty()) throw std::runtime_error("train: empty dev corpus");

  const LabelVocab labels = LabelVocab::build(train_set);

  // the subword vocab must cover the dictionary's target-language surface
  // forms, or code-switched and zero-shot inputs degrade to [UNK] streams
  std::vector<std::string> vocab_words;
  for (const auto& ex : train_set) {
    vocab_words.insert(vocab_words.end(), ex.words.begin(), ex.words.end());
  }
  for (const auto& [source, translations] : dict.sorted_entries()) {
    for (const auto& [lang, translation] : translations) {
      vocab_words.push_back(translation);
    }
  }
  const SubwordVocab subwords = build_subword_vocab(vocab_words, config.max_pieces);

  EncoderConfig enc = config.encoder;
  enc.subword_vocab_size = subwords.size();
  enc.validate();

  DualModel dual = init_dual_model(enc, labels, config.seed, config.shared_init);
  AdamState adam_o(dual.model_o.params());
  AdamState adam_c(dual.model_c.params());
  const LrSchedule schedule{config.base_lr, config.warmup_steps};

  CodeSwitchPolicy policy;
  policy.ratio = config.ratio;
  policy.target_languages = config.target_languages.empty()
                                ? dict.languages()
                                : config.target_languages;
  if (policy.target_languages.empty()) {
    // empty dictionary: keep the policy valid, lookups will simply miss
    policy.target_languages = {"<none>"};
  }
  policy.seed = mix_seed(config.seed, hash_stream("augment"));

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;
  auto reshuffle = [&] {
    SplitMix64 rng(mix_seed(mix_seed(config.seed, hash_stream("order")), epoch));
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = rng.next_below(i + 1);
      std::swap(order[i], order[j]);
    }
  };
  reshuffle();

  TrainResult result;
  bool have_best = false;
  const auto snapshot = [&](Checkpoint& dst) {
    dst.config = enc;
    dst.labels = labels;
    dst.subwords = subwords;
    dst.dual = {clone_model(dual.model_o), clone_model(dual.model_c)};
  };

  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    double sum_intent = 0.0, sum_slot = 0.0, sum_intra = 0.0, sum_inter = 0.0,
           sum_total = 0.0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (cursor == n) {
        cursor = 0;
        ++epoch;
        reshuffle();
      }
      const std::size_t pos = order[cursor++];
      const Example& original = train_set[pos];
      const Example switched =
          code_switch(original, dict, policy, epoch * n + pos);

      Tape tape;
      const TokenizedExample tok_o = tokenize(original, subwords);
      const TokenizedExample tok_c = tokenize(switched, subwords);
      const PredictionBundle bo = predict(tape, dual.model_o, tok_o);
      const PredictionBundle bc = predict(tape, dual.model_c, tok_c);

      const std::size_t gold_intent = labels.intent_index(original.intent);
      std::vector<std::size_t> gold_slots;
      gold_slots.reserve(original.slot_tags.size());
      for (const auto& tag : original.slot_tags) {
        gold_slots.push_back(labels.slot_index(tag));
      }

      const LossBreakdown loss = total_loss(
          tape, bo, bc, dual.model_o, dual.model_c, gold_intent, gold_slots,
          config.weights, config.disable_intra, config.disable_inter);
      if (!std::isfinite(loss.total)) {
        throw std::runtime_error(
            "train: non-finite loss at step " + std::to_string(step) +
            " (l_intent=" + std::to_string(loss.l_intent) +
            ", l_slot=" + std::to_string(loss.l_slot) +
            ", l_intra=" + std::to_string(loss.l_intra) +
            ", l_inter=" + std::to_string(loss.l_inter) + ")");
      }
      tape.backward(loss.total_node);

      sum_intent += loss.l_intent;
      sum_slot += loss.l_slot;
      sum_intra += loss.l_intra;
      sum_inter += loss.l_inter;
      sum_total += loss.total;
    }

    const double bsz = static_cast<double>(config.batch_size);
    for (const auto& model : {std::cref(dual.model_o), std::cref(dual.model_c)}) {
      for (const auto& p : model.get().params()) {
        if (p->grad) {
          for (double& g : *p->grad) g /= bsz;
        }
      }
    }
    const double lr = lr_at(schedule, step);
    adam_o.step(lr);
    adam_c.step(lr);
    dual.model_o.zero_grads();
    dual.model_c.zero_grads();

    if (step % config.eval_every == 0 || step == config.max_steps) {
      const SluModel& deployed =
          config.deploy == Deploy::ModelC ? dual.model_c : dual.model_o;
      const MetricsReport dev = evaluate(deployed, labels, subwords, dev_set);

      EvalRecord rec;
      rec.step = step;
      rec.lr = lr;
      rec.l_intent = sum_intent / bsz;
      rec.l_slot = sum_slot / bsz;
      rec.l_intra = sum_intra / bsz;
      rec.l_inter = sum_inter / bsz;
      rec.total = sum_total / bsz;
      rec.dev_intent_acc = dev.intent_accuracy;
      rec.dev_slot_f1 = dev.slot_f1;
      rec.dev_overall_acc = dev.overall_accuracy;
      result.log.push_back(rec);

      if (!have_best || dev.overall_accuracy > result.best_dev_overall) {
        have_best = true;
        result.best_dev_overall = dev.overall_accuracy;
        result.best_step = step;
        snapshot(result.best);
      }
    }
  }
  snapshot(result.final);
  return result;
}

std::string metrics_record_json(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["lr"] = r.lr;
  j["l_intent"] = r.l_intent;
  j["l_slot"] = r.l_slot;
  j["l_intra"] = r.l_intra;
  j["l_inter"] = r.l_inter;
  j["total"] = r.total;
  j["dev_intent_acc"] = r.dev_intent_acc;
  j["dev_slot_f1"] = r.dev_slot_f1;
  j["dev_overall_acc"] = r.dev_overall_acc;
  return j.dump();
}

void write_metrics_log(const std::string& path,
                       const std::vector<EvalRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics log: " + path);
  for (const auto& r : records) out << metrics_record_json(r) << '\n';
  if (!out) throw std::runtime_error("failed writing metrics log: " + path);
}

}  // namespace xslu

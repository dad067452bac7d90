#include "xslu/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace xslu {

namespace {

constexpr double kProbFloor = 1e-12;

void check_distribution(const char* op, const TensorPtr& p) {
  auto [rows, cols] = std::pair<std::size_t, std::size_t>{
      p->rank() == 2 ? p->shape[0] : 1, p->shape.back()};
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = p->values[r * cols + j];
      if (!(v >= 0.0)) {
        throw std::runtime_error(std::string(op) +
                                 ": input has a negative entry");
      }
      sum += v;
    }
    // callers must stay within 1e-6 of a distribution; the gate sits a hair
    // wider so boundary-exact inputs (finite-difference probes) still pass
    if (std::fabs(sum - 1.0) > 2e-6) {
      throw std::runtime_error(std::string(op) +
                               ": input row does not sum to 1 (got " +
                               std::to_string(sum) + ")");
    }
  }
}

// sum over the last axis of p * (log clamp(p) - log clamp(m)); returns [rows]
// for rank-2 input, [1] for rank-1
TensorPtr kl_to_mixture(Tape& tape, const TensorPtr& p, const TensorPtr& m) {
  TensorPtr diff = tape.sub(tape.log(tape.clamp_min(p, kProbFloor)),
                            tape.log(tape.clamp_min(m, kProbFloor)));
  TensorPtr terms = tape.mul(p, diff);
  if (p->rank() == 2) return tape.sum_axis(terms, 1);
  return tape.sum_all(terms);
}

TensorPtr jsd_impl(Tape& tape, const TensorPtr& p, const TensorPtr& q) {
  TensorPtr m = tape.scale(tape.add(p, q), 0.5);
  return tape.scale(tape.add(kl_to_mixture(tape, p, m),
                             kl_to_mixture(tape, q, m)),
                    0.5);
}

}  // namespace

void LossWeights::validate() const {
  if (alpha < 0 || beta < 0 || lambda < 0 || gamma < 0) {
    throw std::runtime_error("loss weights must be >= 0");
  }
}

TensorPtr jsd(Tape& tape, const TensorPtr& p, const TensorPtr& q) {
  if (p->rank() != 1 || q->rank() != 1 || p->shape != q->shape) {
    throw std::runtime_error("jsd: length mismatch " + shape_str(p->shape) +
                             " vs " + shape_str(q->shape));
  }
  check_distribution("jsd", p);
  check_distribution("jsd", q);
  return jsd_impl(tape, p, q);
}

TensorPtr sequence_jsd(Tape& tape, const TensorPtr& s1, const TensorPtr& s2) {
  if (s1->rank() != 2 || s2->rank() != 2 || s1->shape != s2->shape) {
    throw std::runtime_error(
        "sequence_jsd: sequences are not aligned (" + shape_str(s1->shape) +
        " vs " + shape_str(s2->shape) +
        "); code-switching must preserve word count");
  }
  check_distribution("sequence_jsd", s1);
  check_distribution("sequence_jsd", s2);
  return tape.mean_all(jsd_impl(tape, s1, s2));
}

TensorPtr intent_ce(Tape& tape, const TensorPtr& intent_dist, std::size_t gold) {
  if (intent_dist->rank() != 1) {
    throw std::runtime_error("intent_ce: expected a distribution vector, got " +
                             shape_str(intent_dist->shape));
  }
  const std::size_t n = intent_dist->shape[0];
  if (gold >= n) {
    throw std::runtime_error("intent_ce: gold index " + std::to_string(gold) +
                             " out of range for " + std::to_string(n) +
                             " intents");
  }
  check_distribution("intent_ce", intent_dist);
  std::vector<double> onehot(n, 0.0);
  onehot[gold] = 1.0;
  TensorPtr y = make_tensor({n}, std::move(onehot));
  TensorPtr logp = tape.log(tape.clamp_min(intent_dist, kProbFloor));
  return tape.scale(tape.sum_all(tape.mul(y, logp)), -1.0);
}

TensorPtr slot_ce(Tape& tape, const TensorPtr& slot_dists,
                  const std::vector<std::size_t>& gold_tags) {
  if (slot_dists->rank() != 2 || slot_dists->shape[0] != gold_tags.size()) {
    throw std::runtime_error(
        "slot_ce: length mismatch, " + shape_str(slot_dists->shape) +
        " distributions vs " + std::to_string(gold_tags.size()) + " gold tags");
  }
  const std::size_t n = slot_dists->shape[0], k = slot_dists->shape[1];
  check_distribution("slot_ce", slot_dists);
  std::vector<double> onehot(n * k, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (gold_tags[t] >= k) {
      throw std::runtime_error("slot_ce: gold index out of range at position " +
                               std::to_string(t));
    }
    onehot[t * k + gold_tags[t]] = 1.0;
  }
  TensorPtr y = make_tensor({n, k}, std::move(onehot));
  TensorPtr logp = tape.log(tape.clamp_min(slot_dists, kProbFloor));
  return tape.scale(tape.sum_all(tape.mul(y, logp)), -1.0);
}

TensorPtr intra_loss(Tape& tape, const PredictionBundle& bundle_o,
                     const PredictionBundle& bundle_c) {
  if (bundle_o.word_count != bundle_c.word_count) {
    throw std::runtime_error("intra_loss: word counts differ (" +
                             std::to_string(bundle_o.word_count) + " vs " +
                             std::to_string(bundle_c.word_count) + ")");
  }
  return tape.add(jsd(tape, bundle_o.intent_dist, bundle_c.intent_dist),
                  sequence_jsd(tape, bundle_o.slot_dists, bundle_c.slot_dists));
}

TensorPtr inter_loss(Tape& tape, const PredictionBundle& bundle_o,
                     const PredictionBundle& bundle_c, const SluModel& model_o,
                     const SluModel& model_c) {
  auto term = [&](const PredictionBundle& bundle, const SluModel& model) {
    TensorPtr avg = tape.mean_axis(bundle.slot_dists, 0);
    TensorPtr projected = project_slots_to_intent(tape, model, avg);
    return jsd(tape, bundle.intent_dist, projected);
  };
  return tape.add(term(bundle_o, model_o), term(bundle_c, model_c));
}

LossBreakdown total_loss(Tape& tape, const PredictionBundle& bundle_o,
                         const PredictionBundle& bundle_c,
                         const SluModel& model_o, const SluModel& model_c,
                         std::size_t gold_intent,
                         const std::vector<std::size_t>& gold_slots,
                         const LossWeights& weights, bool disable_intra,
                         bool disable_inter) {
  weights.validate();

  LossBreakdown out;
  TensorPtr l_intent = tape.add(intent_ce(tape, bundle_o.intent_dist, gold_intent),
                                intent_ce(tape, bundle_c.intent_dist, gold_intent));
  TensorPtr l_slot = tape.add(slot_ce(tape, bundle_o.slot_dists, gold_slots),
                              slot_ce(tape, bundle_c.slot_dists, gold_slots));
  out.l_intent = l_intent->scalar();
  out.l_slot = l_slot->scalar();

  TensorPtr total = tape.add(tape.scale(l_intent, weights.alpha),
                             tape.scale(l_slot, weights.beta));
  if (!disable_intra) {
    TensorPtr l_intra = intra_loss(tape, bundle_o, bundle_c);
    out.l_intra = l_intra->scalar();
    total = tape.add(total, tape.scale(l_intra, weights.lambda));
  }
  if (!disable_inter) {
    TensorPtr l_inter = inter_loss(tape, bundle_o, bundle_c, model_o, model_c);
    out.l_inter = l_inter->scalar();
    total = tape.add(total, tape.scale(l_inter, weights.gamma));
  }
  out.total = total->scalar();
  out.total_node = total;
  return out;
}

}  // namespace xslu

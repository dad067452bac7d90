#pragma once

#include <cstddef>
#include <vector>

#include "xslu/model.hpp"
#include "xslu/tensor.hpp"

namespace xslu {

struct LossWeights {
  double alpha = 0.9;   // intent cross-entropy
  double beta = 0.1;    // slot cross-entropy
  double lambda = 0.7;  // distillation between the two models
  double gamma = 0.3;   // distillation between intent and averaged slots

  void validate() const;  // all >= 0
};

// Jensen-Shannon divergence with natural log and the equal mixture
// M = (P+Q)/2: jsd = KL(P||M)/2 + KL(Q||M)/2. Inputs must be equal-length
// distributions (entries >= 0, sum within 1e-6 of 1). Probabilities are
// floored at 1e-12 inside the logs, which also makes 0*log(0/m) contribute
// exactly zero. Result lies in [0, ln 2] and is differentiable in both
// arguments.
TensorPtr jsd(Tape& tape, const TensorPtr& p, const TensorPtr& q);

// mean of position-wise jsd over two aligned sequences of distributions,
// given as rank-2 tensors [n x k]
TensorPtr sequence_jsd(Tape& tape, const TensorPtr& s1, const TensorPtr& s2);

// -log(dist[gold]), probability floored at 1e-12
TensorPtr intent_ce(Tape& tape, const TensorPtr& intent_dist, std::size_t gold);

// sum over positions of -log(dist[t][gold[t]]) (a sum, not a mean)
TensorPtr slot_ce(Tape& tape, const TensorPtr& slot_dists,
                  const std::vector<std::size_t>& gold_tags);

// jsd between the two models' intent distributions plus the mean
// position-wise jsd between their slot distributions
TensorPtr intra_loss(Tape& tape, const PredictionBundle& bundle_o,
                     const PredictionBundle& bundle_c);

// per model: jsd between its intent distribution and its projected averaged
// slot distribution; the two terms are summed
TensorPtr inter_loss(Tape& tape, const PredictionBundle& bundle_o,
                     const PredictionBundle& bundle_c, const SluModel& model_o,
                     const SluModel& model_c);

struct LossBreakdown {
  double l_intent = 0.0;
  double l_slot = 0.0;
  double l_intra = 0.0;
  double l_inter = 0.0;
  double total = 0.0;
  TensorPtr total_node;  // scalar root for backward()
};

// alpha*L_I + beta*L_S + lambda*L_intra + gamma*L_inter. The supervision
// terms are the sums of both models' cross-entropies against the shared gold
// labels (code-switching preserves them). Disabled terms are skipped
// entirely and recorded as exactly 0.
LossBreakdown total_loss(Tape& tape, const PredictionBundle& bundle_o,
                         const PredictionBundle& bundle_c,
                         const SluModel& model_o, const SluModel& model_c,
                         std::size_t gold_intent,
                         const std::vector<std::size_t>& gold_slots,
                         const LossWeights& weights, bool disable_intra = false,
                         bool disable_inter = false);

}  // namespace xslu

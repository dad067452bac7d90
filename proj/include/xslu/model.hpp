#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xslu/data.hpp"
#include "xslu/tensor.hpp"

namespace xslu {

struct EncoderConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 2;
  std::size_t n_blocks = 2;
  std::size_t ffn_dim = 128;
  std::size_t max_seq_len = 64;
  std::size_t subword_vocab_size = 0;  // filled from the subword vocab

  void validate() const;  // d_model % n_heads == 0, dims >= 1
};

struct AttentionHead {
  TensorPtr wq, wk, wv;  // [d_model x d_head]
};

struct EncoderBlock {
  std::vector<AttentionHead> heads;
  TensorPtr wo, bo;              // [d_model x d_model], [d_model]
  TensorPtr ln1_gain, ln1_bias;  // [d_model]
  TensorPtr w1, b1;              // [d_model x ffn_dim], [ffn_dim]
  TensorPtr w2, b2;              // [ffn_dim x d_model], [d_model]
  TensorPtr ln2_gain, ln2_bias;  // [d_model]
};

// Token+position embeddings, post-norm transformer blocks, and three linear
// heads: intent over h_CLS, slots over first-sub-token states, and the
// slot->intent projection used by the distillation loss between intent and
// averaged slot distributions.
struct SluModel {
  EncoderConfig config;
  std::size_t n_intents = 0, n_slot_tags = 0;

  TensorPtr tok_emb;  // [vocab x d_model]
  TensorPtr pos_emb;  // [max_seq_len x d_model]
  std::vector<EncoderBlock> blocks;
  TensorPtr w_intent, b_intent;  // [n_I x d_model], [n_I]
  TensorPtr w_slot, b_slot;      // [n_S x d_model], [n_S]
  TensorPtr w_proj, b_proj;      // [n_I x n_S], [n_I]

  // stable construction order; names are the checkpoint block names
  std::vector<std::pair<std::string, TensorPtr>> named_params() const;
  std::vector<TensorPtr> params() const;
  // mutable slots in the same order, for rebinding parameters in place
  std::vector<TensorPtr*> param_slots();
  void zero_grads() const;
};

// deep copy: fresh parameter tensors with the same values
SluModel clone_model(const SluModel& model);

SluModel init_model(const EncoderConfig& config, const LabelVocab& labels,
                    std::uint64_t seed);

// architecturally identical pair: model_o consumes original utterances,
// model_c the code-switched ones
struct DualModel {
  SluModel model_o;
  SluModel model_c;
};

DualModel init_dual_model(const EncoderConfig& config, const LabelVocab& labels,
                          std::uint64_t seed, bool shared_init);

// hidden states, one row of width d_model per sub-token ([CLS] first)
TensorPtr encode(Tape& tape, const SluModel& model,
                 const TokenizedExample& tokens);

struct PredictionBundle {
  TensorPtr intent_logits;  // [n_I]
  TensorPtr intent_dist;    // [n_I]
  TensorPtr slot_logits;    // [n x n_S], one row per word
  TensorPtr slot_dists;     // [n x n_S]
  std::size_t word_count = 0;
};

PredictionBundle predict(Tape& tape, const SluModel& model,
                         const TokenizedExample& tokens);

// softmax(Wp . avg_slot_dist + bp): maps an averaged slot distribution
// ([n_S]) into intent space ([n_I]); trainable end to end
TensorPtr project_slots_to_intent(Tape& tape, const SluModel& model,
                                  const TensorPtr& avg_slot_dist);

// --- checkpoint container ----------------------------------------------------
// little-endian binary: magic, version, encoder config, label vocab, subword
// vocab, then named parameter blocks for both models

struct Checkpoint {
  EncoderConfig config;
  LabelVocab labels;
  SubwordVocab subwords;
  DualModel dual;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace xslu

#include "xslu/gradcheck_suite.hpp"

#include <cmath>
#include <stdexcept>

#include "xslu/losses.hpp"
#include "xslu/model.hpp"
#include "xslu/rng.hpp"

namespace xslu {

namespace {

TensorPtr random_tensor(SplitMix64& rng, std::vector<std::size_t> shape,
                        double lo, double hi) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> values(n);
  for (double& v : values) v = rng.uniform(lo, hi);
  return make_tensor(std::move(shape), std::move(values));
}

// random values bounded away from zero, for kinked ops (relu, clamp)
TensorPtr random_tensor_off_zero(SplitMix64& rng, std::vector<std::size_t> shape,
                                 double margin) {
  TensorPtr t = random_tensor(rng, std::move(shape), -1.0, 1.0);
  for (double& v : t->values) {
    v = v >= 0.0 ? v + margin : v - margin;
  }
  return t;
}

// weighted sum against fixed coefficients turns any op output into a scalar
// with informative gradients everywhere
TensorPtr weighted_sum(Tape& tape, const TensorPtr& x, const TensorPtr& w) {
  return tape.sum_all(tape.mul(x, w));
}

TokenizedExample toy_tokens(SplitMix64& rng, std::size_t vocab,
                            std::size_t n_words, std::size_t max_pieces_per_word) {
  TokenizedExample tok;
  tok.subtoken_ids.push_back(SubwordVocab::kCls);
  for (std::size_t w = 0; w < n_words; ++w) {
    tok.first_subtoken_index.push_back(tok.subtoken_ids.size());
    const std::size_t pieces = 1 + rng.next_below(max_pieces_per_word);
    for (std::size_t p = 0; p < pieces; ++p) {
      tok.subtoken_ids.push_back(4 + rng.next_below(vocab - 4));
    }
    tok.source.words.push_back("w" + std::to_string(w));
    tok.source.slot_tags.push_back("O");
  }
  tok.subtoken_ids.push_back(SubwordVocab::kSep);
  return tok;
}

}  // namespace

std::vector<SuiteCheck> run_gradcheck_suite(const GradcheckSuiteOptions& opt) {
  const bool medium = opt.scale == "medium";
  if (!medium && opt.scale != "small") {
    throw std::runtime_error("gradcheck suite: unknown scale '" + opt.scale + "'");
  }
  const std::size_t d1 = medium ? 6 : 3;   // generic small dim
  const std::size_t d2 = medium ? 8 : 4;   // generic other dim

  std::vector<SuiteCheck> out;
  auto run = [&](const std::string& name, std::uint64_t seed, const ScalarFn& f,
                 const std::vector<TensorPtr>& inputs) {
    out.push_back({name, seed, grad_check(f, inputs, opt.h, opt.tol)});
  };

  for (std::uint64_t seed = 1; seed <= opt.n_seeds; ++seed) {
    SplitMix64 rng(mix_seed(seed, hash_stream("gradcheck-suite")));

    // --- forward ops -----------------------------------------------------
    {
      auto w = random_tensor(rng, {d1, d1}, -1, 1);
      run("matmul", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.matmul(in[0], in[1]), w);
          },
          {random_tensor(rng, {d1, d2}, -2, 2), random_tensor(rng, {d2, d1}, -2, 2)});
    }
    {
      auto w = random_tensor(rng, {d1, d2}, -1, 1);
      run("add_broadcast", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.add(in[0], in[1]), w);
          },
          {random_tensor(rng, {d1, d2}, -2, 2), random_tensor(rng, {d2}, -2, 2)});
      run("mul_broadcast", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.mul(in[0], in[1]), w);
          },
          {random_tensor(rng, {d1, d2}, -2, 2), random_tensor(rng, {d2}, -2, 2)});
      run("scale", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.scale(in[0], -1.7), w);
          },
          {random_tensor(rng, {d1, d2}, -2, 2)});
      run("softmax", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.softmax(in[0]), w);
          },
          {random_tensor(rng, {d1, d2}, -3, 3)});
      run("log", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.log(in[0]), w);
          },
          {random_tensor(rng, {d1, d2}, 0.2, 3.0)});
      run("clamp_min", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.clamp_min(in[0], 0.0), w);
          },
          {random_tensor_off_zero(rng, {d1, d2}, 0.1)});
      run("relu", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.relu(in[0]), w);
          },
          {random_tensor_off_zero(rng, {d1, d2}, 0.1)});
      run("layer_norm", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.layer_norm(in[0]), w);
          },
          {random_tensor(rng, {d1, d2}, -2, 2)});
      run("transpose", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.transpose(in[0]), w);
          },
          {random_tensor(rng, {d2, d1}, -2, 2)});
      run("reshape", seed,
          [w, d1, d2](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.reshape(in[0], {d1, d2}), w);
          },
          {random_tensor(rng, {d1 * d2}, -2, 2)});
    }
    {
      auto w = random_tensor(rng, {d2, d1}, -1, 1);
      std::vector<std::size_t> rows = {0, 2, 2, 1};
      rows.resize(d2, 0);
      run("embedding_gather", seed,
          [w, rows](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.embedding_gather(in[0], rows), w);
          },
          {random_tensor(rng, {d1 + 2, d1}, -2, 2)});
    }
    {
      auto wc = random_tensor(rng, {d2}, -1, 1);
      auto wr = random_tensor(rng, {d1}, -1, 1);
      run("sum_axis0", seed,
          [wc](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.sum_axis(in[0], 0), wc);
          },
          {random_tensor(rng, {d1, d2}, -2, 2)});
      run("sum_axis1", seed,
          [wr](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.sum_axis(in[0], 1), wr);
          },
          {random_tensor(rng, {d1, d2}, -2, 2)});
      run("mean_axis0", seed,
          [wc](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.mean_axis(in[0], 0), wc);
          },
          {random_tensor(rng, {d1, d2}, -2, 2)});
      run("mean", seed,
          [](Tape& t, const std::vector<TensorPtr>& in) {
            return t.mean_all(in[0]);
          },
          {random_tensor(rng, {d1, d2}, -2, 2)});
      run("sum", seed,
          [](Tape& t, const std::vector<TensorPtr>& in) {
            return t.sum_all(in[0]);
          },
          {random_tensor(rng, {d1, d2}, -2, 2)});
    }
    {
      auto w = random_tensor(rng, {d1, d2 + d1}, -1, 1);
      run("concat_axis1", seed,
          [w](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.concat({in[0], in[1]}, 1), w);
          },
          {random_tensor(rng, {d1, d2}, -2, 2), random_tensor(rng, {d1, d1}, -2, 2)});
      auto w0 = random_tensor(rng, {d1 + d2, d1}, -1, 1);
      run("concat_axis0", seed,
          [w0](Tape& t, const std::vector<TensorPtr>& in) {
            return weighted_sum(t, t.concat({in[0], in[1]}, 0), w0);
          },
          {random_tensor(rng, {d1, d1}, -2, 2), random_tensor(rng, {d2, d1}, -2, 2)});
    }

    // --- losses in isolation ----------------------------------------------
    run("jsd_through_softmax", seed,
        [](Tape& t, const std::vector<TensorPtr>& in) {
          return jsd(t, t.softmax(in[0]), t.softmax(in[1]));
        },
        {random_tensor(rng, {d2 + 1}, -2, 2), random_tensor(rng, {d2 + 1}, -2, 2)});
    {
      // direct distribution inputs; h perturbations stay within the
      // distribution-sum tolerance
      auto mk_dist = [&](std::size_t k) {
        TensorPtr t = random_tensor(rng, {k}, 0.2, 1.0);
        double sum = 0.0;
        for (double v : t->values) sum += v;
        for (double& v : t->values) v /= sum;
        return t;
      };
      run("jsd_direct", seed,
          [](Tape& t, const std::vector<TensorPtr>& in) {
            return jsd(t, in[0], in[1]);
          },
          {mk_dist(d2), mk_dist(d2)});
    }
    run("sequence_jsd", seed,
        [](Tape& t, const std::vector<TensorPtr>& in) {
          return sequence_jsd(t, t.softmax(in[0]), t.softmax(in[1]));
        },
        {random_tensor(rng, {d1, d2}, -2, 2), random_tensor(rng, {d1, d2}, -2, 2)});
    run("intent_ce", seed,
        [](Tape& t, const std::vector<TensorPtr>& in) {
          return intent_ce(t, t.softmax(in[0]), 1);
        },
        {random_tensor(rng, {d2}, -2, 2)});
    run("slot_ce", seed,
        [d1](Tape& t, const std::vector<TensorPtr>& in) {
          std::vector<std::size_t> gold(d1, 0);
          return slot_ce(t, t.softmax(in[0]), gold);
        },
        {random_tensor(rng, {d1, d2}, -2, 2)});
    {
      const std::size_t n_i = d1, n_s = d2, n_words = d1;
      auto make_bundle = [n_i](Tape& t, const TensorPtr& il, const TensorPtr& sl) {
        PredictionBundle b;
        b.intent_logits = il;
        b.intent_dist = t.softmax(il);
        b.slot_logits = sl;
        b.slot_dists = t.softmax(sl);
        b.word_count = sl->shape[0];
        (void)n_i;
        return b;
      };
      run("intra_loss", seed,
          [make_bundle](Tape& t, const std::vector<TensorPtr>& in) {
            PredictionBundle bo = make_bundle(t, in[0], in[1]);
            PredictionBundle bc = make_bundle(t, in[2], in[3]);
            return intra_loss(t, bo, bc);
          },
          {random_tensor(rng, {n_i}, -2, 2), random_tensor(rng, {n_words, n_s}, -2, 2),
           random_tensor(rng, {n_i}, -2, 2), random_tensor(rng, {n_words, n_s}, -2, 2)});
      run("inter_loss", seed,
          [make_bundle, n_i, n_s](Tape& t, const std::vector<TensorPtr>& in) {
            PredictionBundle bo = make_bundle(t, in[0], in[1]);
            PredictionBundle bc = make_bundle(t, in[2], in[3]);
            SluModel mo, mc;
            mo.n_intents = mc.n_intents = n_i;
            mo.n_slot_tags = mc.n_slot_tags = n_s;
            mo.w_proj = in[4];
            mo.b_proj = in[5];
            mc.w_proj = in[6];
            mc.b_proj = in[7];
            return inter_loss(t, bo, bc, mo, mc);
          },
          {random_tensor(rng, {n_i}, -2, 2), random_tensor(rng, {n_words, n_s}, -2, 2),
           random_tensor(rng, {n_i}, -2, 2), random_tensor(rng, {n_words, n_s}, -2, 2),
           random_tensor(rng, {n_i, n_s}, -1, 1), random_tensor(rng, {n_i}, -1, 1),
           random_tensor(rng, {n_i, n_s}, -1, 1), random_tensor(rng, {n_i}, -1, 1)});
    }

    // --- full weighted loss through a 2-block dual model -------------------
    {
      EncoderConfig enc;
      enc.d_model = medium ? 16 : 8;
      enc.n_heads = 2;
      enc.n_blocks = 2;
      enc.ffn_dim = medium ? 24 : 12;
      enc.max_seq_len = 16;
      enc.subword_vocab_size = 16;
      LabelVocab labels;
      labels.add_intent("a");
      labels.add_intent("b");
      labels.add_intent("c");
      labels.add_slot("O");
      labels.add_slot("B-x");
      labels.add_slot("I-x");
      labels.add_slot("B-y");

      DualModel proto = init_dual_model(enc, labels, seed, false);
      // evaluate at a point with stronger attention weights: near-uniform
      // attention leaves some score-path gradients close to the
      // finite-difference noise floor at h=1e-6
      for (auto& model : {std::ref(proto.model_o), std::ref(proto.model_c)}) {
        for (auto& blk : model.get().blocks) {
          for (auto& head : blk.heads) {
            for (double& v : head.wq->values) v *= 2.5;
            for (double& v : head.wk->values) v *= 2.5;
          }
        }
      }
      const std::size_t n_words = 5;
      TokenizedExample tok_o = toy_tokens(rng, enc.subword_vocab_size, n_words, 2);
      TokenizedExample tok_c = toy_tokens(rng, enc.subword_vocab_size, n_words, 2);
      const std::vector<std::size_t> gold_slots = {1, 2, 0, 3, 0};
      const LossWeights weights;  // the 0.9 / 0.1 / 0.7 / 0.3 defaults

      std::vector<TensorPtr> inputs;
      const std::size_t n_params_o = proto.model_o.params().size();
      for (const auto& p : proto.model_o.params()) inputs.push_back(p);
      for (const auto& p : proto.model_c.params()) inputs.push_back(p);

      run("total_loss_2block", seed,
          [proto, tok_o, tok_c, gold_slots, weights, n_params_o](
              Tape& t, const std::vector<TensorPtr>& in) {
            SluModel mo = proto.model_o;
            SluModel mc = proto.model_c;
            std::size_t i = 0;
            for (TensorPtr* slot : mo.param_slots()) *slot = in[i++];
            for (TensorPtr* slot : mc.param_slots()) *slot = in[i++];
            (void)n_params_o;
            PredictionBundle bo = predict(t, mo, tok_o);
            PredictionBundle bc = predict(t, mc, tok_c);
            return total_loss(t, bo, bc, mo, mc, 1, gold_slots, weights)
                .total_node;
          },
          inputs);
    }
  }
  return out;
}

bool all_passed(const std::vector<SuiteCheck>& checks) {
  for (const auto& c : checks) {
    if (!c.report.pass) return false;
  }
  return true;
}

}  // namespace xslu

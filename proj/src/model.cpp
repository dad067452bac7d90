#include "xslu/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "xslu/rng.hpp"

namespace xslu {

void EncoderConfig::validate() const {
  if (d_model < 1 || n_heads < 1 || ffn_dim < 1 || max_seq_len < 1 ||
      subword_vocab_size < 1) {
    throw std::runtime_error("encoder config: all dims must be >= 1");
  }
  if (d_model % n_heads != 0) {
    throw std::runtime_error("encoder config: d_model " +
                             std::to_string(d_model) +
                             " not divisible by n_heads " +
                             std::to_string(n_heads));
  }
}

std::vector<std::pair<std::string, TensorPtr>> SluModel::named_params() const {
  std::vector<std::pair<std::string, TensorPtr>> out;
  out.emplace_back("tok_emb", tok_emb);
  out.emplace_back("pos_emb", pos_emb);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    const EncoderBlock& blk = blocks[b];
    for (std::size_t h = 0; h < blk.heads.size(); ++h) {
      const std::string hp = prefix + "head" + std::to_string(h) + ".";
      out.emplace_back(hp + "wq", blk.heads[h].wq);
      out.emplace_back(hp + "wk", blk.heads[h].wk);
      out.emplace_back(hp + "wv", blk.heads[h].wv);
    }
    out.emplace_back(prefix + "wo", blk.wo);
    out.emplace_back(prefix + "bo", blk.bo);
    out.emplace_back(prefix + "ln1_gain", blk.ln1_gain);
    out.emplace_back(prefix + "ln1_bias", blk.ln1_bias);
    out.emplace_back(prefix + "w1", blk.w1);
    out.emplace_back(prefix + "b1", blk.b1);
    out.emplace_back(prefix + "w2", blk.w2);
    out.emplace_back(prefix + "b2", blk.b2);
    out.emplace_back(prefix + "ln2_gain", blk.ln2_gain);
    out.emplace_back(prefix + "ln2_bias", blk.ln2_bias);
  }
  out.emplace_back("w_intent", w_intent);
  out.emplace_back("b_intent", b_intent);
  out.emplace_back("w_slot", w_slot);
  out.emplace_back("b_slot", b_slot);
  out.emplace_back("w_proj", w_proj);
  out.emplace_back("b_proj", b_proj);
  return out;
}

std::vector<TensorPtr> SluModel::params() const {
  std::vector<TensorPtr> out;
  for (auto& [name, p] : named_params()) out.push_back(p);
  return out;
}

std::vector<TensorPtr*> SluModel::param_slots() {
  std::vector<TensorPtr*> out;
  out.push_back(&tok_emb);
  out.push_back(&pos_emb);
  for (auto& blk : blocks) {
    for (auto& head : blk.heads) {
      out.push_back(&head.wq);
      out.push_back(&head.wk);
      out.push_back(&head.wv);
    }
    out.push_back(&blk.wo);
    out.push_back(&blk.bo);
    out.push_back(&blk.ln1_gain);
    out.push_back(&blk.ln1_bias);
    out.push_back(&blk.w1);
    out.push_back(&blk.b1);
    out.push_back(&blk.w2);
    out.push_back(&blk.b2);
    out.push_back(&blk.ln2_gain);
    out.push_back(&blk.ln2_bias);
  }
  out.push_back(&w_intent);
  out.push_back(&b_intent);
  out.push_back(&w_slot);
  out.push_back(&b_slot);
  out.push_back(&w_proj);
  out.push_back(&b_proj);
  return out;
}

void SluModel::zero_grads() const {
  for (const auto& p : params()) p->zero_grad();
}

SluModel clone_model(const SluModel& model) {
  SluModel out = model;
  for (TensorPtr* slot : out.param_slots()) {
    *slot = make_param((*slot)->shape, (*slot)->values);
  }
  return out;
}

namespace {

// Xavier-uniform for matrices: bound = sqrt(6 / (rows + cols)), which is
// symmetric in the two dims so the storage convention does not matter
TensorPtr xavier(SplitMix64& rng, std::size_t rows, std::size_t cols) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> values(rows * cols);
  for (double& v : values) v = rng.uniform(-bound, bound);
  return make_param({rows, cols}, std::move(values));
}

TensorPtr const_vector(std::size_t n, double value) {
  return make_param({n}, std::vector<double>(n, value));
}

}  // namespace

SluModel init_model(const EncoderConfig& config, const LabelVocab& labels,
                    std::uint64_t seed) {
  config.validate();
  SluModel model;
  model.config = config;
  model.n_intents = labels.n_intents();
  model.n_slot_tags = labels.n_slot_tags();
  if (model.n_intents == 0 || model.n_slot_tags == 0) {
    throw std::runtime_error("init_model: empty label vocab");
  }

  SplitMix64 rng(mix_seed(seed, hash_stream("init")));
  const std::size_t d = config.d_model;
  const std::size_t dh = d / config.n_heads;

  model.tok_emb = xavier(rng, config.subword_vocab_size, d);
  model.pos_emb = xavier(rng, config.max_seq_len, d);
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    EncoderBlock blk;
    for (std::size_t h = 0; h < config.n_heads; ++h) {
      blk.heads.push_back({xavier(rng, d, dh), xavier(rng, d, dh),
                           xavier(rng, d, dh)});
    }
    blk.wo = xavier(rng, d, d);
    blk.bo = const_vector(d, 0.0);
    blk.ln1_gain = const_vector(d, 1.0);
    blk.ln1_bias = const_vector(d, 0.0);
    blk.w1 = xavier(rng, d, config.ffn_dim);
    blk.b1 = const_vector(config.ffn_dim, 0.0);
    blk.w2 = xavier(rng, config.ffn_dim, d);
    blk.b2 = const_vector(d, 0.0);
    blk.ln2_gain = const_vector(d, 1.0);
    blk.ln2_bias = const_vector(d, 0.0);
    model.blocks.push_back(std::move(blk));
  }
  model.w_intent = xavier(rng, model.n_intents, d);
  model.b_intent = const_vector(model.n_intents, 0.0);
  model.w_slot = xavier(rng, model.n_slot_tags, d);
  model.b_slot = const_vector(model.n_slot_tags, 0.0);
  model.w_proj = xavier(rng, model.n_intents, model.n_slot_tags);
  model.b_proj = const_vector(model.n_intents, 0.0);
  return model;
}

DualModel init_dual_model(const EncoderConfig& config, const LabelVocab& labels,
                          std::uint64_t seed, bool shared_init) {
  const std::uint64_t seed_o = mix_seed(seed, hash_stream("model_o"));
  const std::uint64_t seed_c =
      shared_init ? seed_o : mix_seed(seed, hash_stream("model_c"));
  return {init_model(config, labels, seed_o), init_model(config, labels, seed_c)};
}

TensorPtr encode(Tape& tape, const SluModel& model,
                 const TokenizedExample& tokens) {
  const std::size_t t = tokens.subtoken_ids.size();
  if (t > model.config.max_seq_len) {
    throw std::runtime_error(
        "encode: input has " + std::to_string(t) +
        " sub-tokens, exceeding max_seq_len " +
        std::to_string(model.config.max_seq_len));
  }
  std::vector<std::size_t> positions(t);
  std::iota(positions.begin(), positions.end(), 0);

  TensorPtr x = tape.add(tape.embedding_gather(model.tok_emb, tokens.subtoken_ids),
                         tape.embedding_gather(model.pos_emb, positions));

  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(
                                 model.config.d_model / model.config.n_heads));
  for (const EncoderBlock& blk : model.blocks) {
    // multi-head self-attention, post-norm residual wiring
    std::vector<TensorPtr> head_outs;
    head_outs.reserve(blk.heads.size());
    for (const AttentionHead& head : blk.heads) {
      TensorPtr q = tape.matmul(x, head.wq);
      TensorPtr k = tape.matmul(x, head.wk);
      TensorPtr v = tape.matmul(x, head.wv);
      TensorPtr scores = tape.scale(tape.matmul(q, tape.transpose(k)),
                                    inv_sqrt_dh);
      TensorPtr attn = tape.softmax(scores);
      head_outs.push_back(tape.matmul(attn, v));
    }
    TensorPtr attn_out = tape.add(
        tape.matmul(tape.concat(head_outs, 1), blk.wo), blk.bo);
    x = tape.add(tape.mul(tape.layer_norm(tape.add(x, attn_out)), blk.ln1_gain),
                 blk.ln1_bias);

    TensorPtr hidden = tape.relu(tape.add(tape.matmul(x, blk.w1), blk.b1));
    TensorPtr ffn_out = tape.add(tape.matmul(hidden, blk.w2), blk.b2);
    x = tape.add(tape.mul(tape.layer_norm(tape.add(x, ffn_out)), blk.ln2_gain),
                 blk.ln2_bias);
  }
  return x;
}

PredictionBundle predict(Tape& tape, const SluModel& model,
                         const TokenizedExample& tokens) {
  TensorPtr h = encode(tape, model, tokens);

  PredictionBundle out;
  out.word_count = tokens.first_subtoken_index.size();

  TensorPtr cls = tape.embedding_gather(h, {0});  // [1 x d]
  TensorPtr intent_logits_row =
      tape.add(tape.matmul(cls, tape.transpose(model.w_intent)), model.b_intent);
  out.intent_logits = tape.reshape(intent_logits_row, {model.n_intents});
  out.intent_dist = tape.softmax(out.intent_logits);

  TensorPtr first = tape.embedding_gather(h, tokens.first_subtoken_index);
  out.slot_logits =
      tape.add(tape.matmul(first, tape.transpose(model.w_slot)), model.b_slot);
  out.slot_dists = tape.softmax(out.slot_logits);
  return out;
}

TensorPtr project_slots_to_intent(Tape& tape, const SluModel& model,
                                  const TensorPtr& avg_slot_dist) {
  if (avg_slot_dist->shape != std::vector<std::size_t>{model.n_slot_tags}) {
    throw std::runtime_error("project_slots_to_intent: expected shape [" +
                             std::to_string(model.n_slot_tags) + "], got " +
                             shape_str(avg_slot_dist->shape));
  }
  TensorPtr row = tape.reshape(avg_slot_dist, {1, model.n_slot_tags});
  TensorPtr logits =
      tape.add(tape.matmul(row, tape.transpose(model.w_proj)), model.b_proj);
  return tape.softmax(tape.reshape(logits, {model.n_intents}));
}

// --- checkpoint io -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'X', 'S', 'L', 'U', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_le<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto n = read_le<std::uint64_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

void write_model_params(std::ostream& out, const SluModel& model) {
  const auto named = model.named_params();
  write_le<std::uint64_t>(out, named.size());
  for (const auto& [name, p] : named) {
    write_string(out, name);
    write_le<std::uint64_t>(out, p->shape.size());
    for (std::size_t d : p->shape) write_le<std::uint64_t>(out, d);
    for (double v : p->values) write_le<double>(out, v);
  }
}

void read_model_params(std::istream& in, SluModel& model) {
  const auto named = model.named_params();
  const auto count = read_le<std::uint64_t>(in);
  if (count != named.size()) {
    throw std::runtime_error("checkpoint: parameter count mismatch");
  }
  for (const auto& [name, p] : named) {
    const std::string got = read_string(in);
    if (got != name) {
      throw std::runtime_error("checkpoint: expected parameter '" + name +
                               "', found '" + got + "'");
    }
    const auto ndim = read_le<std::uint64_t>(in);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = read_le<std::uint64_t>(in);
    if (shape != p->shape) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    for (double& v : p->values) v = read_le<double>(in);
  }
}

void write_config(std::ostream& out, const EncoderConfig& c) {
  write_le<std::uint64_t>(out, c.d_model);
  write_le<std::uint64_t>(out, c.n_heads);
  write_le<std::uint64_t>(out, c.n_blocks);
  write_le<std::uint64_t>(out, c.ffn_dim);
  write_le<std::uint64_t>(out, c.max_seq_len);
  write_le<std::uint64_t>(out, c.subword_vocab_size);
}

EncoderConfig read_config(std::istream& in) {
  EncoderConfig c;
  c.d_model = read_le<std::uint64_t>(in);
  c.n_heads = read_le<std::uint64_t>(in);
  c.n_blocks = read_le<std::uint64_t>(in);
  c.ffn_dim = read_le<std::uint64_t>(in);
  c.max_seq_len = read_le<std::uint64_t>(in);
  c.subword_vocab_size = read_le<std::uint64_t>(in);
  return c;
}

void write_string_list(std::ostream& out, const std::vector<std::string>& v) {
  write_le<std::uint64_t>(out, v.size());
  for (const auto& s : v) write_string(out, s);
}

std::vector<std::string> read_string_list(std::istream& in) {
  const auto n = read_le<std::uint64_t>(in);
  std::vector<std::string> v;
  v.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) v.push_back(read_string(in));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, kVersion);
  write_config(out, ckpt.config);
  write_string_list(out, ckpt.labels.intents());
  write_string_list(out, ckpt.labels.slot_tags());
  write_string_list(out, ckpt.subwords.pieces());
  write_string(out, ckpt.subwords.continuation_marker());
  write_le<std::uint64_t>(out, 2);
  write_model_params(out, ckpt.dual.model_o);
  write_model_params(out, ckpt.dual.model_c);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = read_config(in);
  for (const auto& name : read_string_list(in)) ckpt.labels.add_intent(name);
  for (const auto& name : read_string_list(in)) ckpt.labels.add_slot(name);
  ckpt.subwords.set_pieces(read_string_list(in));
  const std::string marker = read_string(in);
  if (marker != ckpt.subwords.continuation_marker()) {
    throw std::runtime_error("checkpoint: unexpected continuation marker");
  }
  const auto n_models = read_le<std::uint64_t>(in);
  if (n_models != 2) {
    throw std::runtime_error("checkpoint: expected 2 models, found " +
                             std::to_string(n_models));
  }
  // parameter layout comes from a fresh init with the stored config
  ckpt.dual = init_dual_model(ckpt.config, ckpt.labels, 0, false);
  read_model_params(in, ckpt.dual.model_o);
  read_model_params(in, ckpt.dual.model_c);
  return ckpt;
}

}  // namespace xslu

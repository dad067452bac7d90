#include "xslu/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xslu/rng.hpp"

namespace xslu {

namespace {

[[noreturn]] void fail_line(const std::string& path, std::size_t line,
                            const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string lowercase_ascii(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool has_whitespace(const std::string& s) {
  return s.find_first_of(" \t\r\n\f\v") != std::string::npos;
}

// splits a UTF-8 string into code points; bytes of malformed sequences are
// kept as single units so tokenization never fails
std::vector<std::string> utf8_units(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((b & 0x80u) == 0x00u) len = 1;
    else if ((b & 0xE0u) == 0xC0u) len = 2;
    else if ((b & 0xF0u) == 0xE0u) len = 3;
    else if ((b & 0xF8u) == 0xF0u) len = 4;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0u) != 0x80u) {
        len = 1;
        break;
      }
    }
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::string join_units(const std::vector<std::string>& units, std::size_t start,
                       std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) out += units[start + i];
  return out;
}

}  // namespace

bool is_valid_bio_tag(const std::string& tag) {
  if (tag == "O") return true;
  if (tag.size() < 3) return false;
  if (tag[0] != 'B' && tag[0] != 'I') return false;
  return tag[1] == '-';
}

// --- LabelVocab -------------------------------------------------------------

LabelVocab LabelVocab::build(const std::vector<Example>& examples) {
  LabelVocab vocab;
  for (const auto& ex : examples) {
    vocab.add_intent(ex.intent);
    for (const auto& tag : ex.slot_tags) vocab.add_slot(tag);
  }
  // zero-shot evaluation assumes O exists even if the build split never
  // produced an all-O sentence; an empty corpus keeps an empty vocab
  if (!examples.empty()) vocab.add_slot("O");
  return vocab;
}

void LabelVocab::add_intent(const std::string& name) {
  if (intent_index_.emplace(name, intents_.size()).second) {
    intents_.push_back(name);
  }
}

void LabelVocab::add_slot(const std::string& name) {
  if (slot_index_.emplace(name, slot_tags_.size()).second) {
    slot_tags_.push_back(name);
  }
}

std::size_t LabelVocab::intent_index(const std::string& name) const {
  auto it = intent_index_.find(name);
  if (it == intent_index_.end()) {
    throw std::runtime_error("label vocab: unknown intent '" + name + "'");
  }
  return it->second;
}

std::size_t LabelVocab::slot_index(const std::string& name) const {
  auto it = slot_index_.find(name);
  if (it == slot_index_.end()) {
    throw std::runtime_error("label vocab: unknown slot tag '" + name + "'");
  }
  return it->second;
}

const std::string& LabelVocab::intent_name(std::size_t index) const {
  return intents_.at(index);
}

const std::string& LabelVocab::slot_name(std::size_t index) const {
  return slot_tags_.at(index);
}

bool LabelVocab::has_intent(const std::string& name) const {
  return intent_index_.count(name) != 0;
}

bool LabelVocab::has_slot(const std::string& name) const {
  return slot_index_.count(name) != 0;
}

// --- SubwordVocab -----------------------------------------------------------

void SubwordVocab::set_pieces(std::vector<std::string> pieces) {
  pieces_ = std::move(pieces);
  index_.clear();
  for (std::size_t i = 0; i < pieces_.size(); ++i) index_.emplace(pieces_[i], i);
}

std::optional<std::size_t> SubwordVocab::find(const std::string& piece) const {
  auto it = index_.find(piece);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SubwordVocab build_subword_vocab(const std::vector<std::string>& word_tokens,
                                 std::size_t max_pieces) {
  std::map<std::string, std::size_t> chars;      // ordered for determinism
  std::map<std::string, std::size_t> substrings;
  for (const auto& word : word_tokens) {
    const auto units = utf8_units(word);
    for (const auto& u : units) ++chars[u];
    for (std::size_t len = 2; len <= units.size(); ++len) {
      for (std::size_t start = 0; start + len <= units.size(); ++start) {
        ++substrings[join_units(units, start, len)];
      }
    }
  }
  if (max_pieces < 4 + chars.size()) {
    throw std::runtime_error(
        "build_subword_vocab: max_pieces " + std::to_string(max_pieces) +
        " below reserved + alphabet size " + std::to_string(4 + chars.size()));
  }

  std::vector<std::string> pieces = {
      SubwordVocab::kReserved[0], SubwordVocab::kReserved[1],
      SubwordVocab::kReserved[2], SubwordVocab::kReserved[3]};
  for (const auto& [c, count] : chars) pieces.push_back(c);

  std::vector<std::pair<std::string, std::size_t>> ranked(substrings.begin(),
                                                          substrings.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [piece, count] : ranked) {
    if (pieces.size() >= max_pieces) break;
    pieces.push_back(piece);
  }

  SubwordVocab vocab;
  vocab.set_pieces(std::move(pieces));
  return vocab;
}

SubwordVocab build_subword_vocab(const std::vector<Example>& examples,
                                 std::size_t max_pieces) {
  std::vector<std::string> words;
  for (const auto& ex : examples) {
    words.insert(words.end(), ex.words.begin(), ex.words.end());
  }
  return build_subword_vocab(words, max_pieces);
}

// --- tokenize ---------------------------------------------------------------

namespace {

// greedy longest-match segmentation of one word into piece ids
std::vector<std::size_t> segment_word(const std::string& word,
                                      const SubwordVocab& vocab) {
  const auto units = utf8_units(word);
  std::vector<std::size_t> ids;
  std::size_t pos = 0;
  while (pos < units.size()) {
    std::optional<std::size_t> best;
    std::size_t best_len = 0;
    for (std::size_t len = units.size() - pos; len >= 1; --len) {
      if (auto id = vocab.find(join_units(units, pos, len))) {
        best = id;
        best_len = len;
        break;
      }
    }
    if (best) {
      ids.push_back(*best);
      pos += best_len;
    } else {
      ids.push_back(SubwordVocab::kUnk);
      pos += 1;
    }
  }
  return ids;
}

}  // namespace

TokenizedExample tokenize(const Example& example, const SubwordVocab& vocab) {
  TokenizedExample out;
  out.source = example;
  out.subtoken_ids.push_back(SubwordVocab::kCls);
  for (const auto& word : example.words) {
    const auto ids = segment_word(word, vocab);
    out.first_subtoken_index.push_back(out.subtoken_ids.size());
    out.subtoken_ids.insert(out.subtoken_ids.end(), ids.begin(), ids.end());
  }
  out.subtoken_ids.push_back(SubwordVocab::kSep);
  return out;
}

std::vector<std::string> word_pieces(const std::string& word,
                                     const SubwordVocab& vocab) {
  const auto ids = segment_word(word, vocab);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::string piece = vocab.piece(ids[i]);
    if (i > 0) piece = vocab.continuation_marker() + piece;
    out.push_back(std::move(piece));
  }
  return out;
}

std::vector<std::string> detokenize(const TokenizedExample& tokens,
                                    const SubwordVocab& vocab) {
  std::vector<std::string> words;
  const auto& first = tokens.first_subtoken_index;
  for (std::size_t w = 0; w < first.size(); ++w) {
    const std::size_t begin = first[w];
    const std::size_t end =
        w + 1 < first.size() ? first[w + 1] : tokens.subtoken_ids.size() - 1;
    std::string word;
    for (std::size_t i = begin; i < end; ++i) {
      word += vocab.piece(tokens.subtoken_ids[i]);
    }
    words.push_back(std::move(word));
  }
  return words;
}

// --- BilingualDictionary ----------------------------------------------------

void BilingualDictionary::add(const std::string& source_word,
                              const std::string& language,
                              const std::string& translation) {
  entries_[lowercase_ascii(source_word)][language] = translation;
}

std::optional<std::string> BilingualDictionary::translate(
    const std::string& word, const std::string& language) const {
  auto it = entries_.find(lowercase_ascii(word));
  if (it == entries_.end()) return std::nullopt;
  auto jt = it->second.find(language);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

std::vector<std::string> BilingualDictionary::available_languages(
    const std::string& word, const std::vector<std::string>& targets) const {
  std::vector<std::string> out;
  auto it = entries_.find(lowercase_ascii(word));
  if (it == entries_.end()) return out;
  for (const auto& lang : targets) {
    if (it->second.count(lang)) out.push_back(lang);
  }
  return out;
}

std::vector<std::string> BilingualDictionary::languages() const {
  std::vector<std::string> out;
  for (const auto& [word, translations] : entries_) {
    for (const auto& [lang, t] : translations) {
      if (std::find(out.begin(), out.end(), lang) == out.end()) {
        out.push_back(lang);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::string, std::map<std::string, std::string>>>
BilingualDictionary::sorted_entries() const {
  std::vector<std::pair<std::string, std::map<std::string, std::string>>> out(
      entries_.begin(), entries_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

// --- corpus files -----------------------------------------------------------

std::vector<Example> load_corpus_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);

  std::vector<Example> examples;
  Example current;
  bool has_intent = false, has_lang = false;
  std::size_t line_no = 0, example_start = 0;

  auto flush = [&](std::size_t at_line) {
    if (current.words.empty() && !has_intent && !has_lang) return;
    if (current.words.empty()) {
      fail_line(path, example_start, "example has no tokens");
    }
    if (!has_intent) fail_line(path, at_line, "example missing #intent line");
    if (!has_lang) fail_line(path, at_line, "example missing #lang line");
    examples.push_back(std::move(current));
    current = Example{};
    has_intent = has_lang = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush(line_no);
      continue;
    }
    if (current.words.empty() && !has_intent && !has_lang) {
      example_start = line_no;
    }
    if (line.rfind("#intent=", 0) == 0) {
      current.intent = line.substr(8);
      if (current.intent.empty()) fail_line(path, line_no, "empty intent label");
      has_intent = true;
      continue;
    }
    if (line.rfind("#lang=", 0) == 0) {
      current.language = line.substr(6);
      if (current.language.empty()) fail_line(path, line_no, "empty language code");
      has_lang = true;
      continue;
    }
    if (line[0] == '#') {
      fail_line(path, line_no, "unrecognized directive: " + line);
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      fail_line(path, line_no, "expected exactly one word<TAB>tag pair");
    }
    std::string word = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    if (word.empty() || tag.empty()) {
      fail_line(path, line_no, "empty word or tag field");
    }
    if (!is_valid_bio_tag(tag)) {
      fail_line(path, line_no, "malformed BIO tag '" + tag + "'");
    }
    current.words.push_back(std::move(word));
    current.slot_tags.push_back(std::move(tag));
  }
  flush(line_no + 1);
  return examples;
}

LoadedCorpus load_corpus(const std::string& path) {
  LoadedCorpus out;
  out.examples = load_corpus_examples(path);
  out.vocab = LabelVocab::build(out.examples);
  return out;
}

void write_corpus(const std::string& path, const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& ex : examples) {
    for (std::size_t i = 0; i < ex.words.size(); ++i) {
      out << ex.words[i] << '\t' << ex.slot_tags[i] << '\n';
    }
    out << "#intent=" << ex.intent << '\n';
    out << "#lang=" << ex.language << '\n';
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing corpus file: " + path);
}

// --- dictionary files -------------------------------------------------------

BilingualDictionary load_dictionary(const std::string& path,
                                    DictionaryLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dictionary file: " + path);

  BilingualDictionary dict;
  DictionaryLoadStats local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos
                                                   : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos ||
        line.find('\t', t2 + 1) != std::string::npos) {
      fail_line(path, line_no, "expected 3 tab-separated columns");
    }
    std::string source = line.substr(0, t1);
    std::string lang = line.substr(t1 + 1, t2 - t1 - 1);
    std::string translation = line.substr(t2 + 1);
    if (source.empty() || lang.empty() || translation.empty()) {
      fail_line(path, line_no, "empty column");
    }
    if (has_whitespace(translation)) {
      // multi-word translations would break the 1:1 word alignment the
      // code-switching losses rely on
      ++local.skipped_multiword;
      continue;
    }
    dict.add(source, lang, translation);
    ++local.entries;
  }
  if (stats) *stats = local;
  return dict;
}

void write_dictionary(const std::string& path, const BilingualDictionary& dict) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dictionary file: " + path);
  for (const auto& [source, translations] : dict.sorted_entries()) {
    for (const auto& [lang, translation] : translations) {
      out << source << '\t' << lang << '\t' << translation << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing dictionary file: " + path);
}

// --- synthetic corpus -------------------------------------------------------

namespace {

// Latent sentence material. Each latent token id is realized as a distinct
// surface word per language; languages use disjoint consonant inventories so
// surface vocabularies never collide.
struct LatentLayout {
  std::size_t n_intents, n_slot_labels;

  static constexpr std::size_t kFunctionWords = 4;
  static constexpr std::size_t kCarriersPerIntent = 3;
  static constexpr std::size_t kFillerTokensPerLabel = 7;

  std::size_t function_word(std::size_t f) const { return f; }
  std::size_t carrier(std::size_t intent, std::size_t c) const {
    return kFunctionWords + intent * kCarriersPerIntent + c;
  }
  std::size_t filler(std::size_t label, std::size_t k) const {
    return kFunctionWords + n_intents * kCarriersPerIntent +
           label * kFillerTokensPerLabel + k;
  }
  std::size_t total() const {
    return kFunctionWords + n_intents * kCarriersPerIntent +
           n_slot_labels * kFillerTokensPerLabel;
  }
};

std::string surface_word(std::size_t lang_index, std::size_t latent_id) {
  static constexpr const char* kConsonantGroups[5] = {"bdg", "kpt", "lmn",
                                                      "rsv", "fzw"};
  static constexpr const char* kVowels = "aeo";
  const char* cons = kConsonantGroups[lang_index % 5];
  // base-9 syllables (3 consonants x 3 vowels), at least two of them
  std::vector<std::size_t> digits;
  std::size_t v = latent_id;
  do {
    digits.push_back(v % 9);
    v /= 9;
  } while (v > 0);
  while (digits.size() < 2) digits.push_back(0);
  std::string word;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    word += cons[*it / 3];
    word += kVowels[*it % 3];
  }
  if (lang_index >= 5) {
    word += 'q';
    word += static_cast<char>('a' + (lang_index / 5 - 1) % 26);
  }
  return word;
}

struct TemplateItem {
  enum Kind { Carrier, Function, Slot } kind;
  std::size_t index;  // carrier/function index, or slot label
};

// three templates per intent over that intent's two labels
std::vector<std::vector<TemplateItem>> intent_templates(std::size_t intent,
                                                        std::size_t n_labels) {
  const std::size_t la = (2 * intent) % n_labels;
  const std::size_t lb = (2 * intent + 1) % n_labels;
  using TI = TemplateItem;
  return {
      {{TI::Carrier, 0}, {TI::Function, 0}, {TI::Slot, la}, {TI::Function, 1}},
      {{TI::Carrier, 1},
       {TI::Function, 2},
       {TI::Slot, la},
       {TI::Carrier, 2},
       {TI::Slot, lb}},
      {{TI::Function, 3}, {TI::Carrier, 0}, {TI::Slot, lb}},
  };
}

// filler sequences over a label's 7 latent tokens: three singles, two pairs
const std::vector<std::vector<std::size_t>>& filler_sequences() {
  static const std::vector<std::vector<std::size_t>> seqs = {
      {0}, {1}, {2}, {3, 4}, {5, 6}};
  return seqs;
}

struct LatentSentence {
  std::vector<std::size_t> latents;
  std::vector<std::string> tags;
  std::size_t intent;
};

LatentSentence sample_sentence(const LatentLayout& layout, SplitMix64& rng) {
  LatentSentence s;
  s.intent = rng.next_below(layout.n_intents);
  const auto templates = intent_templates(s.intent, layout.n_slot_labels);
  const auto& tmpl = templates[rng.next_below(templates.size())];
  for (const auto& item : tmpl) {
    switch (item.kind) {
      case TemplateItem::Carrier:
        s.latents.push_back(layout.carrier(s.intent, item.index));
        s.tags.push_back("O");
        break;
      case TemplateItem::Function:
        s.latents.push_back(layout.function_word(item.index));
        s.tags.push_back("O");
        break;
      case TemplateItem::Slot: {
        const auto& seqs = filler_sequences();
        const auto& seq = seqs[rng.next_below(seqs.size())];
        const std::string label = "slot" + std::to_string(item.index);
        for (std::size_t k = 0; k < seq.size(); ++k) {
          s.latents.push_back(layout.filler(item.index, seq[k]));
          s.tags.push_back((k == 0 ? "B-" : "I-") + label);
        }
        break;
      }
    }
  }
  return s;
}

}  // namespace

SynthCorpora synth_corpus(const SynthSpec& spec) {
  if (spec.languages.empty()) {
    throw std::runtime_error("synth_corpus: languages must be non-empty");
  }
  for (const auto& lang : spec.languages) {
    if (lang.empty()) throw std::runtime_error("synth_corpus: empty language code");
  }
  if (spec.n_intents < 1 || spec.n_slot_labels < 1) {
    throw std::runtime_error("synth_corpus: counts must be >= 1");
  }

  const LatentLayout layout{spec.n_intents, spec.n_slot_labels};
  SynthCorpora out;

  auto generate_split = [&](const char* split_name, std::size_t count)
      -> std::map<std::string, std::vector<Example>> {
    std::map<std::string, std::vector<Example>> per_lang;
    for (const auto& lang : spec.languages) per_lang[lang] = {};
    const std::uint64_t split_seed =
        mix_seed(spec.seed, hash_stream(split_name));
    for (std::size_t i = 0; i < count; ++i) {
      SplitMix64 rng(mix_seed(split_seed, i));
      const LatentSentence s = sample_sentence(layout, rng);
      for (std::size_t li = 0; li < spec.languages.size(); ++li) {
        Example ex;
        for (std::size_t t : s.latents) ex.words.push_back(surface_word(li, t));
        ex.slot_tags = s.tags;
        ex.intent = "intent" + std::to_string(s.intent);
        ex.language = spec.languages[li];
        per_lang[spec.languages[li]].push_back(std::move(ex));
      }
    }
    return per_lang;
  };

  out.train = generate_split("train", spec.n_train);
  out.dev = generate_split("dev", spec.n_dev);
  out.test = generate_split("test", spec.n_test);

  for (std::size_t t = 0; t < layout.total(); ++t) {
    for (std::size_t a = 0; a < spec.languages.size(); ++a) {
      for (std::size_t b = 0; b < spec.languages.size(); ++b) {
        if (a == b) continue;
        out.dictionary.add(surface_word(a, t), spec.languages[b],
                           surface_word(b, t));
      }
    }
  }
  return out;
}

}  // namespace xslu

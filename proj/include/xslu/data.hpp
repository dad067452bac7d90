#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace xslu {

// One labeled utterance: parallel word/tag sequences, a sentence-level
// intent, and a language code.
struct Example {
  std::vector<std::string> words;
  std::vector<std::string> slot_tags;  // BIO: O | B-<label> | I-<label>
  std::string intent;
  std::string language;
};

bool is_valid_bio_tag(const std::string& tag);

// Dense, order-stable label index maps shared by both models and all
// languages. Built from the training split; unknown labels at evaluation
// time are an error rather than silently added.
class LabelVocab {
 public:
  static LabelVocab build(const std::vector<Example>& examples);

  std::size_t n_intents() const { return intents_.size(); }
  std::size_t n_slot_tags() const { return slot_tags_.size(); }
  const std::vector<std::string>& intents() const { return intents_; }
  const std::vector<std::string>& slot_tags() const { return slot_tags_; }

  std::size_t intent_index(const std::string& name) const;  // throws on unknown
  std::size_t slot_index(const std::string& name) const;
  const std::string& intent_name(std::size_t index) const;
  const std::string& slot_name(std::size_t index) const;
  bool has_intent(const std::string& name) const;
  bool has_slot(const std::string& name) const;

  void add_intent(const std::string& name);  // no-op when present
  void add_slot(const std::string& name);

 private:
  std::vector<std::string> intents_, slot_tags_;
  std::unordered_map<std::string, std::size_t> intent_index_, slot_index_;
};

// Greedy longest-match subword vocabulary. Reserved ids 0-3 are [PAD],
// [UNK], [CLS], [SEP]; every single character seen at build time is a piece,
// so tokenization is total on the build corpus.
class SubwordVocab {
 public:
  static constexpr std::size_t kPad = 0, kUnk = 1, kCls = 2, kSep = 3;
  static constexpr const char* kReserved[4] = {"[PAD]", "[UNK]", "[CLS]",
                                               "[SEP]"};

  std::size_t size() const { return pieces_.size(); }
  const std::vector<std::string>& pieces() const { return pieces_; }
  const std::string& piece(std::size_t id) const { return pieces_.at(id); }
  const std::string& continuation_marker() const { return marker_; }
  std::optional<std::size_t> find(const std::string& piece) const;

  // build-time only
  void set_pieces(std::vector<std::string> pieces);

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string marker_ = "##";
};

// Frequency-based piece selection over word tokens: the four reserved
// symbols, every single character, then the most frequent word-internal
// substrings until max_pieces is reached (ties broken lexicographically).
SubwordVocab build_subword_vocab(const std::vector<std::string>& word_tokens,
                                 std::size_t max_pieces);
SubwordVocab build_subword_vocab(const std::vector<Example>& examples,
                                 std::size_t max_pieces);

struct TokenizedExample {
  std::vector<std::size_t> subtoken_ids;          // [CLS] ... [SEP]
  std::vector<std::size_t> first_subtoken_index;  // one entry per word
  Example source;
};

TokenizedExample tokenize(const Example& example, const SubwordVocab& vocab);
// pieces of one word, continuation pieces prefixed with the marker
std::vector<std::string> word_pieces(const std::string& word,
                                     const SubwordVocab& vocab);
// inverse of tokenize on the word level; unknown pieces surface as [UNK]
std::vector<std::string> detokenize(const TokenizedExample& tokens,
                                    const SubwordVocab& vocab);

// word -> (language -> translation); keys are lowercased, translations keep
// their surface form and are always single words
class BilingualDictionary {
 public:
  void add(const std::string& source_word, const std::string& language,
           const std::string& translation);
  std::optional<std::string> translate(const std::string& word,
                                       const std::string& language) const;
  // subset of `targets` (in the given order) that have an entry for word
  std::vector<std::string> available_languages(
      const std::string& word, const std::vector<std::string>& targets) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::vector<std::string> languages() const;  // sorted
  // deterministic traversal for serialization / vocab building
  std::vector<std::pair<std::string, std::map<std::string, std::string>>>
  sorted_entries() const;

 private:
  std::unordered_map<std::string, std::map<std::string, std::string>> entries_;
};

struct DictionaryLoadStats {
  std::size_t entries = 0;
  std::size_t skipped_multiword = 0;
};

// --- file formats ----------------------------------------------------------
// corpus: one `word<TAB>tag` line per token, then `#intent=<label>` and
//         `#lang=<code>` lines; a blank line ends the example
// dictionary: TSV `source_word<TAB>target_lang<TAB>translation`; '#' comments

struct LoadedCorpus {
  std::vector<Example> examples;
  LabelVocab vocab;
};

std::vector<Example> load_corpus_examples(const std::string& path);
LoadedCorpus load_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<Example>& examples);

BilingualDictionary load_dictionary(const std::string& path,
                                    DictionaryLoadStats* stats = nullptr);
void write_dictionary(const std::string& path, const BilingualDictionary& dict);

// --- synthetic corpus -------------------------------------------------------

struct SynthSpec {
  std::vector<std::string> languages = {"en", "de", "fr"};
  std::size_t n_intents = 4;
  std::size_t n_slot_labels = 6;
  std::size_t n_train = 200;
  std::size_t n_dev = 50;
  std::size_t n_test = 50;
  std::uint64_t seed = 1;
};

struct SynthCorpora {
  // per-language splits; sentences are word-for-word parallel across
  // languages, which is what makes the generated dictionary exact
  std::map<std::string, std::vector<Example>> train, dev, test;
  BilingualDictionary dictionary;
};

SynthCorpora synth_corpus(const SynthSpec& spec);

}  // namespace xslu

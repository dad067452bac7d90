#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "xslu/data.hpp"

using namespace xslu;

namespace {

const std::string kDataDir = XSLU_TEST_DATA_DIR;

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path =
      (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("corpus parsing") {
  SUBCASE("one block of three words") {
    const auto path = write_temp(
        "corpus_block.txt",
        "book\tO\nmonday\tB-day\nplease\tO\n#intent=flight\n#lang=en\n\n");
    const auto examples = load_corpus_examples(path);
    REQUIRE(examples.size() == 1);
    CHECK(examples[0].words == std::vector<std::string>{"book", "monday", "please"});
    CHECK(examples[0].slot_tags == std::vector<std::string>{"O", "B-day", "O"});
    CHECK(examples[0].intent == "flight");
    CHECK(examples[0].language == "en");
  }
  SUBCASE("empty file gives empty list and empty vocab") {
    const auto path = write_temp("corpus_empty.txt", "");
    const auto loaded = load_corpus(path);
    CHECK(loaded.examples.empty());
    CHECK(loaded.vocab.n_intents() == 0);
    CHECK(loaded.vocab.n_slot_tags() == 0);
  }
  SUBCASE("bundled sample file parses to exactly two examples") {
    const auto loaded = load_corpus(kDataDir + "/sample_corpus.txt");
    REQUIRE(loaded.examples.size() == 2);
    const Example& a = loaded.examples[0];
    CHECK(a.words == std::vector<std::string>{"what", "time"});
    CHECK(a.slot_tags == std::vector<std::string>{"O", "B-time"});
    CHECK(a.intent == "ask_time");
    CHECK(a.language == "en");
    const Example& b = loaded.examples[1];
    CHECK(b.words == std::vector<std::string>{"billige", "fluege"});
    CHECK(b.slot_tags == std::vector<std::string>{"B-price", "I-price"});
    CHECK(b.intent == "find_flight");
    CHECK(b.language == "de");
    // vocab in first-occurrence order
    CHECK(loaded.vocab.intents() ==
          std::vector<std::string>{"ask_time", "find_flight"});
    CHECK(loaded.vocab.slot_tags() ==
          std::vector<std::string>{"O", "B-time", "B-price", "I-price"});
  }
  SUBCASE("token line without a tab reports the line number") {
    const auto path =
        write_temp("corpus_notab.txt", "ok\tO\nbroken line\n#intent=x\n#lang=en\n\n");
    CHECK_THROWS_WITH(load_corpus_examples(path), doctest::Contains(":2:"));
  }
  SUBCASE("malformed BIO tag reports the line number") {
    const auto path =
        write_temp("corpus_badbio.txt", "ok\tZ-day\n#intent=x\n#lang=en\n\n");
    CHECK_THROWS_WITH(load_corpus_examples(path),
                      doctest::Contains("malformed BIO tag 'Z-day'"));
  }
  SUBCASE("missing intent is an error") {
    const auto path = write_temp("corpus_nointent.txt", "ok\tO\n#lang=en\n\n");
    CHECK_THROWS_WITH(load_corpus_examples(path),
                      doctest::Contains("missing #intent"));
  }
  SUBCASE("write then load round trips") {
    const auto loaded = load_corpus(kDataDir + "/sample_corpus.txt");
    const auto path = write_temp("corpus_roundtrip.txt", "");
    write_corpus(path, loaded.examples);
    const auto again = load_corpus_examples(path);
    REQUIRE(again.size() == loaded.examples.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
      CHECK(again[i].words == loaded.examples[i].words);
      CHECK(again[i].slot_tags == loaded.examples[i].slot_tags);
      CHECK(again[i].intent == loaded.examples[i].intent);
      CHECK(again[i].language == loaded.examples[i].language);
    }
  }
  SUBCASE("loading twice is byte-deterministic") {
    const auto a = load_corpus(kDataDir + "/sample_corpus.txt");
    const auto b = load_corpus(kDataDir + "/sample_corpus.txt");
    CHECK(a.examples.size() == b.examples.size());
    CHECK(a.vocab.intents() == b.vocab.intents());
    CHECK(a.vocab.slot_tags() == b.vocab.slot_tags());
  }
}

TEST_CASE("label vocab round trips") {
  LabelVocab vocab;
  vocab.add_intent("x");
  vocab.add_intent("y");
  vocab.add_slot("O");
  vocab.add_slot("B-a");
  for (std::size_t i = 0; i < vocab.n_intents(); ++i) {
    CHECK(vocab.intent_index(vocab.intent_name(i)) == i);
  }
  for (std::size_t i = 0; i < vocab.n_slot_tags(); ++i) {
    CHECK(vocab.slot_index(vocab.slot_name(i)) == i);
  }
  CHECK_THROWS_WITH(vocab.intent_index("zzz"), doctest::Contains("unknown intent"));
  CHECK_THROWS_WITH(vocab.slot_index("B-zzz"), doctest::Contains("unknown slot"));
}

TEST_CASE("subword vocab construction") {
  SUBCASE("corpus {aa} contains both the char and the pair") {
    const auto vocab = build_subword_vocab(std::vector<std::string>{"aa"}, 64);
    CHECK(vocab.find("a").has_value());
    CHECK(vocab.find("aa").has_value());
  }
  SUBCASE("reserved symbols occupy ids 0-3") {
    const auto vocab = build_subword_vocab(std::vector<std::string>{"ab"}, 64);
    CHECK(vocab.piece(SubwordVocab::kPad) == "[PAD]");
    CHECK(vocab.piece(SubwordVocab::kUnk) == "[UNK]");
    CHECK(vocab.piece(SubwordVocab::kCls) == "[CLS]");
    CHECK(vocab.piece(SubwordVocab::kSep) == "[SEP]");
  }
  SUBCASE("identical corpora give identical vocabs") {
    const std::vector<std::string> words = {"abab", "ab", "ba", "cac"};
    const auto a = build_subword_vocab(words, 32);
    const auto b = build_subword_vocab(words, 32);
    CHECK(a.pieces() == b.pieces());
  }
  SUBCASE("one extra slot goes to the most frequent substring") {
    // hand count over {abab, ab}: "ab" occurs 3 times (positions 0 and 2 of
    // abab, plus ab itself); every other substring occurs once
    const auto vocab =
        build_subword_vocab(std::vector<std::string>{"abab", "ab"}, 4 + 2 + 1);
    CHECK(vocab.size() == 7);
    CHECK(vocab.find("ab").has_value());
    CHECK(!vocab.find("ba").has_value());
    CHECK(!vocab.find("abab").has_value());
  }
  SUBCASE("budget below reserved plus alphabet is rejected") {
    CHECK_THROWS_WITH(build_subword_vocab(std::vector<std::string>{"abc"}, 6),
                      doctest::Contains("below reserved + alphabet"));
  }
}

TEST_CASE("tokenize") {
  SUBCASE("word fully in vocab is a single sub-token") {
    const auto vocab = build_subword_vocab(std::vector<std::string>{"hello"}, 64);
    Example ex{{"hello"}, {"O"}, "x", "en"};
    const auto tok = tokenize(ex, vocab);
    REQUIRE(tok.first_subtoken_index.size() == 1);
    CHECK(tok.subtoken_ids.size() == 3);  // CLS hello SEP
    CHECK(tok.subtoken_ids.front() == SubwordVocab::kCls);
    CHECK(tok.subtoken_ids.back() == SubwordVocab::kSep);
    CHECK(vocab.piece(tok.subtoken_ids[tok.first_subtoken_index[0]]) == "hello");
  }
  SUBCASE("greedy longest match: abc over {a,b,c,ab} gives [ab, ##c]") {
    SubwordVocab vocab;
    vocab.set_pieces({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "b", "c", "ab"});
    const auto pieces = word_pieces("abc", vocab);
    CHECK(pieces == std::vector<std::string>{"ab", "##c"});
  }
  SUBCASE("unknown characters fall back to [UNK]") {
    const auto vocab = build_subword_vocab(std::vector<std::string>{"ab"}, 64);
    Example ex{{"aXb"}, {"O"}, "x", "en"};
    const auto tok = tokenize(ex, vocab);
    bool has_unk = false;
    for (std::size_t id : tok.subtoken_ids) {
      if (id == SubwordVocab::kUnk) has_unk = true;
    }
    CHECK(has_unk);
  }
  SUBCASE("first sub-token indices are strictly increasing and interior") {
    const std::vector<std::string> words = {"abab", "ab", "cd", "dcd"};
    const auto vocab = build_subword_vocab(words, 16);  // forces multi-piece words
    Example ex{{"abab", "cd", "dcd"}, {"O", "O", "O"}, "x", "en"};
    const auto tok = tokenize(ex, vocab);
    REQUIRE(tok.first_subtoken_index.size() == ex.words.size());
    for (std::size_t i = 0; i < tok.first_subtoken_index.size(); ++i) {
      CHECK(tok.first_subtoken_index[i] > 0);
      CHECK(tok.first_subtoken_index[i] < tok.subtoken_ids.size() - 1);
      if (i > 0) {
        CHECK(tok.first_subtoken_index[i] > tok.first_subtoken_index[i - 1]);
      }
    }
  }
  SUBCASE("detokenize inverts tokenize on every corpus word") {
    const SynthCorpora corpora = synth_corpus({});
    std::vector<std::string> words;
    for (const auto& [lang, examples] : corpora.train) {
      for (const auto& ex : examples) {
        words.insert(words.end(), ex.words.begin(), ex.words.end());
      }
    }
    const auto vocab = build_subword_vocab(words, 512);
    for (const auto& [lang, examples] : corpora.train) {
      for (const auto& ex : examples) {
        const auto tok = tokenize(ex, vocab);
        REQUIRE(tok.first_subtoken_index.size() == ex.words.size());
        CHECK(detokenize(tok, vocab) == ex.words);
      }
    }
  }
}

TEST_CASE("dictionary") {
  SUBCASE("single line lookup") {
    const auto path = write_temp("dict_one.tsv", "cheap\tde\tbillig\n");
    const auto dict = load_dictionary(path);
    REQUIRE(dict.translate("cheap", "de").has_value());
    CHECK(*dict.translate("cheap", "de") == "billig");
    CHECK(!dict.translate("cheap", "fr").has_value());
    CHECK(!dict.translate("expensive", "de").has_value());
  }
  SUBCASE("multi-word translations are skipped and counted") {
    DictionaryLoadStats stats;
    const auto dict = load_dictionary(kDataDir + "/sample_dict.tsv", &stats);
    CHECK(stats.skipped_multiword == 1);  // "nicht teuer"
    CHECK(stats.entries == 2);            // cheap->de, cheap->fr
    CHECK(dict.size() == 1);              // one source key
    CHECK(*dict.translate("cheap", "fr") == "pascher");
    CHECK(!dict.translate("new york", "de").has_value());
  }
  SUBCASE("lookups are case-normalized, translations keep their surface") {
    const auto path = write_temp("dict_case.tsv", "Cheap\tde\tBillig\n");
    const auto dict = load_dictionary(path);
    REQUIRE(dict.translate("CHEAP", "de").has_value());
    CHECK(*dict.translate("CHEAP", "de") == "Billig");
  }
  SUBCASE("wrong column count reports the line number") {
    const auto path = write_temp("dict_cols.tsv", "a\tde\tb\nbad line\n");
    CHECK_THROWS_WITH(load_dictionary(path), doctest::Contains(":2:"));
  }
  SUBCASE("duplicate entries: last one wins") {
    const auto path = write_temp("dict_dup.tsv", "a\tde\tx\na\tde\ty\n");
    const auto dict = load_dictionary(path);
    CHECK(*dict.translate("a", "de") == "y");
  }
  SUBCASE("comments and blank lines are ignored") {
    const auto path = write_temp("dict_comment.tsv", "# a comment\n\na\tde\tb\n");
    CHECK(load_dictionary(path).size() == 1);
  }
}

TEST_CASE("synthetic corpus") {
  SUBCASE("same seed is byte-identical on disk") {
    const SynthCorpora a = synth_corpus({});
    const SynthCorpora b = synth_corpus({});
    const auto pa = write_temp("synth_a.txt", "");
    const auto pb = write_temp("synth_b.txt", "");
    write_corpus(pa, a.train.at("en"));
    write_corpus(pb, b.train.at("en"));
    CHECK(slurp(pa) == slurp(pb));
    const auto da = write_temp("synth_dict_a.tsv", "");
    const auto db = write_temp("synth_dict_b.tsv", "");
    write_dictionary(da, a.dictionary);
    write_dictionary(db, b.dictionary);
    CHECK(slurp(da) == slurp(db));
  }
  SUBCASE("single language, ten sentences") {
    SynthSpec spec;
    spec.languages = {"en"};
    spec.n_train = 10;
    const SynthCorpora corpora = synth_corpus(spec);
    REQUIRE(corpora.train.size() == 1);
    CHECK(corpora.train.at("en").size() == 10);
    for (const auto& ex : corpora.train.at("en")) CHECK(ex.language == "en");
    CHECK(corpora.dictionary.empty());  // no language pairs
  }
  SUBCASE("default spec yields n_I=4 and n_S=13") {
    const SynthCorpora corpora = synth_corpus({});
    const LabelVocab vocab = LabelVocab::build(corpora.train.at("en"));
    CHECK(vocab.n_intents() == 4);
    CHECK(vocab.n_slot_tags() == 13);  // O plus B-/I- for six labels
  }
  SUBCASE("languages are word-for-word parallel with disjoint surfaces") {
    const SynthCorpora corpora = synth_corpus({});
    const auto& en = corpora.train.at("en");
    const auto& de = corpora.train.at("de");
    REQUIRE(en.size() == de.size());
    std::set<std::string> en_words, de_words;
    for (std::size_t i = 0; i < en.size(); ++i) {
      CHECK(en[i].words.size() == de[i].words.size());
      CHECK(en[i].slot_tags == de[i].slot_tags);
      CHECK(en[i].intent == de[i].intent);
      en_words.insert(en[i].words.begin(), en[i].words.end());
      de_words.insert(de[i].words.begin(), de[i].words.end());
    }
    for (const auto& w : en_words) CHECK(!de_words.count(w));
  }
  SUBCASE("generated dictionary translates every word exactly") {
    const SynthCorpora corpora = synth_corpus({});
    const auto& en = corpora.train.at("en");
    const auto& de = corpora.train.at("de");
    for (std::size_t i = 0; i < en.size(); ++i) {
      for (std::size_t w = 0; w < en[i].words.size(); ++w) {
        const auto t = corpora.dictionary.translate(en[i].words[w], "de");
        REQUIRE(t.has_value());
        CHECK(*t == de[i].words[w]);
      }
    }
  }
  SUBCASE("invalid specs are rejected") {
    SynthSpec bad;
    bad.languages = {};
    CHECK_THROWS(synth_corpus(bad));
    bad.languages = {"en"};
    bad.n_intents = 0;
    CHECK_THROWS(synth_corpus(bad));
  }
}

// xslu: synthesize corpora, code-switch them, train the dual SLU model, and
// evaluate checkpoints. Exit codes: 0 success, 1 usage/config error, 2
// runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xslu/config.hpp"
#include "xslu/gradcheck_suite.hpp"
#include "xslu/pipeline.hpp"

namespace {

using namespace xslu;

namespace fs = std::filesystem;

int cmd_synth(const SynthSpec& spec, const std::string& out_dir) {
  const SynthCorpora corpora = synth_corpus(spec);
  fs::create_directories(out_dir);
  std::size_t files = 0;
  for (const auto& [split_name, split] :
       {std::pair<const char*, const std::map<std::string, std::vector<Example>>*>{
            "train", &corpora.train},
        {"dev", &corpora.dev},
        {"test", &corpora.test}}) {
    for (const auto& [lang, examples] : *split) {
      const std::string path = out_dir + "/" + lang + "." + split_name + ".txt";
      write_corpus(path, examples);
      std::printf("%s: %zu examples\n", path.c_str(), examples.size());
      ++files;
    }
  }
  const std::string dict_path = out_dir + "/dict.tsv";
  write_dictionary(dict_path, corpora.dictionary);
  std::printf("%s: %zu source words\n", dict_path.c_str(),
              corpora.dictionary.size());
  std::printf("wrote %zu corpus files for %zu language(s)\n", files,
              spec.languages.size());
  return 0;
}

int cmd_augment(const std::string& corpus_path, const std::string& dict_path,
                double ratio, const std::vector<std::string>& languages,
                std::uint64_t seed, const std::string& out_path) {
  const std::vector<Example> examples = load_corpus_examples(corpus_path);
  DictionaryLoadStats stats;
  const BilingualDictionary dict = load_dictionary(dict_path, &stats);
  if (stats.skipped_multiword > 0) {
    std::fprintf(stderr, "note: skipped %zu multi-word translation(s)\n",
                 stats.skipped_multiword);
  }

  CodeSwitchPolicy policy;
  policy.ratio = ratio;
  policy.target_languages = languages.empty() ? dict.languages() : languages;
  if (policy.target_languages.empty()) policy.target_languages = {"<none>"};
  policy.seed = seed;

  const std::vector<Example> switched =
      augment_corpus(examples, dict, policy, /*epoch=*/0);
  write_corpus(out_path, switched);

  std::size_t words = 0, replaced = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (std::size_t w = 0; w < examples[i].words.size(); ++w) {
      ++words;
      if (examples[i].words[w] != switched[i].words[w]) ++replaced;
    }
  }
  std::printf("%s: %zu examples, %zu/%zu words replaced (%.3f)\n",
              out_path.c_str(), switched.size(), replaced, words,
              words > 0 ? static_cast<double>(replaced) / words : 0.0);
  return 0;
}

void print_report(const std::string& title, const MetricsReport& report) {
  std::printf("%s: intent_acc=%.4f slot_f1=%.4f overall_acc=%.4f (n=%zu)\n",
              title.c_str(), report.intent_accuracy, report.slot_f1,
              report.overall_accuracy, report.n_examples);
  for (const auto& [lang, e] : report.per_language) {
    std::printf("  [%s] intent_acc=%.4f slot_f1=%.4f overall_acc=%.4f (n=%zu)\n",
                lang.c_str(), e.intent_accuracy, e.slot_f1, e.overall_accuracy,
                e.n_examples);
  }
}

nlohmann::ordered_json report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["intent_acc"] = report.intent_accuracy;
  j["slot_f1"] = report.slot_f1;
  j["overall_acc"] = report.overall_accuracy;
  j["n_examples"] = report.n_examples;
  for (const auto& [lang, e] : report.per_language) {
    nlohmann::ordered_json je;
    je["intent_acc"] = e.intent_accuracy;
    je["slot_f1"] = e.slot_f1;
    je["overall_acc"] = e.overall_accuracy;
    je["n_examples"] = e.n_examples;
    j["per_language"][lang] = je;
  }
  return j;
}

int cmd_train(const std::string& config_path) {
  const RunConfig cfg = load_run_config(config_path);
  const std::vector<Example> train_set = load_corpus_examples(cfg.train_path);
  const std::vector<Example> dev_set = load_corpus_examples(cfg.dev_path);
  const BilingualDictionary dict = load_dictionary(cfg.dictionary_path);

  const TrainResult result = train(cfg.train, train_set, dev_set, dict);

  fs::create_directories(cfg.out_dir);
  write_metrics_log(cfg.out_dir + "/metrics.jsonl", result.log);
  save_checkpoint(cfg.out_dir + "/best.ckpt", result.best);
  save_checkpoint(cfg.out_dir + "/final.ckpt", result.final);

  std::printf("best step %zu, dev overall accuracy %.4f\n", result.best_step,
              result.best_dev_overall);
  std::printf("wrote %s/metrics.jsonl, %s/best.ckpt, %s/final.ckpt\n",
              cfg.out_dir.c_str(), cfg.out_dir.c_str(), cfg.out_dir.c_str());

  if (!cfg.test_by_language.empty()) {
    std::map<std::string, std::vector<Example>> by_lang;
    for (const auto& [lang, path] : cfg.test_by_language) {
      by_lang[lang] = load_corpus_examples(path);
    }
    const SluModel& deployed = deployed_model(result.best, cfg.train.deploy);
    const MetricsReport report = zero_shot_eval(
        deployed, result.best.labels, result.best.subwords, by_lang);
    print_report("zero-shot (macro average)", report);
    std::cout << report_json(report).dump() << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& ckpt_path,
             const std::vector<std::string>& corpus_paths,
             const std::string& language_filter, const std::string& deploy) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Deploy which = deploy == "model_o" ? Deploy::ModelO : Deploy::ModelC;
  const SluModel& model = deployed_model(ckpt, which);

  std::vector<Example> corpus;
  for (const auto& path : corpus_paths) {
    const auto examples = load_corpus_examples(path);
    corpus.insert(corpus.end(), examples.begin(), examples.end());
  }
  if (!language_filter.empty()) {
    std::vector<Example> filtered;
    for (const auto& ex : corpus) {
      if (ex.language == language_filter) filtered.push_back(ex);
    }
    corpus = std::move(filtered);
  }
  if (corpus.empty()) {
    throw std::runtime_error("eval: no examples after filtering");
  }
  const MetricsReport report = evaluate(model, ckpt.labels, ckpt.subwords, corpus);
  print_report("eval", report);
  std::cout << report_json(report).dump() << "\n";
  return 0;
}

int cmd_gradcheck(std::size_t seeds, const std::string& scale) {
  GradcheckSuiteOptions options;
  options.n_seeds = seeds;
  options.scale = scale;
  const auto checks = run_gradcheck_suite(options);
  std::size_t failed = 0;
  for (const auto& c : checks) {
    if (!c.report.pass) ++failed;
    std::printf("%-24s seed=%llu %s max_rel_err=%.3e (%zu coords)\n",
                c.name.c_str(), static_cast<unsigned long long>(c.seed),
                c.report.pass ? "PASS" : "FAIL", c.report.max_rel_err,
                c.report.coords_checked);
    for (const auto& f : c.report.failures) {
      std::printf("    input %zu coord %zu: analytic=%.6e numeric=%.6e rel=%.3e\n",
                  f.input, f.coord, f.analytic, f.numeric, f.rel_err);
    }
  }
  std::printf("%zu checks, %zu failed\n", checks.size(), failed);
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-lingual SLU trainer with dual-model distillation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic multilingual corpus");
  std::string languages_csv = "en,de,fr";
  SynthSpec spec;
  std::string synth_out = "data";
  synth->add_option("--languages", languages_csv, "comma-separated language codes");
  synth->add_option("--intents", spec.n_intents, "number of intent labels");
  synth->add_option("--slot-labels", spec.n_slot_labels, "number of slot label types");
  synth->add_option("--train", spec.n_train, "training sentences per language");
  synth->add_option("--dev", spec.n_dev, "dev sentences per language");
  synth->add_option("--test", spec.n_test, "test sentences per language");
  synth->add_option("--seed", spec.seed, "generator seed");
  synth->add_option("--out", synth_out, "output directory");

  // augment
  auto* augment = app.add_subcommand("augment", "write a code-switched corpus");
  std::string aug_corpus, aug_dict, aug_out = "switched.txt";
  double aug_ratio = 0.5;
  std::string aug_langs;
  std::uint64_t aug_seed = 1;
  augment->add_option("--corpus", aug_corpus, "input corpus")->required();
  augment->add_option("--dict", aug_dict, "bilingual dictionary (TSV)")->required();
  augment->add_option("--ratio", aug_ratio, "per-word replacement probability");
  augment->add_option("--languages", aug_langs, "target languages (default: all in dict)");
  augment->add_option("--seed", aug_seed, "RNG seed");
  augment->add_option("--out", aug_out, "output corpus path");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the dual model from a config file");
  std::string train_config;
  train_cmd->add_option("--config", train_config, "run config file")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on corpora");
  std::string eval_ckpt, eval_lang, eval_deploy = "model_c";
  std::vector<std::string> eval_corpora;
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--corpus", eval_corpora, "corpus file (repeatable)")->required();
  eval_cmd->add_option("--language", eval_lang, "only evaluate this language");
  eval_cmd->add_option("--deploy", eval_deploy, "model_o or model_c")
      ->check(CLI::IsMember({"model_o", "model_c"}));

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference checks for ops and losses");
  std::size_t gc_seeds = 5;
  std::string gc_scale = "small";
  gradcheck->add_option("--seeds", gc_seeds, "number of random seeds");
  gradcheck->add_option("--scale", gc_scale, "small or medium")
      ->check(CLI::IsMember({"small", "medium"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (*synth) {
      spec.languages = split_csv(languages_csv);
      if (spec.languages.empty()) {
        std::cerr << "synth: --languages must list at least one code\n";
        return 1;
      }
      return cmd_synth(spec, synth_out);
    }
    if (*augment) {
      return cmd_augment(aug_corpus, aug_dict, aug_ratio, split_csv(aug_langs),
                         aug_seed, aug_out);
    }
    if (*train_cmd) return cmd_train(train_config);
    if (*eval_cmd) return cmd_eval(eval_ckpt, eval_corpora, eval_lang, eval_deploy);
    if (*gradcheck) return cmd_gradcheck(gc_seeds, gc_scale);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    const std::string what = e.what();
    // config validation problems are usage errors, not runtime failures
    if (what.rfind("config ", 0) == 0 ||
        what.find("missing required key") != std::string::npos) {
      return 1;
    }
    return 2;
  }
  return 0;
}

#pragma once

#include <map>
#include <string>

#include "xslu/pipeline.hpp"

namespace xslu {

// `key = value` lines with '#' comments; mirrors TrainConfig plus the data
// paths. Unknown keys are an error (they are usually typos in ablation
// flags), and every offending key is reported at once.
struct RunConfig {
  TrainConfig train;
  std::string train_path;
  std::string dev_path;
  std::string dictionary_path;
  std::string out_dir;
  std::map<std::string, std::string> test_by_language;  // keys `test.<lang>`
};

RunConfig load_run_config(const std::string& path);

// comma-separated list, empty string -> empty vector
std::vector<std::string> split_csv(const std::string& s);

}  // namespace xslu

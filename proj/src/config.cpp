#include "xslu/config.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace xslu {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value, const std::string& key,
                std::vector<std::string>& errors) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  errors.push_back(key + ": expected true/false, got '" + value + "'");
  return false;
}

double parse_double(const std::string& value, const std::string& key,
                    std::vector<std::string>& errors) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  errors.push_back(key + ": expected a number, got '" + value + "'");
  return 0.0;
}

std::size_t parse_size(const std::string& value, const std::string& key,
                       std::vector<std::string>& errors) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size() && v >= 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  errors.push_back(key + ": expected a non-negative integer, got '" + value + "'");
  return 0;
}

}  // namespace

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string item =
        trim(comma == std::string::npos ? s.substr(start)
                                        : s.substr(start, comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);

  RunConfig cfg;
  std::vector<std::string> errors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) +
                       ": expected key = value");
      continue;
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "train") cfg.train_path = value;
    else if (key == "dev") cfg.dev_path = value;
    else if (key == "dictionary") cfg.dictionary_path = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key.rfind("test.", 0) == 0 && key.size() > 5) {
      cfg.test_by_language[key.substr(5)] = value;
    }
    else if (key == "seed") cfg.train.seed = parse_size(value, key, errors);
    else if (key == "ratio") cfg.train.ratio = parse_double(value, key, errors);
    else if (key == "target_languages") cfg.train.target_languages = split_csv(value);
    else if (key == "alpha") cfg.train.weights.alpha = parse_double(value, key, errors);
    else if (key == "beta") cfg.train.weights.beta = parse_double(value, key, errors);
    else if (key == "lambda") cfg.train.weights.lambda = parse_double(value, key, errors);
    else if (key == "gamma") cfg.train.weights.gamma = parse_double(value, key, errors);
    else if (key == "d_model") cfg.train.encoder.d_model = parse_size(value, key, errors);
    else if (key == "n_heads") cfg.train.encoder.n_heads = parse_size(value, key, errors);
    else if (key == "n_blocks") cfg.train.encoder.n_blocks = parse_size(value, key, errors);
    else if (key == "ffn_dim") cfg.train.encoder.ffn_dim = parse_size(value, key, errors);
    else if (key == "max_seq_len") cfg.train.encoder.max_seq_len = parse_size(value, key, errors);
    else if (key == "max_pieces") cfg.train.max_pieces = parse_size(value, key, errors);
    else if (key == "base_lr") cfg.train.base_lr = parse_double(value, key, errors);
    else if (key == "warmup_steps") cfg.train.warmup_steps = parse_size(value, key, errors);
    else if (key == "batch_size") cfg.train.batch_size = parse_size(value, key, errors);
    else if (key == "max_steps") cfg.train.max_steps = parse_size(value, key, errors);
    else if (key == "eval_every") cfg.train.eval_every = parse_size(value, key, errors);
    else if (key == "disable_intra") cfg.train.disable_intra = parse_bool(value, key, errors);
    else if (key == "disable_inter") cfg.train.disable_inter = parse_bool(value, key, errors);
    else if (key == "shared_init") cfg.train.shared_init = parse_bool(value, key, errors);
    else if (key == "deploy") {
      if (value == "model_o") cfg.train.deploy = Deploy::ModelO;
      else if (value == "model_c") cfg.train.deploy = Deploy::ModelC;
      else errors.push_back("deploy: expected model_o or model_c, got '" + value + "'");
    }
    else errors.push_back("unknown key '" + key + "'");
  }

  for (const auto& [name, p] :
       std::vector<std::pair<std::string, std::string>>{
           {"train", cfg.train_path},
           {"dev", cfg.dev_path},
           {"dictionary", cfg.dictionary_path}}) {
    if (p.empty()) {
      errors.push_back("missing required key '" + name + "'");
    } else if (!std::filesystem::exists(p)) {
      errors.push_back(name + ": path does not exist: " + p);
    }
  }
  for (const auto& [lang, p] : cfg.test_by_language) {
    if (!std::filesystem::exists(p)) {
      errors.push_back("test." + lang + ": path does not exist: " + p);
    }
  }
  if (cfg.out_dir.empty()) errors.push_back("missing required key 'out_dir'");

  if (!errors.empty()) {
    std::string msg = "config " + path + " has " +
                      std::to_string(errors.size()) + " error(s):";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw std::runtime_error(msg);
  }
  return cfg;
}

}  // namespace xslu

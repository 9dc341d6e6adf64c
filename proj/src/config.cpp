#include "hsigan/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hsigan/errors.hpp"

namespace hsigan {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key \"" + key + "\" expects a number, got \"" + v + "\"");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key \"" + key + "\" expects an integer, got \"" + v + "\"");
  }
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

PipelineConfig PipelineConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

PipelineConfig PipelineConfig::parse_text(const std::string& text, const std::string& origin) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + origin + ":" + std::to_string(line_no) +
                        ": expected key = value, got \"" + line + "\"");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "data.cube") {
      cfg.data_cube = value;
    } else if (key == "data.labels") {
      cfg.data_labels = value;
    } else if (key == "normalize") {
      cfg.normalize_mode = value;
    } else if (key == "synth.height") {
      cfg.synth.height = static_cast<int>(to_int(key, value));
    } else if (key == "synth.width") {
      cfg.synth.width = static_cast<int>(to_int(key, value));
    } else if (key == "synth.bands") {
      cfg.synth.bands = static_cast<int>(to_int(key, value));
    } else if (key == "synth.classes") {
      cfg.synth.classes = static_cast<int>(to_int(key, value));
    } else if (key == "synth.noise_sigma") {
      cfg.synth.noise_sigma = to_double(key, value);
    } else if (key == "split.n_per_class") {
      cfg.n_per_class = static_cast<int>(to_int(key, value));
    } else if (key == "variant") {
      cfg.train.variant = variant_from_string(value);
    } else if (key == "patch_size") {
      cfg.train.patch_size = static_cast<int>(to_int(key, value));
    } else if (key == "noise_dim") {
      cfg.train.noise_dim = static_cast<int>(to_int(key, value));
    } else if (key == "train.epochs") {
      cfg.train.epochs = static_cast<int>(to_int(key, value));
    } else if (key == "train.batch_size") {
      cfg.train.batch_size = static_cast<int>(to_int(key, value));
    } else if (key == "train.labeled_fraction") {
      cfg.train.labeled_fraction = to_double(key, value);
    } else if (key == "train.lr") {
      cfg.train.adam.lr = to_double(key, value);
    } else if (key == "train.beta1") {
      cfg.train.adam.beta1 = to_double(key, value);
    } else if (key == "train.beta2") {
      cfg.train.adam.beta2 = to_double(key, value);
    } else if (key == "train.eps") {
      cfg.train.adam.eps = to_double(key, value);
    } else if (key == "train.lrelu_slope") {
      cfg.train.lrelu_slope = to_double(key, value);
    } else if (key == "train.generator_objective") {
      if (value == "feature_matching") {
        cfg.train.gen_objective = TrainConfig::GenObjective::FeatureMatching;
      } else if (value == "nonsaturating") {
        cfg.train.gen_objective = TrainConfig::GenObjective::NonSaturating;
      } else {
        throw ConfigError("config: train.generator_objective must be feature_matching or "
                          "nonsaturating, got \"" + value + "\"");
      }
    } else if (key == "crf.w1") {
      cfg.crf.w1 = to_double(key, value);
    } else if (key == "crf.w2") {
      cfg.crf.w2 = to_double(key, value);
    } else if (key == "crf.theta_alpha") {
      cfg.crf.theta_alpha = to_double(key, value);
    } else if (key == "crf.theta_beta") {
      cfg.crf.theta_beta = to_double(key, value);
    } else if (key == "crf.theta_gamma") {
      cfg.crf.theta_gamma = to_double(key, value);
    } else if (key == "crf.iterations") {
      cfg.crf.iterations = static_cast<int>(to_int(key, value));
    } else if (key == "crf.floor") {
      cfg.crf.unary_floor = to_double(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "out") {
      cfg.out_dir = value;
    } else {
      throw ConfigError("config: " + origin + ":" + std::to_string(line_no) + ": unknown key \"" +
                        key + "\"");
    }
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

void PipelineConfig::validate() const {
  if (normalize_mode != "minmax" && normalize_mode != "zscore")
    throw ConfigError("config: normalize must be minmax or zscore");
  if (data_cube.empty() != data_labels.empty())
    throw ConfigError("config: data.cube and data.labels must be set together");
  if (n_per_class < 1) throw ConfigError("config: split.n_per_class must be >= 1");
  if (train.epochs < 0) throw ConfigError("config: train.epochs must be >= 0");
  if (train.batch_size < 2) throw ConfigError("config: train.batch_size must be >= 2");
  if (train.labeled_fraction <= 0.0 || train.labeled_fraction >= 1.0)
    throw ConfigError("config: train.labeled_fraction must be in (0,1)");
  if (train.adam.lr <= 0.0 || train.adam.beta1 <= 0.0 || train.adam.beta2 <= 0.0 ||
      train.adam.eps <= 0.0)
    throw ConfigError("config: optimizer rates must be > 0");
  if (train.patch_size < 1 || train.patch_size % 2 == 0)
    throw ConfigError("config: patch_size must be odd and positive");
  if (train.noise_dim < 1) throw ConfigError("config: noise_dim must be >= 1");
  if (train.lrelu_slope <= 0.0 || train.lrelu_slope >= 1.0)
    throw ConfigError("config: train.lrelu_slope must be in (0,1)");
  if (data_cube.empty()) {
    if (synth.height < 1 || synth.width < 1 || synth.bands < 2 || synth.classes < 2)
      throw ConfigError("config: synth scene needs H,W >= 1, B >= 2, K >= 2");
  }
  crf.validate(synth.classes);
}

std::string PipelineConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["data.cube"] = data_cube;
  kv["data.labels"] = data_labels;
  kv["normalize"] = normalize_mode;
  kv["synth.height"] = std::to_string(synth.height);
  kv["synth.width"] = std::to_string(synth.width);
  kv["synth.bands"] = std::to_string(synth.bands);
  kv["synth.classes"] = std::to_string(synth.classes);
  kv["synth.noise_sigma"] = fmt_double(synth.noise_sigma);
  kv["split.n_per_class"] = std::to_string(n_per_class);
  kv["variant"] = variant_to_string(train.variant);
  kv["patch_size"] = std::to_string(train.patch_size);
  kv["noise_dim"] = std::to_string(train.noise_dim);
  kv["train.epochs"] = std::to_string(train.epochs);
  kv["train.batch_size"] = std::to_string(train.batch_size);
  kv["train.labeled_fraction"] = fmt_double(train.labeled_fraction);
  kv["train.lr"] = fmt_double(train.adam.lr);
  kv["train.beta1"] = fmt_double(train.adam.beta1);
  kv["train.beta2"] = fmt_double(train.adam.beta2);
  kv["train.eps"] = fmt_double(train.adam.eps);
  kv["train.lrelu_slope"] = fmt_double(train.lrelu_slope);
  kv["train.generator_objective"] =
      train.gen_objective == TrainConfig::GenObjective::FeatureMatching ? "feature_matching"
                                                                        : "nonsaturating";
  kv["crf.w1"] = fmt_double(crf.w1);
  kv["crf.w2"] = fmt_double(crf.w2);
  kv["crf.theta_alpha"] = fmt_double(crf.theta_alpha);
  kv["crf.theta_beta"] = fmt_double(crf.theta_beta);
  kv["crf.theta_gamma"] = fmt_double(crf.theta_gamma);
  kv["crf.iterations"] = std::to_string(crf.iterations);
  kv["crf.floor"] = fmt_double(crf.unary_floor);
  kv["seed"] = std::to_string(seed);
  kv["out"] = out_dir;

  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

std::string PipelineConfig::hash() const {
  const std::string text = canonical();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

NormalizeMode PipelineConfig::normalize_enum() const {
  return normalize_mode == "zscore" ? NormalizeMode::PerBandZScore : NormalizeMode::PerBandMinMax;
}

}  // namespace hsigan

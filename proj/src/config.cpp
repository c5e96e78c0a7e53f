#include "proxyhash/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "proxyhash/binary_io.hpp"

namespace proxyhash {

void ExperimentConfig::validate() const {
  if (bits < 1) throw std::invalid_argument("bits must be >= 1");
  train.validate();
  synth.validate();
  if (kinds.empty()) throw std::invalid_argument("no proxy kinds selected");
  if (tammes_restarts < 1 || itq_restarts < 1 || greedy_restarts < 1) {
    throw std::invalid_argument("restart counts must be >= 1");
  }
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (transfer_lambda < 0.0) throw std::invalid_argument("transfer_lambda must be >= 0");
  for (std::size_t i = 0; i < precision_ks.size(); ++i) {
    if (precision_ks[i] == 0 || (i > 0 && precision_ks[i] <= precision_ks[i - 1])) {
      throw std::invalid_argument("precision_ks must be positive and strictly ascending");
    }
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("config: bad value for " + key + ": '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter number(T ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}
template <typename T>
Setter train_number(T TrainConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.train.*field = parse_number<T>(k, v);
  };
}
template <typename T>
Setter synth_number(T SynthConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.synth.*field = parse_number<T>(k, v);
  };
}
template <typename T>
Setter classifier_number(T ClassifierConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.classifier.*field = parse_number<T>(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"bits", number(&ExperimentConfig::bits)},
      {"top_n", number(&ExperimentConfig::top_n)},
      {"tammes_restarts", number(&ExperimentConfig::tammes_restarts)},
      {"itq_restarts", number(&ExperimentConfig::itq_restarts)},
      {"greedy_restarts", number(&ExperimentConfig::greedy_restarts)},
      {"folds", number(&ExperimentConfig::folds)},
      {"transfer_lambda", number(&ExperimentConfig::transfer_lambda)},
      {"seed", number(&ExperimentConfig::seed)},
      {"epochs", train_number(&TrainConfig::epochs)},
      {"batch_size", train_number(&TrainConfig::batch_size)},
      {"learning_rate", train_number(&TrainConfig::learning_rate)},
      {"momentum", train_number(&TrainConfig::momentum)},
      {"lambda", train_number(&TrainConfig::lambda)},
      {"margin", train_number(&TrainConfig::triplet_margin)},
      {"logit_scale", train_number(&TrainConfig::logit_scale)},
      {"decay_fraction", train_number(&TrainConfig::decay_fraction)},
      {"decay_factor", train_number(&TrainConfig::decay_factor)},
      {"superclasses", synth_number(&SynthConfig::superclasses)},
      {"classes_per_superclass", synth_number(&SynthConfig::classes_per_superclass)},
      {"samples_per_class", synth_number(&SynthConfig::samples_per_class)},
      {"queries_per_class", synth_number(&SynthConfig::queries_per_class)},
      {"dim", synth_number(&SynthConfig::dim)},
      {"noise", synth_number(&SynthConfig::noise)},
      {"separation", synth_number(&SynthConfig::separation)},
      {"class_spread", synth_number(&SynthConfig::class_spread)},
      {"extra_tag_probability", synth_number(&SynthConfig::extra_tag_probability)},
      {"multi_label", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synth.multi_label = parse_bool(k, v);
       }},
      {"classifier_iterations", classifier_number(&ClassifierConfig::iterations)},
      {"classifier_learning_rate", classifier_number(&ClassifierConfig::learning_rate)},
      {"classifier_l2", classifier_number(&ClassifierConfig::l2)},
      {"equalize_proxy_norms", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.equalize_proxy_norms = parse_bool(k, v);
       }},
      {"kinds", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.kinds.clear();
         for (const auto& name : split_list(v)) c.kinds.push_back(parse_proxy_kind(name));
       }},
      {"precision_ks", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.precision_ks.clear();
         for (const auto& item : split_list(v)) c.precision_ks.push_back(parse_number<std::size_t>(k, item));
       }},
  };
  return table;
}

}  // namespace

ConfigValues parse_config_text(const std::string& text) {
  ConfigValues out;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigValues load_config_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_config_text(std::string(bytes.begin(), bytes.end()));
}

void apply_config(const ConfigValues& values, ExperimentConfig& cfg) {
  const auto& table = setters();
  for (const auto& [key, value] : values) {
    const auto it = table.find(key);
    if (it == table.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  // The run seed also drives training and data generation unless they were
  // set separately.
  if (values.count("seed") != 0) {
    cfg.train.seed = cfg.seed;
    cfg.synth.seed = cfg.seed;
  }
}

ConfigValues describe(const ExperimentConfig& cfg) {
  ConfigValues v;
  v["bits"] = std::to_string(cfg.bits);
  v["top_n"] = std::to_string(cfg.top_n);
  v["tammes_restarts"] = std::to_string(cfg.tammes_restarts);
  v["itq_restarts"] = std::to_string(cfg.itq_restarts);
  v["greedy_restarts"] = std::to_string(cfg.greedy_restarts);
  v["folds"] = std::to_string(cfg.folds);
  v["transfer_lambda"] = format_double(cfg.transfer_lambda);
  v["seed"] = std::to_string(cfg.seed);
  v["epochs"] = std::to_string(cfg.train.epochs);
  v["batch_size"] = std::to_string(cfg.train.batch_size);
  v["learning_rate"] = format_double(cfg.train.learning_rate);
  v["momentum"] = format_double(cfg.train.momentum);
  v["lambda"] = format_double(cfg.train.lambda);
  v["margin"] = format_double(cfg.train.triplet_margin);
  v["logit_scale"] = format_double(cfg.train.logit_scale);
  v["decay_fraction"] = format_double(cfg.train.decay_fraction);
  v["decay_factor"] = format_double(cfg.train.decay_factor);
  v["superclasses"] = std::to_string(cfg.synth.superclasses);
  v["classes_per_superclass"] = std::to_string(cfg.synth.classes_per_superclass);
  v["samples_per_class"] = std::to_string(cfg.synth.samples_per_class);
  v["queries_per_class"] = std::to_string(cfg.synth.queries_per_class);
  v["dim"] = std::to_string(cfg.synth.dim);
  v["noise"] = format_double(cfg.synth.noise);
  v["separation"] = format_double(cfg.synth.separation);
  v["class_spread"] = format_double(cfg.synth.class_spread);
  v["extra_tag_probability"] = format_double(cfg.synth.extra_tag_probability);
  v["multi_label"] = cfg.synth.multi_label ? "true" : "false";
  v["equalize_proxy_norms"] = cfg.equalize_proxy_norms ? "true" : "false";
  v["classifier_iterations"] = std::to_string(cfg.classifier.iterations);
  v["classifier_learning_rate"] = format_double(cfg.classifier.learning_rate);
  v["classifier_l2"] = format_double(cfg.classifier.l2);
  std::string kinds;
  for (const auto k : cfg.kinds) kinds += (kinds.empty() ? "" : ",") + std::string(to_string(k));
  v["kinds"] = kinds;
  std::string ks;
  for (const auto k : cfg.precision_ks) ks += (ks.empty() ? "" : ",") + std::to_string(k);
  v["precision_ks"] = ks;
  return v;
}

}  // namespace proxyhash

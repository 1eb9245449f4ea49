#include "dcrec/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace dcrec {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": '" + value + "' is not a finite number");
  }
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": '" + value + "' is not a non-negative integer");
  }
  return out;
}

Index parse_index(const std::string& key, const std::string& value) {
  const auto v = parse_count(key, value);
  if (v > static_cast<std::uint64_t>(std::numeric_limits<Index>::max())) {
    throw ConfigError(key + ": value too large");
  }
  return static_cast<Index>(v);
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
  if (value == "off" || value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected on/off, got '" + value + "'");
}

std::string format_real(double v) {
  // Shortest text that parses back to the same double.
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

AugmentationSpec parse_view(const std::string& key, const std::string& value, GraphDomain domain) {
  const AugmentationSpec spec = AugmentationSpec::parse(value);
  try {
    spec.validate(domain);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
  return spec;
}

}  // namespace

void TrainConfig::validate() const {
  if (model.dim < 1) throw ConfigError("model.dim must be >= 1");
  if (model.item_layers < 0) throw ConfigError("model.item_layers must be >= 0");
  if (model.social_layers < 1) throw ConfigError("model.social_layers must be >= 1");
  if (model.projector && model.projector_depth < 1) throw ConfigError("model.projector_depth must be >= 1");
  if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw ConfigError("train.lr must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie strictly between 0 and 1");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("train.adam_eps must be positive");
  if (!(temperature > 0.0)) throw ConfigError("loss.tau must be positive");
  if (eval_k < 1) throw ConfigError("eval.k must be >= 1");
  weights.validate();
  item_view1.validate(GraphDomain::Collaborative);
  item_view2.validate(GraphDomain::Collaborative);
  social_view1.validate(GraphDomain::Social);
  social_view2.validate(GraphDomain::Social);
}

void apply_setting(TrainConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "model.dim") c.model.dim = parse_index(key, value);
  else if (key == "model.item_layers") c.model.item_layers = parse_index(key, value);
  else if (key == "model.social_layers") c.model.social_layers = parse_index(key, value);
  else if (key == "model.projector_depth") c.model.projector_depth = parse_index(key, value);
  else if (key == "model.projector") c.model.projector = parse_flag(key, value);
  else if (key == "loss.tau") c.temperature = parse_real(key, value);
  else if (key == "loss.lambda1") c.weights.lambda1 = parse_real(key, value);
  else if (key == "loss.lambda2") c.weights.lambda2 = parse_real(key, value);
  else if (key == "loss.lambda3") c.weights.lambda3 = parse_real(key, value);
  else if (key == "loss.negatives_scope") {
    if (value == "batch") c.negatives_scope = NegativeScope::Batch;
    else if (value == "full") c.negatives_scope = NegativeScope::Full;
    else throw ConfigError(key + ": expected batch or full");
  } else if (key == "loss.bpr_reduction") {
    if (value == "mean") c.bpr_reduction = BprReduction::Mean;
    else if (value == "sum") c.bpr_reduction = BprReduction::Sum;
    else throw ConfigError(key + ": expected mean or sum");
  } else if (key == "aug.item.view1") c.item_view1 = parse_view(key, value, GraphDomain::Collaborative);
  else if (key == "aug.item.view2") c.item_view2 = parse_view(key, value, GraphDomain::Collaborative);
  else if (key == "aug.social.view1") c.social_view1 = parse_view(key, value, GraphDomain::Social);
  else if (key == "aug.social.view2") c.social_view2 = parse_view(key, value, GraphDomain::Social);
  else if (key == "aug.per_batch") c.views_per_batch = parse_flag(key, value);
  else if (key == "train.epochs") c.epochs = parse_count(key, value);
  else if (key == "train.batch_size") c.batch_size = parse_count(key, value);
  else if (key == "train.lr") c.learning_rate = parse_real(key, value);
  else if (key == "train.beta1") c.beta1 = parse_real(key, value);
  else if (key == "train.beta2") c.beta2 = parse_real(key, value);
  else if (key == "train.adam_eps") c.adam_epsilon = parse_real(key, value);
  else if (key == "train.patience") c.patience = parse_count(key, value);
  else if (key == "train.seed") c.seed = parse_count(key, value);
  else if (key == "eval.k") c.eval_k = parse_index(key, value);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

std::map<std::string, std::string> to_settings(const TrainConfig& c) {
  std::map<std::string, std::string> s;
  s["model.dim"] = std::to_string(c.model.dim);
  s["model.item_layers"] = std::to_string(c.model.item_layers);
  s["model.social_layers"] = std::to_string(c.model.social_layers);
  s["model.projector_depth"] = std::to_string(c.model.projector_depth);
  s["model.projector"] = c.model.projector ? "on" : "off";
  s["loss.tau"] = format_real(c.temperature);
  s["loss.lambda1"] = format_real(c.weights.lambda1);
  s["loss.lambda2"] = format_real(c.weights.lambda2);
  s["loss.lambda3"] = format_real(c.weights.lambda3);
  s["loss.negatives_scope"] = c.negatives_scope == NegativeScope::Batch ? "batch" : "full";
  s["loss.bpr_reduction"] = c.bpr_reduction == BprReduction::Mean ? "mean" : "sum";
  s["aug.item.view1"] = c.item_view1.to_string();
  s["aug.item.view2"] = c.item_view2.to_string();
  s["aug.social.view1"] = c.social_view1.to_string();
  s["aug.social.view2"] = c.social_view2.to_string();
  s["aug.per_batch"] = c.views_per_batch ? "on" : "off";
  s["train.epochs"] = std::to_string(c.epochs);
  s["train.batch_size"] = std::to_string(c.batch_size);
  s["train.lr"] = format_real(c.learning_rate);
  s["train.beta1"] = format_real(c.beta1);
  s["train.beta2"] = format_real(c.beta2);
  s["train.adam_eps"] = format_real(c.adam_epsilon);
  s["train.patience"] = std::to_string(c.patience);
  s["train.seed"] = std::to_string(c.seed);
  s["eval.k"] = std::to_string(c.eval_k);
  return s;
}

std::map<std::string, std::string> read_settings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

TrainConfig config_from_settings(const std::map<std::string, std::string>& settings) {
  TrainConfig c;
  for (const auto& [k, v] : settings) apply_setting(c, k, v);
  return c;
}

void write_config(const std::filesystem::path& path, const TrainConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : to_settings(config)) out << k << " = " << v << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finalizer applied to a running mix.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(root);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

}  // namespace dcrec

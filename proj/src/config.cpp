#include "graphst/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "graphst/csv.hpp"
#include "graphst/errors.hpp"

namespace graphst {

namespace {

struct Field {
  std::function<void(Hyperparameters&, const std::string&)> set;
  std::function<std::string(const Hyperparameters&)> get;
};

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected number, got '" + value + "'");
  }
}

long to_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected integer, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key " + key + ": expected true/false, got '" + value + "'");
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    auto dbl = [&](const std::string& name, double Hyperparameters::* member) {
      f[name] = {[name, member](Hyperparameters& hp, const std::string& v) {
                   hp.*member = to_double(name, v);
                 },
                 [member](const Hyperparameters& hp) { return format_double(hp.*member); }};
    };
    auto integer = [&](const std::string& name, int Hyperparameters::* member) {
      f[name] = {[name, member](Hyperparameters& hp, const std::string& v) {
                   hp.*member = static_cast<int>(to_long(name, v));
                 },
                 [member](const Hyperparameters& hp) { return std::to_string(hp.*member); }};
    };
    f["seed"] = {[](Hyperparameters& hp, const std::string& v) {
                   hp.seed = static_cast<std::uint64_t>(to_long("seed", v));
                 },
                 [](const Hyperparameters& hp) { return std::to_string(hp.seed); }};
    integer("embed_dim", &Hyperparameters::embed_dim);
    integer("encoder_depth", &Hyperparameters::encoder_depth);
    dbl("temperature", &Hyperparameters::temperature);
    dbl("learning_rate", &Hyperparameters::learning_rate);
    dbl("weight_decay", &Hyperparameters::weight_decay);
    integer("epochs", &Hyperparameters::epochs);
    dbl("reward_floor", &Hyperparameters::reward_floor);
    dbl("reward_threshold", &Hyperparameters::reward_threshold);
    dbl("ir_weight", &Hyperparameters::ir_weight);
    f["ir_literal"] = {[](Hyperparameters& hp, const std::string& v) {
                         hp.ir_literal = to_bool("ir_literal", v);
                       },
                       [](const Hyperparameters& hp) {
                         return std::string(hp.ir_literal ? "true" : "false");
                       }};
    dbl("edge_flip_budget", &Hyperparameters::edge_flip_budget);
    dbl("feat_linf_bound", &Hyperparameters::feat_linf_bound);
    dbl("edge_step", &Hyperparameters::edge_step);
    dbl("feat_step", &Hyperparameters::feat_step);
    integer("pgd_steps", &Hyperparameters::pgd_steps);
    dbl("poi_threshold", &Hyperparameters::poi_threshold);
    dbl("spatial_radius", &Hyperparameters::spatial_radius);
    dbl("w_vgae", &Hyperparameters::w_vgae);
    dbl("w_cross", &Hyperparameters::w_cross);
    dbl("w_adv", &Hyperparameters::w_adv);
    integer("skipgram_epochs", &Hyperparameters::skipgram_epochs);
    integer("skipgram_negatives", &Hyperparameters::skipgram_negatives);
    dbl("skipgram_lr", &Hyperparameters::skipgram_lr);
    dbl("dropout_rate", &Hyperparameters::dropout_rate);
    return f;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void validate(const Hyperparameters& hp) {
  if (hp.embed_dim < 1) throw ConfigError("embed_dim must be positive");
  if (hp.encoder_depth < 0) throw ConfigError("encoder_depth must be non-negative");
  if (hp.temperature <= 0.0) throw ConfigError("temperature must be positive");
  if (hp.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (hp.weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (hp.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (hp.reward_floor <= 0.0 || hp.reward_floor >= 1.0)
    throw ConfigError("reward_floor must lie in (0, 1)");
  if (hp.ir_weight < 0.0) throw ConfigError("ir_weight must be non-negative");
  if (hp.feat_linf_bound < 0.0) throw ConfigError("feat_linf_bound must be non-negative");
  if (hp.pgd_steps < 0) throw ConfigError("pgd_steps must be non-negative");
  if (hp.poi_threshold <= -1.0 || hp.poi_threshold >= 1.0)
    throw ConfigError("poi_threshold must lie in (-1, 1)");
  if (hp.spatial_radius <= 0.0) throw ConfigError("spatial_radius must be positive");
  if (hp.dropout_rate < 0.0 || hp.dropout_rate >= 1.0)
    throw ConfigError("dropout_rate must lie in [0, 1)");
  if (hp.w_vgae < 0.0 || hp.w_cross < 0.0 || hp.w_adv < 0.0)
    throw ConfigError("loss multipliers must be non-negative");
}

void apply_override(Hyperparameters& hp, const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key: " + key);
  it->second.set(hp, value);
}

Hyperparameters load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  Hyperparameters hp;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + " line " + std::to_string(line_no) + ": expected `name = value`");
    apply_override(hp, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  validate(hp);
  return hp;
}

void write_config(const Hyperparameters& hp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write config " + path);
  for (const auto& [name, field] : fields()) out << name << " = " << field.get(hp) << "\n";
}

}  // namespace graphst

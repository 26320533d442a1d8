#pragma once

// Flat `key=value` run configuration with documented defaults.

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ndrl/errors.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/synthetic.hpp"
#include "ndrl/text_io.hpp"
#include "ndrl/trainer.hpp"

namespace ndrl {

struct ConfigKey {
  const char* key;
  const char* default_value;
  const char* help;
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"data.triples", "", "triple file (head<TAB>relation<TAB>tail)"},
      {"data.descriptions", "", "sentence-vector file; empty = no descriptions"},
      {"split.ratios", "7:1.5:1.5", "train:valid:test ratios"},
      {"split.seed", "42", "shuffle seed for the split"},
      {"model.dim", "100", "embedding and encoder head dimension"},
      {"model.heads", "2", "attention heads per layer"},
      {"model.layers", "2", "attention layers"},
      {"model.rho", "0.5", "entity share of a neighbor node, in (0,1)"},
      {"model.slope", "0.2", "LeakyReLU negative slope"},
      {"model.include_inverse", "true", "attend over outgoing edges as well as incoming"},
      {"train.lr", "0.004", "SGD learning rate"},
      {"train.batch", "512", "positives per batch (clipped to the training set)"},
      {"train.epochs", "100", "training epochs"},
      {"train.margin", "1.0", "margin of the ranking loss"},
      {"train.l2", "1e-5", "L2 weight on all trainable parameters"},
      {"train.seed", "42", "training seed"},
      {"train.negatives", "1", "negatives per positive"},
      {"train.gate_in_training", "false", "drop description terms for rich pairs during training too"},
      {"train.corrupt_relation", "false", "also corrupt relations when sampling negatives"},
      {"pretrain.epochs", "500", "translation pre-training epochs"},
      {"pretrain.lr", "0.01", "translation pre-training learning rate"},
      {"pretrain.margin", "1.0", "translation pre-training margin"},
      {"pretrain.embeddings", "", "existing embedding checkpoint; empty = pre-train"},
      {"richness.k", "0.5", "neighbor-degree weight k in [0,1]"},
      {"richness.threshold", "12", "richness threshold (inf = always joint)"},
      {"ablation.use_relation", "true", "false = relation-blind neighbors (NDRL-r)"},
      {"ablation.desc_mode", "attention", "attention | mean (mean = NDRL-a)"},
      {"ablation.richness_gate", "true", "false = always joint scoring (NDRL-s)"},
      {"gen.entities", "300", "synthetic graph entities"},
      {"gen.relations", "3", "synthetic graph relations"},
      {"gen.pattern", "mixed", "tree | mixed"},
      {"gen.max_children", "4", "include-tree fan-out bound"},
      {"gen.require", "0.5", "fraction of include edges mirrored by a require edge"},
      {"gen.relate", "0.6", "fraction of sibling pairs linked by relate"},
      {"gen.symmetric", "0.5", "fraction of relate links made symmetric"},
      {"gen.seed", "7", "synthetic graph seed"},
      {"gen.desc_coverage", "0.6", "fraction of entities given descriptions"},
      {"gen.desc_dim", "32", "synthetic sentence-vector dimension"},
      {"gen.desc_seed", "11", "synthetic description seed"},
      {"out.checkpoint", "model.ckpt", "checkpoint path"},
      {"out.report", "", "report path; empty = stdout only"},
      {"out.log", "", "training log path; empty = <checkpoint>.log"},
  };
  return keys;
}

class RunConfig {
public:
  RunConfig() {
    for (const auto& k : config_keys()) values_[k.key] = k.default_value;
  }

  static bool known(const std::string& key) {
    for (const auto& k : config_keys()) {
      if (key == k.key) return true;
    }
    return false;
  }

  void set(const std::string& key, const std::string& value) {
    if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  /// `key=value` lines; `#` comments and blank lines ignored.
  void read(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
      }
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  void read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    read(in);
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
  }

  double real(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    try {
      return parse_double(v);
    } catch (const ParseError&) {
      throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
  }

  std::uint64_t integer(const std::string& key) const {
    const std::string& v = str(key);
    try {
      return parse_uint(v);
    } catch (const ParseError&) {
      throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
  }

  bool boolean(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
  }

  SplitRatios ratios() const {
    const std::string& v = str("split.ratios");
    const auto parts = split_fields(v, ':');
    if (parts.size() != 3) throw ConfigError("split.ratios: expected train:valid:test");
    SplitRatios r;
    try {
      r.train = parse_double(parts[0]);
      r.valid = parse_double(parts[1]);
      r.test = parse_double(parts[2]);
    } catch (const ParseError&) {
      throw ConfigError("split.ratios: expected three numbers, got '" + v + "'");
    }
    if (r.train < 0 || r.valid < 0 || r.test < 0) throw ConfigError("split.ratios must be non-negative");
    return r;
  }

  TrainConfig train_config() const {
    TrainConfig c;
    c.model.dim = integer("model.dim");
    c.model.heads = integer("model.heads");
    c.model.layers = integer("model.layers");
    c.model.rho = real("model.rho");
    c.model.slope = real("model.slope");
    c.model.include_inverse = boolean("model.include_inverse");
    c.model.use_relation = boolean("ablation.use_relation");
    const std::string& mode = str("ablation.desc_mode");
    if (mode == "attention") c.model.desc_mode = DescMode::attention;
    else if (mode == "mean") c.model.desc_mode = DescMode::mean;
    else throw ConfigError("ablation.desc_mode: expected attention or mean, got '" + mode + "'");
    c.learning_rate = real("train.lr");
    c.batch_size = integer("train.batch");
    c.epochs = static_cast<int>(integer("train.epochs"));
    c.seed = integer("train.seed");
    c.loss.margin = real("train.margin");
    c.loss.l2 = real("train.l2");
    c.loss.negatives = integer("train.negatives");
    c.gate_in_training = boolean("train.gate_in_training");
    c.corrupt_relation = boolean("train.corrupt_relation");
    c.pretrain.epochs = static_cast<int>(integer("pretrain.epochs"));
    c.pretrain.learning_rate = real("pretrain.lr");
    c.pretrain.margin = real("pretrain.margin");
    c.pretrain.seed = c.seed;
    c.richness.k = real("richness.k");
    c.richness.threshold = real("richness.threshold");
    c.richness_gate = boolean("ablation.richness_gate");
    c.validate();
    return c;
  }

  /// Inverse of train_config() for the keys it reads.
  void set_train_config(const TrainConfig& c) {
    set("model.dim", std::to_string(c.model.dim));
    set("model.heads", std::to_string(c.model.heads));
    set("model.layers", std::to_string(c.model.layers));
    set("model.rho", format_double(c.model.rho));
    set("model.slope", format_double(c.model.slope));
    set("model.include_inverse", c.model.include_inverse ? "true" : "false");
    set("ablation.use_relation", c.model.use_relation ? "true" : "false");
    set("ablation.desc_mode", c.model.desc_mode == DescMode::attention ? "attention" : "mean");
    set("train.lr", format_double(c.learning_rate));
    set("train.batch", std::to_string(c.batch_size));
    set("train.epochs", std::to_string(c.epochs));
    set("train.seed", std::to_string(c.seed));
    set("train.margin", format_double(c.loss.margin));
    set("train.l2", format_double(c.loss.l2));
    set("train.negatives", std::to_string(c.loss.negatives));
    set("train.gate_in_training", c.gate_in_training ? "true" : "false");
    set("train.corrupt_relation", c.corrupt_relation ? "true" : "false");
    set("pretrain.epochs", std::to_string(c.pretrain.epochs));
    set("pretrain.lr", format_double(c.pretrain.learning_rate));
    set("pretrain.margin", format_double(c.pretrain.margin));
    set("richness.k", format_double(c.richness.k));
    set("richness.threshold", std::isinf(c.richness.threshold) ? "inf" : format_double(c.richness.threshold));
    set("ablation.richness_gate", c.richness_gate ? "true" : "false");
  }

  SyntheticSpec synthetic_spec() const {
    SyntheticSpec s;
    s.entities = integer("gen.entities");
    s.relations = integer("gen.relations");
    const std::string& p = str("gen.pattern");
    if (p == "tree") s.pattern = GraphPattern::tree;
    else if (p == "mixed") s.pattern = GraphPattern::mixed;
    else throw ConfigError("gen.pattern: expected tree or mixed, got '" + p + "'");
    s.max_children = integer("gen.max_children");
    s.require_fraction = real("gen.require");
    s.relate_fraction = real("gen.relate");
    s.symmetric_fraction = real("gen.symmetric");
    s.seed = integer("gen.seed");
    s.validate();
    return s;
  }

  DescriptionSpec description_spec() const {
    DescriptionSpec s;
    s.coverage = real("gen.desc_coverage");
    s.dim = integer("gen.desc_dim");
    s.seed = integer("gen.desc_seed");
    s.validate();
    return s;
  }

  /// Every key in documentation order, as `key=value` lines.
  std::string dump() const {
    std::ostringstream os;
    for (const auto& k : config_keys()) os << k.key << '=' << values_.at(k.key) << '\n';
    return os.str();
  }

private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

/// Keys stored in a checkpoint's config snapshot.
inline bool is_snapshot_key(const std::string& key) {
  for (const char* prefix : {"model.", "train.", "pretrain.", "richness.", "ablation."}) {
    if (key.rfind(prefix, 0) == 0 && key != "pretrain.embeddings") return true;
  }
  return false;
}

}  // namespace ndrl

#pragma once

// `ndrl <subcommand> [-c config] [--key=value ...]`
//
// Exit codes: 0 ok, 1 other failure, 2 missing or unreadable file,
// 3 invalid configuration, 4 training divergence.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ndrl/ndrl.hpp"

namespace ndrl::cli {

enum ExitCode : int { ok = 0, failure = 1, missing_file = 2, bad_config = 3, diverged = 4 };

inline std::string config_help() {
  std::ostringstream os;
  os << "Configuration keys (file lines `key=value`, or `--key=value` overrides):\n";
  for (const auto& k : config_keys()) {
    const std::string def = *k.default_value ? k.default_value : "(empty)";
    os << "  " << std::left << std::setw(26) << k.key << std::setw(13) << def << k.help << '\n';
  }
  return os.str();
}

struct Context {
  RunConfig config;
  std::ostream& out;
  std::ostream& err;

  std::string require(const std::string& key) const {
    const std::string& v = config.str(key);
    if (v.empty()) throw ConfigError(key + " must be set for this subcommand");
    return v;
  }

  KnowledgeGraph graph() const { return load_triples(require("data.triples")); }

  DatasetSplit split(const KnowledgeGraph& kg) const {
    return split_dataset(kg, config.ratios(), config.integer("split.seed"));
  }

  /// Empty bank of `fallback_dim` when no description file is configured.
  DescriptionBank descriptions(const KnowledgeGraph& kg, std::size_t fallback_dim) const {
    const std::string& path = config.str("data.descriptions");
    if (path.empty()) return DescriptionBank(kg.num_entities(), fallback_dim);
    SentenceFileStats stats;
    DescriptionBank bank = load_sentence_vectors(path, kg, &stats);
    if (stats.unknown_entities > 0) {
      err << "note: skipped " << stats.unknown_entities << " sentence lines for unknown entities\n";
    }
    return bank;
  }

  /// Writes to stdout and, when out.report is set, to that file.
  void report(const std::string& text) const {
    out << text;
    const std::string& path = config.str("out.report");
    if (path.empty()) return;
    std::ofstream file(path);
    if (!file) throw IoError("cannot write report: " + path);
    file << text;
  }
};

inline int cmd_generate(const Context& ctx) {
  const SyntheticSpec spec = ctx.config.synthetic_spec();
  const std::string path = ctx.require("data.triples");
  const SyntheticGraph g = generate_synthetic(spec);
  save_triples(path, g.graph, g.graph.triples());
  std::ostringstream os;
  os << "triples=" << g.graph.size() << '\n'
     << "entities=" << g.graph.num_entities() << '\n'
     << "relations=" << g.graph.num_relations() << '\n'
     << "planted_symmetric_pairs=" << g.planted_symmetric_pairs << '\n';
  const std::string& desc_path = ctx.config.str("data.descriptions");
  if (!desc_path.empty()) {
    const DescriptionBank bank = generate_descriptions(g.graph, ctx.config.description_spec());
    save_sentence_vectors(desc_path, g.graph, bank);
    os << "described_entities=" << bank.covered() << '\n';
  }
  ctx.report(os.str());
  return ok;
}

inline int cmd_pretrain(const Context& ctx) {
  const TrainConfig cfg = ctx.config.train_config();
  const KnowledgeGraph kg = ctx.graph();
  const DatasetSplit split = ctx.split(kg);
  const KnowledgeGraph train_graph = kg.with_triples(split.train);
  if (train_graph.empty()) throw EmptyGraphError("training split is empty");
  const TransEResult result = pretrain_embeddings(train_graph, cfg.pretrain, static_cast<Eigen::Index>(cfg.model.dim));
  save_embeddings(ctx.require("out.checkpoint"), result.table);
  std::ostringstream os;
  os << "epochs=" << result.losses.size() << '\n';
  if (!result.losses.empty()) os << "final_loss=" << format_double(result.losses.back()) << '\n';
  ctx.report(os.str());
  return ok;
}

inline std::optional<EmbeddingTable> pretrained_table(const Context& ctx) {
  const std::string& path = ctx.config.str("pretrain.embeddings");
  if (path.empty()) return std::nullopt;
  return load_checkpoint(path).embeddings;
}

inline int cmd_train(const Context& ctx) {
  const TrainConfig cfg = ctx.config.train_config();
  const KnowledgeGraph kg = ctx.graph();
  const DatasetSplit split = ctx.split(kg);
  const DescriptionBank bank = ctx.descriptions(kg, ctx.config.integer("gen.desc_dim"));
  const std::optional<EmbeddingTable> init = pretrained_table(ctx);

  const std::string ckpt_path = ctx.require("out.checkpoint");
  std::string log_path = ctx.config.str("out.log");
  if (log_path.empty()) log_path = ckpt_path + ".log";
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot write training log: " + log_path);
  log << "epoch\tloss\twall_ms\n";

  const Checkpoint ckpt = train(kg, split, bank, cfg, init ? &*init : nullptr, &log);
  save_checkpoint(ckpt_path, ckpt);
  save_split(ckpt_path, kg, split, ctx.config.ratios(), ctx.config.integer("split.seed"));

  std::ostringstream os;
  os << "epochs=" << ckpt.epoch << '\n';
  if (!ckpt.losses.empty()) os << "final_loss=" << format_double(ckpt.losses.back()) << '\n';
  os << "checkpoint=" << ckpt_path << '\n' << "log=" << log_path << '\n';
  ctx.report(os.str());
  return ok;
}

inline int cmd_eval(const Context& ctx) {
  const KnowledgeGraph kg = ctx.graph();
  const DatasetSplit split = ctx.split(kg);
  const CheckpointFile file = load_checkpoint(ctx.require("out.checkpoint"));
  EvalReport report;
  if (file.model) {
    const auto desc_dim = static_cast<std::size_t>(file.model->params.desc.projection.rows());
    const DescriptionBank bank = ctx.descriptions(kg, desc_dim);
    if (bank.dim() != desc_dim) {
      throw ConfigError("description dimension " + std::to_string(bank.dim()) + " does not match checkpoint (" +
                        std::to_string(desc_dim) + ")");
    }
    report = evaluate_checkpoint(*file.model, kg, split, bank);
  } else {
    report = evaluate_embeddings(file.embeddings, kg, split);
  }
  ctx.report(format_report_table(report) + format_report_kv(report));
  return ok;
}

inline int cmd_richness(const Context& ctx) {
  const TrainConfig cfg = ctx.config.train_config();
  const KnowledgeGraph kg = ctx.graph();
  const auto richness = structure_richness_all(kg, cfg.richness);
  std::ostringstream os;
  os << "entity\tdegree\trichness\trich\n";
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    os << kg.entities().label(e) << '\t' << kg.degree(EntityId(e)) << '\t' << format_double(richness[e]) << '\t'
       << (richness[e] >= cfg.richness.threshold ? 1 : 0) << '\n';
  }
  ctx.report(os.str());
  return ok;
}

inline int cmd_orc_scan(const Context& ctx) {
  ctx.report(format_orc_report(orc_scan(ctx.graph())));
  return ok;
}

inline int cmd_ablate(const Context& ctx) {
  const TrainConfig cfg = ctx.config.train_config();
  const KnowledgeGraph kg = ctx.graph();
  const DatasetSplit split = ctx.split(kg);
  const DescriptionBank bank = ctx.descriptions(kg, ctx.config.integer("gen.desc_dim"));
  const std::optional<EmbeddingTable> init = pretrained_table(ctx);
  const auto rows = run_ablation(kg, split, bank, cfg, init ? &*init : nullptr);
  ctx.report(format_ablation_table(rows));
  return ok;
}

/// Applies `--key=value` / `key=value` tokens left over after option parsing.
inline void apply_overrides(RunConfig& config, const std::vector<std::string>& tokens) {
  for (std::string tok : tokens) {
    if (tok.rfind("--", 0) == 0) tok.erase(0, 2);
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("unrecognised argument '" + tok + "' (expected --key=value)");
    config.set(tok.substr(0, eq), tok.substr(eq + 1));
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Knowledge-graph embedding with neighborhood and description attention"};
  app.footer(config_help());
  app.require_subcommand(1);
  std::string config_path;
  bool print_config = false;

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Context&);
  };
  const Sub subs[] = {
      {"generate", "write a synthetic triple file (and sentence vectors if data.descriptions is set)", cmd_generate},
      {"pretrain", "pre-train translation embeddings on the training split", cmd_pretrain},
      {"train", "train the full model; writes checkpoint, log and split files", cmd_train},
      {"eval", "raw and filtered link prediction on the test split", cmd_eval},
      {"richness", "per-entity structure richness table", cmd_richness},
      {"orc-scan", "count one-relation circles", cmd_orc_scan},
      {"ablate", "train and evaluate NDRL, NDRL-r, NDRL-a and NDRL-s", cmd_ablate},
  };
  std::vector<CLI::App*> handles;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->allow_extras();
    sub->add_option("-c,--config", config_path, "key=value configuration file");
    sub->add_flag("--print-config", print_config, "print the effective configuration and exit");
    handles.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : bad_config;
  }

  try {
    Context ctx{RunConfig{}, out, err};
    if (!config_path.empty()) ctx.config.read_file(config_path);
    for (std::size_t i = 0; i < handles.size(); ++i) {
      if (!handles[i]->parsed()) continue;
      apply_overrides(ctx.config, handles[i]->remaining());
      if (print_config) {
        out << ctx.config.dump();
        return ok;
      }
      return subs[i].fn(ctx);
    }
    return failure;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return missing_file;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return bad_config;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return diverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
}

}  // namespace ndrl::cli

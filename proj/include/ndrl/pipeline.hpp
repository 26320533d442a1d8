#pragma once

// Train-then-evaluate helpers shared by the CLI and the ablation harness.

#include <array>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ndrl/evaluator.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/objective.hpp"
#include "ndrl/trainer.hpp"

namespace ndrl {

/// Filtered against train + valid + test; richness is measured on the
/// training graph, which is also the graph the encoder runs over.
inline EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const KnowledgeGraph& kg, const DatasetSplit& split,
                                      const DescriptionBank& bank) {
  const KnowledgeGraph train_graph = kg.with_triples(split.train);
  const EncodedModel encoded = encode_checkpoint(ckpt, train_graph, bank);
  const TripleScorer scorer(encoded, train_graph, ckpt.config.richness, ckpt.config.richness_gate);
  const TripleSet known = union_of({split.train, split.valid, split.test});
  return evaluate(scorer, train_graph, split.test, known);
}

inline EvalReport evaluate_embeddings(const EmbeddingTable& table, const KnowledgeGraph& kg,
                                      const DatasetSplit& split) {
  table.validate(kg);
  const TransEScorer scorer{&table};
  const TripleSet known = union_of({split.train, split.valid, split.test});
  return evaluate(scorer, kg, split.test, known);
}

struct AblationRow {
  std::string name;
  TrainConfig config;
  Checkpoint checkpoint;
  EvalReport report;
};

inline std::array<std::pair<std::string, TrainConfig>, 4> ablation_variants(const TrainConfig& base) {
  TrainConfig full = base;
  full.model.use_relation = true;
  full.model.desc_mode = DescMode::attention;
  full.richness_gate = true;
  TrainConfig no_relation = full;
  no_relation.model.use_relation = false;
  TrainConfig mean_desc = full;
  mean_desc.model.desc_mode = DescMode::mean;
  TrainConfig no_gate = full;
  no_gate.richness_gate = false;
  return {{{"NDRL", full}, {"NDRL-r", no_relation}, {"NDRL-a", mean_desc}, {"NDRL-s", no_gate}}};
}

/// All four variants share one pre-trained table and one training seed.
inline std::vector<AblationRow> run_ablation(const KnowledgeGraph& kg, const DatasetSplit& split,
                                             const DescriptionBank& bank, const TrainConfig& base,
                                             const EmbeddingTable* init = nullptr) {
  base.validate();
  const KnowledgeGraph train_graph = kg.with_triples(split.train);
  const EmbeddingTable pretrained =
      init ? *init : pretrain_embeddings(train_graph, base.pretrain, static_cast<Eigen::Index>(base.model.dim)).table;

  std::vector<AblationRow> rows;
  for (auto& [name, cfg] : ablation_variants(base)) {
    AblationRow row{name, cfg, {}, {}};
    // The gate only changes scoring unless it also masks training pairs.
    if (name == "NDRL-s" && !cfg.gate_in_training) {
      row.checkpoint = rows.front().checkpoint;
      row.checkpoint.config = cfg;
    } else {
      row.checkpoint = train(kg, split, bank, cfg, &pretrained);
    }
    row.report = evaluate_checkpoint(row.checkpoint, kg, split, bank);
    rows.push_back(std::move(row));
  }
  return rows;
}

/// One row per variant; columns Hits@1, Hits@10, MR, MRR, each as raw then filter.
inline std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "model";
  for (const char* col : {"H@1.raw", "H@1.filt", "H@10.raw", "H@10.filt", "MR.raw", "MR.filt", "MRR.raw", "MRR.filt"}) {
    os << std::right << std::setw(11) << col;
  }
  os << '\n' << std::fixed;
  for (const auto& row : rows) {
    const Metrics& r = row.report.raw;
    const Metrics& f = row.report.filter;
    os << std::left << std::setw(8) << row.name << std::right << std::setprecision(2);
    os << std::setw(11) << 100.0 * r.hits1 << std::setw(11) << 100.0 * f.hits1;
    os << std::setw(11) << 100.0 * r.hits10 << std::setw(11) << 100.0 * f.hits10;
    os << std::setw(11) << r.mr << std::setw(11) << f.mr << std::setprecision(3);
    os << std::setw(11) << r.mrr << std::setw(11) << f.mrr << '\n';
  }
  return os.str();
}

}  // namespace ndrl

#pragma once

// Joint training loop and finite-difference gradient validation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "ndrl/desc_attention.hpp"
#include "ndrl/errors.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/model.hpp"
#include "ndrl/negative_sampling.hpp"
#include "ndrl/objective.hpp"
#include "ndrl/synthetic.hpp"
#include "ndrl/transe.hpp"

namespace ndrl {

struct TrainConfig {
  ModelConfig model;
  TransEConfig pretrain;
  double learning_rate = 0.004;
  std::size_t batch_size = 512;
  int epochs = 100;
  std::uint64_t seed = 42;
  LossConfig loss;
  RichnessConfig richness;
  bool richness_gate = true;      // scoring-time gate; off reproduces the always-joint variant
  bool gate_in_training = false;  // also drop description terms for rich pairs during training
  bool corrupt_relation = false;

  void validate() const {
    model.validate();
    pretrain.validate();
    loss.validate();
    richness.validate();
    if (!(learning_rate >= 0.0)) throw ConfigError("train.lr must be non-negative");
    if (batch_size == 0) throw ConfigError("train.batch must be at least 1");
    if (epochs < 0) throw ConfigError("train.epochs must be non-negative");
  }
};

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
  int epoch = 0;
  std::vector<double> losses;
};

inline std::vector<bool> rich_entities(const KnowledgeGraph& graph, const RichnessConfig& cfg) {
  const auto richness = structure_richness_all(graph, cfg);
  std::vector<bool> out(richness.size());
  for (std::size_t i = 0; i < richness.size(); ++i) out[i] = richness[i] >= cfg.threshold;
  return out;
}

inline void sgd_step(ModelParams& params, ModelParams& grad, double learning_rate) {
  auto p = tensor_views(params);
  auto g = tensor_views(grad);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p[i].size(); ++j) p[i][j] -= learning_rate * g[i][j];
  }
}

/// Trains on `split.train`. `init` supplies pre-trained tables; when null they
/// are pre-trained here with `cfg.pretrain`. `log` receives one
/// `epoch<TAB>loss<TAB>wall_ms` line per epoch.
inline Checkpoint train(const KnowledgeGraph& kg, const DatasetSplit& split, const DescriptionBank& bank,
                        const TrainConfig& cfg, const EmbeddingTable* init = nullptr, std::ostream* log = nullptr) {
  cfg.validate();
  if (split.train.empty()) throw EmptyGraphError("training split is empty");
  const KnowledgeGraph graph = kg.with_triples(split.train);

  EmbeddingTable pretrained;
  if (init) {
    init->validate(graph);
    pretrained = *init;
  } else {
    pretrained = pretrain_embeddings(graph, cfg.pretrain, static_cast<Eigen::Index>(cfg.model.dim)).table;
  }

  Rng rng(cfg.seed);
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = init_model(pretrained, bank.dim(), cfg.model, rng);
  ModelParams& params = ckpt.params;

  const EdgeIndex edges = build_edge_index(graph, cfg.model.include_inverse);
  std::vector<bool> rich;
  if (cfg.gate_in_training) rich = rich_entities(graph, cfg.richness);
  const std::vector<bool>* rich_mask = cfg.gate_in_training ? &rich : nullptr;

  std::vector<std::size_t> order(graph.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::min(cfg.batch_size, order.size());
  std::vector<TrainingPair> pairs;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(begin + batch, order.size());
      pairs.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const Triple& pos = graph.triples()[order[i]];
        for (const auto& ns : sample_negatives(graph, pos, cfg.loss.negatives, rng, cfg.corrupt_relation)) {
          pairs.push_back({pos, ns.triple});
        }
      }
      const ModelForward fwd = model_forward(edges, params, bank, cfg.model.desc_mode);
      ModelParams grad = zeros_like(params);
      const BatchObjective obj =
          batch_objective(fwd, edges, params, bank, pairs, cfg.loss.margin, cfg.loss.l2, rich_mask, &grad);
      if (!std::isfinite(obj.total())) {
        throw DivergenceError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1), epoch + 1);
      }
      epoch_loss += obj.total();
      sgd_step(params, grad, cfg.learning_rate);
    }
    ckpt.losses.push_back(epoch_loss);
    ckpt.epoch = epoch + 1;
    if (log) {
      const auto ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
      *log << (epoch + 1) << '\t' << format_double(epoch_loss) << '\t' << ms << '\n';
    }
  }
  return ckpt;
}

/// Encodes a checkpoint over the training graph for scoring.
inline EncodedModel encode_checkpoint(const Checkpoint& ckpt, const KnowledgeGraph& train_graph,
                                      const DescriptionBank& bank) {
  return encode_model(train_graph, ckpt.params, bank, ckpt.config.model);
}

// ---------------------------------------------------------------------------
// Gradient validation.

struct GradCheckConfig {
  std::size_t entities = 20;
  std::size_t dim = 4;
  std::size_t heads = 2;
  std::size_t layers = 2;
  std::size_t desc_dim = 3;
  double desc_coverage = 0.6;
  double margin = 1.0;
  double l2 = 1e-3;
  std::size_t negatives = 2;
  double step = 1e-5;
  DescMode desc_mode = DescMode::attention;
  bool use_relation = true;
  bool gate_in_training = false;
  std::uint64_t seed = 1;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::map<std::string, double> per_class;  // worst error per parameter class
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose perturbation crossed a kink
  double loss = 0.0;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose gradient
/// is at round-off level from dominating.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares the analytic gradient of the batch objective at `params` with
/// central differences, coordinate by coordinate.
inline GradCheckReport gradient_check(const ModelParams& params, const KnowledgeGraph& graph, const DescriptionBank& bank,
                                      std::span<const TrainingPair> pairs, const ModelConfig& model, double margin,
                                      double l2, const std::vector<bool>* rich_mask, double step) {
  const EdgeIndex edges = build_edge_index(graph, model.include_inverse);
  auto evaluate = [&](const ModelParams& p, KinkMonitor* kinks) {
    const ModelForward fwd = model_forward(edges, p, bank, model.desc_mode, kinks);
    return batch_objective(fwd, edges, p, bank, pairs, margin, l2, rich_mask, nullptr, kinks).total();
  };

  GradCheckReport report;
  ModelParams grad = zeros_like(params);
  KinkMonitor base_kinks;
  {
    const ModelForward fwd = model_forward(edges, params, bank, model.desc_mode, &base_kinks);
    report.loss = batch_objective(fwd, edges, params, bank, pairs, margin, l2, rich_mask, &grad, &base_kinks).total();
  }
  ModelParams probe = params;
  auto probe_views = tensor_views(probe);
  auto grad_views = tensor_views(grad);
  std::vector<std::string> classes;
  for_each_tensor(probe, [&](const char* cls, const std::string&, std::span<double>) { classes.emplace_back(cls); });

  for (std::size_t t = 0; t < probe_views.size(); ++t) {
    auto& worst = report.per_class[classes[t]];
    for (std::size_t j = 0; j < probe_views[t].size(); ++j) {
      const double original = probe_views[t][j];
      KinkMonitor plus_kinks;
      KinkMonitor minus_kinks;
      probe_views[t][j] = original + step;
      const double plus = evaluate(probe, &plus_kinks);
      probe_views[t][j] = original - step;
      const double minus = evaluate(probe, &minus_kinks);
      probe_views[t][j] = original;
      if (plus_kinks.signs != base_kinks.signs || minus_kinks.signs != base_kinks.signs) {
        ++report.skipped;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = relative_error(grad_views[t][j], numeric);
      worst = std::max(worst, err);
      report.max_relative_error = std::max(report.max_relative_error, err);
      ++report.checked;
    }
  }
  return report;
}

/// Builds a small random model on a synthetic graph and validates the full
/// joint-loss gradient for every parameter class.
inline GradCheckReport check_gradients(const GradCheckConfig& cfg) {
  if (cfg.entities > 30 || cfg.dim > 8) throw ConfigError("gradient check is limited to 30 entities and dim 8");
  SyntheticSpec spec;
  spec.entities = cfg.entities;
  spec.relations = 3;
  spec.seed = cfg.seed;
  const KnowledgeGraph graph = generate_synthetic(spec).graph;

  DescriptionSpec dspec;
  dspec.coverage = cfg.desc_coverage;
  dspec.dim = cfg.desc_dim;
  dspec.seed = cfg.seed + 1;
  const DescriptionBank bank = generate_descriptions(graph, dspec);

  ModelConfig model;
  model.dim = cfg.dim;
  model.heads = cfg.heads;
  model.layers = cfg.layers;
  model.desc_mode = cfg.desc_mode;
  model.use_relation = cfg.use_relation;

  Rng rng(cfg.seed);
  const auto dim = static_cast<Eigen::Index>(cfg.dim);
  EmbeddingTable init = xavier_embeddings(graph.num_entities(), graph.num_relations(), dim, rng);
  ModelParams params = init_model(init, bank.dim(), model, rng);
  // Move the identity-initialised transforms off their special values.
  std::normal_distribution<double> noise(0.0, 0.3);
  for (auto& m : params.gat.relation_transforms) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += noise(rng);
  }
  for (Eigen::Index i = 0; i < params.gat.residual.size(); ++i) params.gat.residual.data()[i] += noise(rng);

  std::vector<TrainingPair> pairs;
  for (const Triple& pos : graph.triples()) {
    for (const auto& ns : sample_negatives(graph, pos, cfg.negatives, rng)) pairs.push_back({pos, ns.triple});
  }
  std::vector<bool> rich;
  if (cfg.gate_in_training) rich = rich_entities(graph, RichnessConfig{0.5, 6.0});
  return gradient_check(params, graph, bank, pairs, model, cfg.margin, cfg.l2,
                        cfg.gate_in_training ? &rich : nullptr, cfg.step);
}

}  // namespace ndrl

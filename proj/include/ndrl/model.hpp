#pragma once

// Full model: embedding tables, encoder and description attention, plus the
// batch objective with its exact gradient.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ndrl/desc_attention.hpp"
#include "ndrl/gat_encoder.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/linalg.hpp"
#include "ndrl/objective.hpp"
#include "ndrl/transe.hpp"

namespace ndrl {

struct ModelConfig {
  std::size_t dim = 100;
  std::size_t heads = 2;
  std::size_t layers = 2;
  double rho = 0.5;
  double slope = 0.2;
  bool use_relation = true;  // false: relation-blind neighbors (rho forced to 1)
  DescMode desc_mode = DescMode::attention;
  bool include_inverse = true;

  double effective_rho() const { return use_relation ? rho : 1.0; }

  void validate() const {
    if (dim == 0 || heads == 0 || layers == 0) throw ConfigError("model.dim, model.heads and model.layers must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("model.rho must lie strictly inside (0,1)");
    if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("model.slope must lie in (0,1)");
  }
};

struct ModelParams {
  Matrix entities;
  Matrix relations;
  GatParams gat;
  DescAttentionParams desc;
};

inline ModelParams init_model(const EmbeddingTable& init, std::size_t desc_dim, const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  if (static_cast<std::size_t>(init.dim()) != cfg.dim) {
    throw ShapeError("initial embeddings have dimension " + std::to_string(init.dim()) + ", model.dim is " +
                     std::to_string(cfg.dim));
  }
  ModelParams p;
  p.entities = init.entities;
  p.relations = init.relations;
  const auto dim = static_cast<Eigen::Index>(cfg.dim);
  p.gat = init_gat_params(dim, cfg.heads, cfg.layers, cfg.effective_rho(), cfg.slope, rng);
  p.desc = DescAttentionParams::xavier(std::max<std::size_t>(desc_dim, 1), cfg.dim, rng);
  p.desc.slope = cfg.slope;
  return p;
}

inline ModelParams zeros_like(const ModelParams& o) {
  ModelParams g;
  g.entities = Matrix::Zero(o.entities.rows(), o.entities.cols());
  g.relations = Matrix::Zero(o.relations.rows(), o.relations.cols());
  g.gat = zeros_like(o.gat);
  g.desc = DescAttentionParams::zeros_like(o.desc);
  return g;
}

/// Calls f(parameter_class, name, span) for every trainable tensor, in a
/// fixed order. Works on const and mutable bundles.
template <typename Params, typename F>
void for_each_tensor(Params& p, F&& f) {
  auto view = [](auto& m) {
    using T = std::remove_reference_t<decltype(*m.data())>;
    return std::span<T>(m.data(), static_cast<std::size_t>(m.size()));
  };
  f("entities", "entities", view(p.entities));
  f("relations", "relations", view(p.relations));
  for (std::size_t l = 0; l < p.gat.layers.size(); ++l) {
    auto& layer = p.gat.layers[l];
    for (std::size_t k = 0; k < layer.weights.size(); ++k) {
      const std::string prefix = "gat.layer" + std::to_string(l) + ".head" + std::to_string(k);
      f("gat.W", prefix + ".W", view(layer.weights[k]));
      f("gat.z", prefix + ".z", view(layer.attention[k]));
    }
  }
  for (std::size_t l = 0; l < p.gat.relation_transforms.size(); ++l) {
    f("gat.relation_transform", "gat.relation" + std::to_string(l), view(p.gat.relation_transforms[l]));
  }
  f("gat.residual", "gat.residual", view(p.gat.residual));
  f("desc.projection", "desc.projection", view(p.desc.projection));
  f("desc.attention", "desc.attention", view(p.desc.attention));
  f("desc.z", "desc.z", view(p.desc.attention_vector));
}

inline std::vector<std::span<double>> tensor_views(ModelParams& p) {
  std::vector<std::span<double>> out;
  for_each_tensor(p, [&](const char*, const std::string&, std::span<double> s) { out.push_back(s); });
  return out;
}

inline double squared_norm(const ModelParams& p) {
  double sum = 0.0;
  for_each_tensor(p, [&](const char*, const std::string&, std::span<const double> s) {
    for (double v : s) sum += v * v;
  });
  return sum;
}

struct ModelForward {
  GatForward gat;
  DescriptionForward desc;
};

inline ModelForward model_forward(const EdgeIndex& edges, const ModelParams& params, const DescriptionBank& bank,
                                  DescMode mode, KinkMonitor* kinks = nullptr) {
  ModelForward fwd;
  fwd.gat = encode_forward(edges, params.entities, params.relations, params.gat, kinks);
  fwd.desc = describe_all(fwd.gat.output.entities, bank, params.desc, mode, kinks);
  return fwd;
}

inline EncodedModel to_encoded(ModelForward&& fwd) {
  EncodedModel m;
  m.entities = std::move(fwd.gat.output.entities);
  m.relations = std::move(fwd.gat.output.relations);
  m.descriptions = std::move(fwd.desc.values);
  m.has_description = std::move(fwd.desc.present);
  return m;
}

/// Encodes the model over `graph` (the training graph) for scoring.
inline EncodedModel encode_model(const KnowledgeGraph& graph, const ModelParams& params, const DescriptionBank& bank,
                                 const ModelConfig& cfg) {
  if (static_cast<std::size_t>(params.entities.rows()) != graph.num_entities() ||
      static_cast<std::size_t>(params.relations.rows()) != graph.num_relations()) {
    throw ShapeError("model tables do not match the graph vocabularies");
  }
  return to_encoded(model_forward(build_edge_index(graph, cfg.include_inverse), params, bank, cfg.desc_mode));
}

// ---------------------------------------------------------------------------
// Batch objective.

struct TrainingPair {
  Triple positive;
  Triple negative;
};

struct BatchObjective {
  double margin_loss = 0.0;
  double l2 = 0.0;
  double total() const { return margin_loss + l2; }
};

namespace detail {

// Adds coeff * d||a + r - b|| to the three row gradients.
inline void norm_grad(const RowRef& a, const RowRef& r, const RowRef& b, double coeff, Eigen::Ref<RowVector> da,
                      Eigen::Ref<RowVector> dr, Eigen::Ref<RowVector> db, KinkMonitor* kinks) {
  RowVector x = a + r - b;
  const double norm = x.norm();
  observe(kinks, norm);
  if (norm == 0.0 || coeff == 0.0) return;
  x *= coeff / norm;
  da += x;
  dr += x;
  db -= x;
}

}  // namespace detail

struct EnergyGrads {
  Matrix d_entities;
  Matrix d_relations;
  Matrix d_descriptions;
};

/// Energy of one triple under the encoded outputs, with `coeff` times its
/// gradient accumulated into `g`. `structure_only` drops the description terms.
inline double energy_with_grad(const Matrix& ent, const Matrix& rel, const DescriptionForward& desc, const Triple& t,
                               bool structure_only, double coeff, EnergyGrads& g, KinkMonitor* kinks) {
  const auto h = t.head.index();
  const auto r = t.relation.index();
  const auto tl = t.tail.index();
  const bool hw = !structure_only && desc.present[h];
  const bool tw = !structure_only && desc.present[tl];
  double e = (ent.row(h) + rel.row(r) - ent.row(tl)).norm();
  // Rows are copied out so aliasing (h == t) accumulates correctly.
  RowVector dhg = RowVector::Zero(ent.cols()), dtg = dhg, dr = dhg, dhw = dhg, dtw = dhg;
  detail::norm_grad(ent.row(h), rel.row(r), ent.row(tl), coeff, dhg, dr, dtg, kinks);
  if (hw && tw) {
    e += (desc.values.row(h) + rel.row(r) - desc.values.row(tl)).norm();
    detail::norm_grad(desc.values.row(h), rel.row(r), desc.values.row(tl), coeff, dhw, dr, dtw, kinks);
  }
  if (hw) {
    e += (desc.values.row(h) + rel.row(r) - ent.row(tl)).norm();
    detail::norm_grad(desc.values.row(h), rel.row(r), ent.row(tl), coeff, dhw, dr, dtg, kinks);
  }
  if (tw) {
    e += (ent.row(h) + rel.row(r) - desc.values.row(tl)).norm();
    detail::norm_grad(ent.row(h), rel.row(r), desc.values.row(tl), coeff, dhg, dr, dtw, kinks);
  }
  g.d_entities.row(h) += dhg;
  g.d_entities.row(tl) += dtg;
  g.d_relations.row(r) += dr;
  g.d_descriptions.row(h) += dhw;
  g.d_descriptions.row(tl) += dtw;
  return e;
}

/// Margin loss over `pairs` plus l2 * ||theta||^2. When `grad` is non-null it
/// receives the exact gradient (it must be zero-initialized by the caller).
/// `structure_only_mask`, when given, marks entities rich enough that triples
/// between two of them drop the description terms.
inline BatchObjective batch_objective(const ModelForward& fwd, const EdgeIndex& edges, const ModelParams& params,
                                      const DescriptionBank& bank, std::span<const TrainingPair> pairs, double margin,
                                      double l2, const std::vector<bool>* structure_only_mask, ModelParams* grad,
                                      KinkMonitor* kinks = nullptr) {
  const Matrix& ent = fwd.gat.output.entities;
  const Matrix& rel = fwd.gat.output.relations;
  EnergyGrads g{Matrix::Zero(ent.rows(), ent.cols()), Matrix::Zero(rel.rows(), rel.cols()),
                Matrix::Zero(ent.rows(), ent.cols())};
  EnergyGrads scratch{Matrix::Zero(ent.rows(), ent.cols()), Matrix::Zero(rel.rows(), rel.cols()),
                      Matrix::Zero(ent.rows(), ent.cols())};
  auto rich = [&](const Triple& t) {
    return structure_only_mask && (*structure_only_mask)[t.head.index()] && (*structure_only_mask)[t.tail.index()];
  };

  BatchObjective obj;
  for (const TrainingPair& pair : pairs) {
    // Energies first (gradient-free), then gradients only for active hinges.
    const double d_pos = energy_with_grad(ent, rel, fwd.desc, pair.positive, rich(pair.positive), 0.0, scratch, nullptr);
    const double d_neg = energy_with_grad(ent, rel, fwd.desc, pair.negative, rich(pair.negative), 0.0, scratch, nullptr);
    const double hinge = margin + d_pos - d_neg;
    observe(kinks, hinge);
    if (hinge <= 0.0) continue;
    obj.margin_loss += hinge;
    if (grad || kinks) {
      energy_with_grad(ent, rel, fwd.desc, pair.positive, rich(pair.positive), grad ? 1.0 : 0.0, g, kinks);
      energy_with_grad(ent, rel, fwd.desc, pair.negative, rich(pair.negative), grad ? -1.0 : 0.0, g, kinks);
    }
  }
  obj.l2 = l2 * squared_norm(params);

  if (grad) {
    Matrix d_ent = g.d_entities;
    describe_all_backward(fwd.desc, g.d_descriptions, ent, bank, params.desc, grad->desc, d_ent);
    encode_backward(fwd.gat, edges, params.entities, params.gat, d_ent, g.d_relations, grad->gat, grad->entities,
                    grad->relations);
    if (l2 > 0.0) {
      auto gv = tensor_views(*grad);
      std::size_t i = 0;
      for_each_tensor(params, [&](const char*, const std::string&, std::span<const double> s) {
        auto& target = gv[i++];
        for (std::size_t j = 0; j < s.size(); ++j) target[j] += 2.0 * l2 * s[j];
      });
    }
  }
  return obj;
}

}  // namespace ndrl

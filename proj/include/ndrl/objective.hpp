#pragma once

// Joint energies, margin ranking loss and richness-gated triple scoring.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ndrl/errors.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/linalg.hpp"
#include "ndrl/negative_sampling.hpp"
#include "ndrl/transe.hpp"

namespace ndrl {

struct EnergyBreakdown {
  double d_g = 0.0;
  double d_ww = 0.0;
  double d_wg = 0.0;
  double d_gw = 0.0;
  double d_w = 0.0;
  double d = 0.0;
};

/// Structural term d_g = ||h_g + r - t_g|| plus the three description terms.
/// A missing description on one side zeroes every term that uses it.
inline EnergyBreakdown energy_joint(const RowRef& h_g, const RowRef& t_g, const std::optional<RowRef>& h_w,
                                    const std::optional<RowRef>& t_w, const RowRef& r) {
  require_same_size(h_g, r, "energy_joint");
  require_same_size(t_g, r, "energy_joint");
  if (h_w) require_same_size(*h_w, r, "energy_joint");
  if (t_w) require_same_size(*t_w, r, "energy_joint");
  EnergyBreakdown e;
  e.d_g = (h_g + r - t_g).norm();
  if (h_w && t_w) e.d_ww = (*h_w + r - *t_w).norm();
  if (h_w) e.d_wg = (*h_w + r - t_g).norm();
  if (t_w) e.d_gw = (h_g + r - *t_w).norm();
  e.d_w = e.d_ww + e.d_wg + e.d_gw;
  e.d = e.d_g + e.d_w;
  return e;
}

struct LossConfig {
  double margin = 1.0;
  std::size_t negatives = 1;
  double l2 = 1e-5;

  void validate() const {
    if (!(margin > 0)) throw ConfigError("margin must be positive");
    if (negatives == 0) throw ConfigError("need at least one negative per positive");
    if (!(l2 >= 0)) throw ConfigError("L2 weight must be non-negative");
  }
};

/// sum_i max(gamma + pos_i - neg_i, 0) over matched pairs.
inline double margin_loss(std::span<const double> positive, std::span<const double> negative, double gamma) {
  if (!(gamma > 0)) throw ConfigError("margin must be positive");
  if (positive.size() != negative.size()) throw ShapeError("margin_loss: unmatched energy lists");
  double loss = 0.0;
  for (std::size_t i = 0; i < positive.size(); ++i) loss += std::max(gamma + positive[i] - negative[i], 0.0);
  return loss;
}

/// Final entity, relation and description vectors of a model, ready to score.
struct EncodedModel {
  Matrix entities;
  Matrix relations;
  Matrix descriptions;
  std::vector<bool> has_description;

  std::optional<RowRef> description(EntityId e) const {
    if (!has_description[e.index()]) return std::nullopt;
    return RowRef(descriptions.row(e.index()));
  }

  EnergyBreakdown energies(const Triple& t) const {
    return energy_joint(entities.row(t.head.index()), entities.row(t.tail.index()), description(t.head),
                        description(t.tail), relations.row(t.relation.index()));
  }
};

/// Lower is better. With the gate on, a triple whose endpoints both reach the
/// richness threshold is scored by d_g alone; every other triple by the joint d.
class TripleScorer {
public:
  TripleScorer(const EncodedModel& model, const KnowledgeGraph& kg, const RichnessConfig& richness, bool gate)
      : model_(&model), threshold_(richness.threshold) {
    richness.validate();
    if (static_cast<std::size_t>(model.entities.rows()) != kg.num_entities()) {
      throw ShapeError("model does not match the graph vocabulary");
    }
    if (gate) richness_ = structure_richness_all(kg, richness);
  }

  bool structure_only(const Triple& t) const {
    if (!richness_) return false;
    return (*richness_)[t.head.index()] >= threshold_ && (*richness_)[t.tail.index()] >= threshold_;
  }

  double operator()(const Triple& t) const {
    if (t.head.index() >= num_entities() || t.tail.index() >= num_entities() ||
        t.relation.index() >= static_cast<std::size_t>(model_->relations.rows())) {
      throw LookupError("triple handle out of range");
    }
    if (structure_only(t)) {
      return (model_->entities.row(t.head.index()) + model_->relations.row(t.relation.index()) -
              model_->entities.row(t.tail.index()))
          .norm();
    }
    return model_->energies(t).d;
  }

  /// False for gate-off scorers: richness was never computed.
  bool richness_consulted() const noexcept { return richness_.has_value(); }

private:
  std::size_t num_entities() const { return static_cast<std::size_t>(model_->entities.rows()); }

  const EncodedModel* model_;
  double threshold_;
  std::optional<std::vector<double>> richness_;
};

inline double score_triple(const EncodedModel& model, const KnowledgeGraph& kg, const RichnessConfig& cfg, bool gate,
                           const Triple& triple) {
  kg.check(triple.head);
  kg.check(triple.tail);
  if (!gate) return TripleScorer(model, kg, cfg, false)(triple);
  cfg.validate();
  const bool rich = structure_richness(kg, triple.head, cfg) >= cfg.threshold &&
                    structure_richness(kg, triple.tail, cfg) >= cfg.threshold;
  if (rich) {
    return (model.entities.row(triple.head.index()) + model.relations.row(triple.relation.index()) -
            model.entities.row(triple.tail.index()))
        .norm();
  }
  return model.energies(triple).d;
}

}  // namespace ndrl

#pragma once

// Relation-aware graph attention encoder.
//
// Each entity attends over its incident edges. The neighbor node for an edge
// is rho * (source entity) + (1 - rho) * (relation), with the relation negated
// on edges the target points out of, so that both orientations describe the
// target under a translation h + r ~ t. Interior layers concatenate heads and
// apply LeakyReLU; the last layer averages heads with no activation. Relations
// are linearly transformed once per layer, and the initial entity table is
// added back through a residual projection.

#include <string>
#include <vector>

#include "ndrl/errors.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/linalg.hpp"

namespace ndrl {

struct GatLayerParams {
  std::vector<Matrix> weights;    // per head: in_dim x out_dim
  std::vector<Vector> attention;  // per head: 2 * out_dim
  double slope = 0.2;

  std::size_t heads() const noexcept { return weights.size(); }
  Eigen::Index in_dim() const { return weights.front().rows(); }
  Eigen::Index head_dim() const { return weights.front().cols(); }
};

struct GatParams {
  std::vector<GatLayerParams> layers;
  std::vector<Matrix> relation_transforms;  // one per layer
  Matrix residual;                          // T^i x T^f
  double rho = 0.5;

  /// Width emitted by layer `l`: K*T' on interior layers, T' on the last.
  Eigen::Index layer_out_dim(std::size_t l) const {
    const auto& layer = layers[l];
    return l + 1 == layers.size() ? layer.head_dim()
                                  : layer.head_dim() * static_cast<Eigen::Index>(layer.heads());
  }

  Eigen::Index output_dim() const { return layers.back().head_dim(); }

  /// Throws ShapeError naming the first layer whose dimensions do not chain.
  void validate(Eigen::Index input_dim) const {
    if (layers.empty()) throw ShapeError("encoder needs at least one layer");
    if (relation_transforms.size() != layers.size()) {
      throw ShapeError("encoder needs one relation transform per layer");
    }
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0,1]");
    Eigen::Index dim = input_dim;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      const std::string name = "layer " + std::to_string(l);
      if (layer.heads() == 0 || layer.attention.size() != layer.heads()) {
        throw ShapeError(name + ": needs K >= 1 heads with one attention vector each");
      }
      for (std::size_t k = 0; k < layer.heads(); ++k) {
        if (layer.weights[k].rows() != dim || layer.weights[k].cols() != layer.head_dim()) {
          throw ShapeError(name + ": head " + std::to_string(k) + " projection is " +
                           std::to_string(layer.weights[k].rows()) + "x" + std::to_string(layer.weights[k].cols()) +
                           ", expected " + std::to_string(dim) + "x" + std::to_string(layer.head_dim()));
        }
        if (layer.attention[k].size() != 2 * layer.head_dim()) {
          throw ShapeError(name + ": head " + std::to_string(k) + " attention vector has wrong length");
        }
      }
      if (!(layer.slope > 0.0 && layer.slope < 1.0)) throw ConfigError(name + ": slope must lie in (0,1)");
      const Eigen::Index out = layer_out_dim(l);
      if (relation_transforms[l].rows() != dim || relation_transforms[l].cols() != out) {
        throw ShapeError(name + ": relation transform must be " + std::to_string(dim) + "x" + std::to_string(out));
      }
      dim = out;
    }
    if (residual.rows() != input_dim || residual.cols() != output_dim()) {
      throw ShapeError("residual transform must be " + std::to_string(input_dim) + "x" +
                       std::to_string(output_dim()));
    }
  }
};

/// Xavier projections and attention vectors. The relation transforms start
/// as block identities whose product is the identity, and the residual starts
/// as the identity, so an untrained encoder passes its input tables through
/// and only adds the attention term.
inline GatParams init_gat_params(Eigen::Index dim, std::size_t heads, std::size_t num_layers, double rho,
                                 double slope, Rng& rng) {
  if (dim <= 0 || heads == 0 || num_layers == 0) throw ConfigError("encoder dims, heads and layers must be positive");
  GatParams p;
  p.rho = rho;
  Eigen::Index in = dim;
  const auto k = static_cast<Eigen::Index>(heads);
  for (std::size_t l = 0; l < num_layers; ++l) {
    GatLayerParams layer;
    layer.slope = slope;
    for (std::size_t h = 0; h < heads; ++h) {
      layer.weights.push_back(xavier_matrix(in, dim, rng));
      layer.attention.push_back(xavier_vector(2 * dim, rng));
    }
    p.layers.push_back(std::move(layer));
    const Eigen::Index out = l + 1 == num_layers ? dim : k * dim;
    Matrix rt = Matrix::Zero(in, out);
    if (in == out) {
      rt.setIdentity();
    } else if (out == k * in) {  // fan out into every head block
      for (Eigen::Index b = 0; b < k; ++b) rt.block(0, b * in, in, in).setIdentity();
    } else if (in == k * out) {  // average head blocks back down
      for (Eigen::Index b = 0; b < k; ++b) rt.block(b * out, 0, out, out).setIdentity() /= static_cast<double>(k);
    }
    p.relation_transforms.push_back(std::move(rt));
    in = out;
  }
  p.residual = Matrix::Identity(dim, dim);
  return p;
}

inline GatParams zeros_like(const GatParams& o) {
  GatParams p;
  p.rho = o.rho;
  for (const auto& layer : o.layers) {
    GatLayerParams g;
    g.slope = layer.slope;
    for (const auto& w : layer.weights) g.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const auto& z : layer.attention) g.attention.push_back(Vector::Zero(z.size()));
    p.layers.push_back(std::move(g));
  }
  for (const auto& m : o.relation_transforms) p.relation_transforms.push_back(Matrix::Zero(m.rows(), m.cols()));
  p.residual = Matrix::Zero(o.residual.rows(), o.residual.cols());
  return p;
}

// ---------------------------------------------------------------------------
// Single-node building blocks.

template <typename A, typename B>
RowVector neighbor_mix(const A& entity, const B& relation, double rho) {
  require_same_size(entity, relation, "neighbor_mix");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0,1]");
  return rho * RowVector(entity) + (1.0 - rho) * RowVector(relation);
}

/// Softmax-normalized attention of `target` over the rows of `neighbors`.
/// An empty neighbor set is the caller's degenerate case and throws.
inline Vector attention_weights(const Eigen::Ref<const RowVector>& target, const Matrix& neighbors,
                                const GatLayerParams& layer, std::size_t head) {
  if (neighbors.rows() == 0) throw ShapeError("attention over an empty neighborhood");
  const Matrix& w = layer.weights.at(head);
  if (target.size() != w.rows() || neighbors.cols() != w.rows()) throw ShapeError("attention input dimension mismatch");
  const Eigen::Index d = w.cols();
  const Vector& z = layer.attention.at(head);
  const double target_term = (target * w).dot(z.head(d));
  const Vector neighbor_terms = (neighbors * w) * z.tail(d);
  Vector logits(neighbors.rows());
  for (Eigen::Index j = 0; j < logits.size(); ++j) logits[j] = leaky_relu(target_term + neighbor_terms[j], layer.slope);
  softmax_inplace(logits);
  return logits;
}

/// sigma(sum_j weights_j * (neighbor_j W)), sigma = LeakyReLU or identity.
inline RowVector aggregate(const Vector& weights, const Matrix& neighbors, const GatLayerParams& layer,
                           std::size_t head, bool activation) {
  if (weights.size() != neighbors.rows()) throw ShapeError("aggregate: weight count does not match neighbor count");
  const Matrix& w = layer.weights.at(head);
  if (neighbors.cols() != w.rows()) throw ShapeError("aggregate: neighbor dimension mismatch");
  RowVector out = (weights.transpose() * neighbors) * w;
  if (activation) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = leaky_relu(out[i], layer.slope);
  }
  return out;
}

enum class HeadMode { concat, average };

inline RowVector multi_head(const std::vector<RowVector>& heads, HeadMode mode) {
  if (heads.empty()) throw ShapeError("multi_head: no heads");
  const Eigen::Index d = heads.front().size();
  for (const auto& h : heads) {
    if (h.size() != d) throw ShapeError("multi_head: heads have inconsistent dimensions");
  }
  if (mode == HeadMode::average) {
    RowVector out = RowVector::Zero(d);
    for (const auto& h : heads) out += h;
    return out / static_cast<double>(heads.size());
  }
  RowVector out(d * static_cast<Eigen::Index>(heads.size()));
  for (std::size_t k = 0; k < heads.size(); ++k) out.segment(static_cast<Eigen::Index>(k) * d, d) = heads[k];
  return out;
}

// ---------------------------------------------------------------------------
// Whole-graph encoding.

/// Incident edges grouped by target entity (CSR), in neighborhood() order.
struct EdgeIndex {
  std::vector<std::size_t> offsets;  // num_entities + 1
  std::vector<std::uint32_t> source;
  std::vector<std::uint32_t> relation;
  std::vector<double> sign;  // +1 for incoming edges, -1 for outgoing

  std::size_t num_edges() const noexcept { return source.size(); }
};

inline EdgeIndex build_edge_index(const KnowledgeGraph& kg, bool include_inverse) {
  EdgeIndex idx;
  idx.offsets.reserve(kg.num_entities() + 1);
  idx.offsets.push_back(0);
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    for (const Neighbor& n : neighborhood(kg, EntityId(e), include_inverse)) {
      idx.source.push_back(n.entity.value);
      idx.relation.push_back(n.relation.value);
      idx.sign.push_back(n.direction == Direction::in ? 1.0 : -1.0);
    }
    idx.offsets.push_back(idx.source.size());
  }
  return idx;
}

struct GatOutput {
  Matrix entities;   // E' = E W^E + E^f
  Matrix relations;  // R'
  std::vector<std::vector<Vector>> attention;  // [layer][head] per-edge weights
};

struct GatLayerCache {
  Matrix entities_in;
  Matrix relations_in;
  std::vector<Matrix> proj_entities;   // per head, n x T'
  std::vector<Matrix> proj_relations;  // per head, m x T'
  std::vector<Matrix> edge_values;     // per head, edges x T'
  std::vector<Vector> pre;             // per head, per edge
  std::vector<Vector> alpha;           // per head, per edge
  std::vector<Matrix> aggregated;      // per head, n x T' before activation
};

struct GatForward {
  std::vector<GatLayerCache> layers;
  GatOutput output;
};

inline GatForward encode_forward(const EdgeIndex& edges, const Matrix& entities, const Matrix& relations,
                                 const GatParams& params, KinkMonitor* kinks = nullptr) {
  params.validate(entities.cols());
  if (relations.cols() != entities.cols()) throw ShapeError("entity and relation tables differ in dimension");
  if (edges.offsets.size() != static_cast<std::size_t>(entities.rows()) + 1) {
    throw ShapeError("edge index does not match the entity table");
  }
  const double rho = params.rho;
  const bool mix_relations = rho < 1.0;
  const Eigen::Index n = entities.rows();

  GatForward fwd;
  Matrix x = entities;
  Matrix rel = relations;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const GatLayerParams& layer = params.layers[l];
    const bool last = l + 1 == params.layers.size();
    const Eigen::Index d = layer.head_dim();
    const std::size_t heads = layer.heads();
    GatLayerCache cache;
    cache.entities_in = x;
    cache.relations_in = rel;
    Matrix next = Matrix::Zero(n, params.layer_out_dim(l));
    for (std::size_t k = 0; k < heads; ++k) {
      const Matrix p = x * layer.weights[k];
      const Matrix q = rel * layer.weights[k];
      const Vector& z = layer.attention[k];
      const Vector target_terms = p * z.head(d);
      Matrix u(static_cast<Eigen::Index>(edges.num_edges()), d);
      Vector pre(u.rows());
      Vector alpha(u.rows());
      Matrix agg = Matrix::Zero(n, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto begin = static_cast<Eigen::Index>(edges.offsets[i]);
        const auto end = static_cast<Eigen::Index>(edges.offsets[i + 1]);
        if (begin == end) continue;
        for (Eigen::Index e = begin; e < end; ++e) {
          if (mix_relations) {
            u.row(e) = rho * p.row(edges.source[e]) + (edges.sign[e] * (1.0 - rho)) * q.row(edges.relation[e]);
          } else {
            u.row(e) = p.row(edges.source[e]);
          }
          pre[e] = target_terms[i] + u.row(e).dot(z.tail(d));
          observe(kinks, pre[e]);
          alpha[e] = leaky_relu(pre[e], layer.slope);
        }
        softmax_inplace(alpha.segment(begin, end - begin));
        for (Eigen::Index e = begin; e < end; ++e) agg.row(i) += alpha[e] * u.row(e);
      }
      if (last) {
        next += agg / static_cast<double>(heads);
      } else {
        auto block = next.middleCols(static_cast<Eigen::Index>(k) * d, d);
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index c = 0; c < d; ++c) {
            observe(kinks, agg(i, c));
            block(i, c) = leaky_relu(agg(i, c), layer.slope);
          }
        }
      }
      cache.proj_entities.push_back(p);
      cache.proj_relations.push_back(q);
      cache.edge_values.push_back(std::move(u));
      cache.pre.push_back(std::move(pre));
      cache.alpha.push_back(std::move(alpha));
      cache.aggregated.push_back(std::move(agg));
    }
    fwd.output.attention.push_back(cache.alpha);
    fwd.layers.push_back(std::move(cache));
    x = std::move(next);
    rel = rel * params.relation_transforms[l];
  }
  fwd.output.entities = entities * params.residual + x;
  fwd.output.relations = std::move(rel);
  return fwd;
}

/// Backpropagates d(E') and d(R') into parameter gradients and the input
/// tables' gradients. Gradients accumulate into the outputs.
inline void encode_backward(const GatForward& fwd, const EdgeIndex& edges, const Matrix& entities,
                            const GatParams& params, const Matrix& d_entities_out, const Matrix& d_relations_out,
                            GatParams& grad, Matrix& d_entities, Matrix& d_relations) {
  const double rho = params.rho;
  const bool mix_relations = rho < 1.0;
  const Eigen::Index n = entities.rows();

  d_entities.noalias() += d_entities_out * params.residual.transpose();
  grad.residual.noalias() += entities.transpose() * d_entities_out;
  Matrix d_x = d_entities_out;
  Matrix d_rel = d_relations_out;

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const GatLayerParams& layer = params.layers[l];
    const GatLayerCache& cache = fwd.layers[l];
    GatLayerParams& g = grad.layers[l];
    const bool last = l + 1 == params.layers.size();
    const Eigen::Index d = layer.head_dim();
    const std::size_t heads = layer.heads();

    Matrix d_rel_in = d_rel * params.relation_transforms[l].transpose();
    grad.relation_transforms[l].noalias() += cache.relations_in.transpose() * d_rel;
    Matrix d_x_in = Matrix::Zero(cache.entities_in.rows(), cache.entities_in.cols());

    for (std::size_t k = 0; k < heads; ++k) {
      const Matrix& p = cache.proj_entities[k];
      const Matrix& u = cache.edge_values[k];
      const Vector& pre = cache.pre[k];
      const Vector& alpha = cache.alpha[k];
      const Vector& z = layer.attention[k];
      Matrix d_agg;
      if (last) {
        d_agg = d_x / static_cast<double>(heads);
      } else {
        d_agg = d_x.middleCols(static_cast<Eigen::Index>(k) * d, d);
        const Matrix& agg = cache.aggregated[k];
        for (Eigen::Index i = 0; i < d_agg.rows(); ++i) {
          for (Eigen::Index c = 0; c < d; ++c) d_agg(i, c) *= leaky_relu_grad(agg(i, c), layer.slope);
        }
      }
      Matrix d_p = Matrix::Zero(n, d);
      Matrix d_q = Matrix::Zero(cache.relations_in.rows(), d);
      Vector d_target = Vector::Zero(n);
      RowVector d_z_neighbor = RowVector::Zero(d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto begin = static_cast<Eigen::Index>(edges.offsets[i]);
        const auto end = static_cast<Eigen::Index>(edges.offsets[i + 1]);
        if (begin == end) continue;
        const auto d_out = d_agg.row(i);
        double weighted = 0.0;
        for (Eigen::Index e = begin; e < end; ++e) weighted += alpha[e] * u.row(e).dot(d_out);
        for (Eigen::Index e = begin; e < end; ++e) {
          const double d_alpha = u.row(e).dot(d_out);
          const double d_pre = alpha[e] * (d_alpha - weighted) * leaky_relu_grad(pre[e], layer.slope);
          d_target[i] += d_pre;
          d_z_neighbor += d_pre * u.row(e);
          const RowVector d_u = alpha[e] * d_out + d_pre * z.tail(d).transpose();
          if (mix_relations) {
            d_p.row(edges.source[e]) += rho * d_u;
            d_q.row(edges.relation[e]) += (edges.sign[e] * (1.0 - rho)) * d_u;
          } else {
            d_p.row(edges.source[e]) += d_u;
          }
        }
      }
      g.attention[k].head(d).noalias() += p.transpose() * d_target;
      g.attention[k].tail(d) += d_z_neighbor.transpose();
      d_p.noalias() += d_target * z.head(d).transpose();

      g.weights[k].noalias() += cache.entities_in.transpose() * d_p;
      d_x_in.noalias() += d_p * layer.weights[k].transpose();
      if (mix_relations) {
        g.weights[k].noalias() += cache.relations_in.transpose() * d_q;
        d_rel_in.noalias() += d_q * layer.weights[k].transpose();
      }
    }
    d_x = std::move(d_x_in);
    d_rel = std::move(d_rel_in);
  }
  d_entities += d_x;
  d_relations += d_rel;
}

/// Encodes every entity and relation. Entities with no incident edges get a
/// zero attention output, so their row is the residual term alone.
inline GatOutput encode_graph(const KnowledgeGraph& kg, const Matrix& entities, const Matrix& relations,
                              const GatParams& params, bool include_inverse = true) {
  if (static_cast<std::size_t>(entities.rows()) != kg.num_entities() ||
      static_cast<std::size_t>(relations.rows()) != kg.num_relations()) {
    throw ShapeError("embedding tables do not match the graph vocabularies");
  }
  return encode_forward(build_edge_index(kg, include_inverse), entities, relations, params).output;
}

}  // namespace ndrl

#pragma once

// Entity description aggregation: per-entity sentence vectors are projected
// into entity space and combined by attention against the entity's
// structural representation (or by a plain mean).

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ndrl/errors.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/linalg.hpp"
#include "ndrl/text_io.hpp"

namespace ndrl {

/// Frozen sentence vectors per entity. Absent entities hold a 0-row matrix.
class DescriptionBank {
public:
  DescriptionBank() = default;
  DescriptionBank(std::size_t num_entities, std::size_t dim) : dim_(dim), sentences_(num_entities) {
    for (auto& m : sentences_) m.resize(0, static_cast<Eigen::Index>(dim));
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_entities() const noexcept { return sentences_.size(); }

  bool has(EntityId e) const { return e.index() < sentences_.size() && sentences_[e.index()].rows() > 0; }

  const Matrix& sentences(EntityId e) const { return sentences_.at(e.index()); }

  void set(EntityId e, Matrix sentences) {
    if (e.index() >= sentences_.size()) throw LookupError("description for unknown entity");
    if (static_cast<std::size_t>(sentences.cols()) != dim_) {
      throw ShapeError("sentence vectors must have dimension " + std::to_string(dim_));
    }
    sentences_[e.index()] = std::move(sentences);
  }

  std::size_t covered() const {
    std::size_t n = 0;
    for (const auto& m : sentences_) n += m.rows() > 0;
    return n;
  }

private:
  std::size_t dim_ = 0;
  std::vector<Matrix> sentences_;
};

struct SentenceFileStats {
  std::size_t lines = 0;
  std::size_t unknown_entities = 0;
};

/// Reads `#dim D` followed by `label<TAB>index<TAB>v1,...,vD` lines.
/// Labels not in `kg` are skipped and counted.
inline DescriptionBank read_sentence_vectors(std::istream& in, const KnowledgeGraph& kg,
                                             SentenceFileStats* stats = nullptr) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> dim;
  while (!dim && std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#dim ", 0) != 0) throw ParseError("expected '#dim <D>' header", lineno);
    dim = parse_uint(std::string_view(line).substr(5), lineno);
    if (*dim == 0) throw ParseError("dimension must be positive", lineno);
  }
  if (!dim) throw ParseError("missing '#dim <D>' header");

  std::vector<std::vector<std::vector<double>>> rows(kg.num_entities());
  std::unordered_map<std::string, std::size_t> unknown_next;
  SentenceFileStats local;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 3) throw ParseError("expected label<TAB>index<TAB>vector", lineno);
    const std::size_t index = parse_uint(fields[1], lineno);
    auto values = parse_csv_row(fields[2], lineno);
    if (values.size() != *dim) {
      throw ParseError("vector has " + std::to_string(values.size()) + " values, header says " +
                           std::to_string(*dim),
                       lineno);
    }
    ++local.lines;
    const auto entity = kg.entity(fields[0]);
    std::size_t expected = 0;
    if (entity) {
      expected = rows[entity->index()].size();
    } else {
      auto& next = unknown_next[std::string(fields[0])];
      expected = next++;
      if (expected == 0) ++local.unknown_entities;
    }
    if (index != expected) {
      throw ParseError("sentence index " + std::to_string(index) + " for \"" + std::string(fields[0]) +
                           "\" is not contiguous (expected " + std::to_string(expected) + ")",
                       lineno);
    }
    if (entity) rows[entity->index()].push_back(std::move(values));
  }

  DescriptionBank bank(kg.num_entities(), *dim);
  for (std::size_t e = 0; e < rows.size(); ++e) {
    if (rows[e].empty()) continue;
    Matrix m(static_cast<Eigen::Index>(rows[e].size()), static_cast<Eigen::Index>(*dim));
    for (std::size_t i = 0; i < rows[e].size(); ++i) {
      for (std::size_t j = 0; j < *dim; ++j) m(i, j) = rows[e][i][j];
    }
    bank.set(EntityId(e), std::move(m));
  }
  if (stats) *stats = local;
  return bank;
}

inline DescriptionBank load_sentence_vectors(const std::string& path, const KnowledgeGraph& kg,
                                             SentenceFileStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sentence-vector file: " + path);
  return read_sentence_vectors(in, kg, stats);
}

inline void write_sentence_vectors(std::ostream& out, const KnowledgeGraph& kg, const DescriptionBank& bank) {
  out << "#dim " << bank.dim() << '\n';
  for (std::size_t e = 0; e < bank.num_entities(); ++e) {
    const Matrix& s = bank.sentences(EntityId(e));
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      out << kg.entities().label(e) << '\t' << i << '\t';
      write_csv_row(out, s.row(i));
      out << '\n';
    }
  }
}

inline void save_sentence_vectors(const std::string& path, const KnowledgeGraph& kg, const DescriptionBank& bank) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sentence-vector file: " + path);
  write_sentence_vectors(out, kg, bank);
}

// ---------------------------------------------------------------------------

enum class DescMode { attention, mean };

/// Independent of the graph-attention weights. `attention_vector` splits
/// into a target half and a sentence half, each of length entity_dim.
struct DescAttentionParams {
  Matrix projection;      // D_s x T^f
  Matrix attention;       // T^f x T^f
  Vector attention_vector;  // 2 T^f
  double slope = 0.2;

  static DescAttentionParams xavier(std::size_t source_dim, std::size_t entity_dim, Rng& rng) {
    DescAttentionParams p;
    const auto s = static_cast<Eigen::Index>(source_dim);
    const auto t = static_cast<Eigen::Index>(entity_dim);
    p.projection = xavier_matrix(s, t, rng);
    p.attention = xavier_matrix(t, t, rng);
    p.attention_vector = xavier_vector(2 * t, rng);
    return p;
  }

  static DescAttentionParams zeros_like(const DescAttentionParams& o) {
    DescAttentionParams p;
    p.projection = Matrix::Zero(o.projection.rows(), o.projection.cols());
    p.attention = Matrix::Zero(o.attention.rows(), o.attention.cols());
    p.attention_vector = Vector::Zero(o.attention_vector.size());
    p.slope = o.slope;
    return p;
  }

  Eigen::Index entity_dim() const { return projection.cols(); }

  void validate(Eigen::Index source_dim, Eigen::Index entity_dim_expected) const {
    if (projection.rows() != source_dim || projection.cols() != entity_dim_expected ||
        attention.rows() != entity_dim_expected || attention.cols() != entity_dim_expected ||
        attention_vector.size() != 2 * entity_dim_expected) {
      throw ShapeError("description attention parameters do not match dimensions " +
                       std::to_string(source_dim) + " -> " + std::to_string(entity_dim_expected));
    }
  }
};

struct DescAggregate {
  RowVector value;
  Vector weights;
};

/// Attention-weighted sum of projected sentences; weights come from the
/// single-layer LeakyReLU scorer applied to [h W || s_j W].
/// Returns nullopt for an empty sentence list.
inline std::optional<DescAggregate> aggregate_description(const Eigen::Ref<const RowVector>& h_struct,
                                                          const Matrix& sentences,
                                                          const DescAttentionParams& params,
                                                          KinkMonitor* kinks = nullptr) {
  if (sentences.rows() == 0) return std::nullopt;
  const Eigen::Index t = params.entity_dim();
  if (sentences.cols() != params.projection.rows()) throw ShapeError("sentence dimension mismatch");
  if (h_struct.size() != t) throw ShapeError("structural vector dimension mismatch");
  const Matrix projected = sentences * params.projection;
  const double target_term = (h_struct * params.attention).dot(params.attention_vector.head(t));
  const Vector sentence_terms = (projected * params.attention) * params.attention_vector.tail(t);
  Vector logits(projected.rows());
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    const double pre = target_term + sentence_terms[j];
    observe(kinks, pre);
    logits[j] = leaky_relu(pre, params.slope);
  }
  softmax_inplace(logits);
  DescAggregate out{logits.transpose() * projected, logits};
  return out;
}

/// Unweighted mean of projected sentences.
inline std::optional<RowVector> mean_description(const Matrix& sentences, const DescAttentionParams& params) {
  if (sentences.rows() == 0) return std::nullopt;
  if (sentences.cols() != params.projection.rows()) throw ShapeError("sentence dimension mismatch");
  const Matrix projected = sentences * params.projection;
  return RowVector(projected.colwise().mean());
}

// ---------------------------------------------------------------------------
// Batched forward/backward over every described entity.

struct DescriptionForward {
  DescMode mode = DescMode::attention;
  Matrix values;               // n x T^f, zero rows for absent entities
  std::vector<bool> present;
  std::vector<Matrix> projected;  // per entity
  std::vector<Vector> pre;        // attention pre-activations
  std::vector<Vector> weights;    // attention weights (empty in mean mode)
  std::vector<RowVector> target;  // h W per entity
};

inline DescriptionForward describe_all(const Matrix& entity_repr, const DescriptionBank& bank,
                                       const DescAttentionParams& params, DescMode mode,
                                       KinkMonitor* kinks = nullptr) {
  const auto n = static_cast<std::size_t>(entity_repr.rows());
  const Eigen::Index t = params.entity_dim();
  if (entity_repr.cols() != t) throw ShapeError("entity representation does not match description dimension");
  if (bank.num_entities() != n) throw ShapeError("description bank does not cover the entity vocabulary");
  if (bank.dim() != static_cast<std::size_t>(params.projection.rows()) && bank.covered() > 0) {
    throw ShapeError("description bank dimension does not match projection");
  }

  DescriptionForward fwd;
  fwd.mode = mode;
  fwd.values = Matrix::Zero(entity_repr.rows(), t);
  fwd.present.assign(n, false);
  fwd.projected.resize(n);
  fwd.pre.resize(n);
  fwd.weights.resize(n);
  fwd.target.resize(n);
  const auto z_target = params.attention_vector.head(t);
  const auto z_sentence = params.attention_vector.tail(t);
  for (std::size_t e = 0; e < n; ++e) {
    const Matrix& s = bank.sentences(EntityId(e));
    if (s.rows() == 0) continue;
    fwd.present[e] = true;
    fwd.projected[e] = s * params.projection;
    const Matrix& proj = fwd.projected[e];
    if (mode == DescMode::mean) {
      fwd.values.row(e) = proj.colwise().mean();
      continue;
    }
    fwd.target[e] = entity_repr.row(e) * params.attention;
    const double target_term = fwd.target[e].dot(z_target);
    const Vector sentence_terms = (proj * params.attention) * z_sentence;
    Vector& pre = fwd.pre[e];
    pre = sentence_terms.array() + target_term;
    Vector w(pre.size());
    for (Eigen::Index j = 0; j < pre.size(); ++j) {
      observe(kinks, pre[j]);
      w[j] = leaky_relu(pre[j], params.slope);
    }
    softmax_inplace(w);
    fwd.values.row(e) = w.transpose() * proj;
    fwd.weights[e] = std::move(w);
  }
  return fwd;
}

/// Accumulates parameter gradients into `grad` and structural-vector
/// gradients into `d_entity_repr`, given `d_values` (n x T^f).
inline void describe_all_backward(const DescriptionForward& fwd, const Matrix& d_values, const Matrix& entity_repr,
                                  const DescriptionBank& bank, const DescAttentionParams& params,
                                  DescAttentionParams& grad, Matrix& d_entity_repr) {
  const Eigen::Index t = params.entity_dim();
  const auto z_target = params.attention_vector.head(t);
  const auto z_sentence = params.attention_vector.tail(t);
  for (std::size_t e = 0; e < fwd.present.size(); ++e) {
    if (!fwd.present[e]) continue;
    const RowVector d_out = d_values.row(e);
    if (d_out.isZero(0.0)) continue;
    const Matrix& s = bank.sentences(EntityId(e));
    const Matrix& proj = fwd.projected[e];
    const Eigen::Index count = proj.rows();
    Matrix d_proj(count, t);
    if (fwd.mode == DescMode::mean) {
      d_proj.rowwise() = d_out / static_cast<double>(count);
      grad.projection.noalias() += s.transpose() * d_proj;
      continue;
    }
    const Vector& w = fwd.weights[e];
    const Vector& pre = fwd.pre[e];
    for (Eigen::Index j = 0; j < count; ++j) d_proj.row(j) = w[j] * d_out;
    const Vector d_w = proj * d_out.transpose();
    const double mean_dw = w.dot(d_w);
    Vector d_pre(count);
    for (Eigen::Index j = 0; j < count; ++j) {
      d_pre[j] = w[j] * (d_w[j] - mean_dw) * leaky_relu_grad(pre[j], params.slope);
    }
    const double d_target_term = d_pre.sum();
    // sentence half: b_j = (proj_j W) . z_s
    const Matrix q = proj * params.attention;
    grad.attention_vector.tail(t).noalias() += q.transpose() * d_pre;
    const Matrix d_q = d_pre * z_sentence.transpose();
    grad.attention.noalias() += proj.transpose() * d_q;
    d_proj.noalias() += d_q * params.attention.transpose();
    // target half: c = (h W) . z_t
    grad.attention_vector.head(t).noalias() += d_target_term * fwd.target[e].transpose();
    const RowVector d_target = d_target_term * z_target.transpose();
    grad.attention.noalias() += entity_repr.row(e).transpose() * d_target;
    d_entity_repr.row(e).noalias() += d_target * params.attention.transpose();

    grad.projection.noalias() += s.transpose() * d_proj;
  }
}

}  // namespace ndrl

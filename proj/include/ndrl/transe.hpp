#pragma once

// Translation-embedding pre-training used to seed the structural encoder.

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "ndrl/errors.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/linalg.hpp"
#include "ndrl/negative_sampling.hpp"
#include "ndrl/text_io.hpp"

namespace ndrl {

using RowRef = Eigen::Ref<const RowVector>;

struct EmbeddingTable {
  Matrix entities;   // |E| x d
  Matrix relations;  // |R| x d

  Eigen::Index dim() const noexcept { return entities.cols(); }

  void validate(const KnowledgeGraph& kg) const {
    if (static_cast<std::size_t>(entities.rows()) != kg.num_entities() ||
        static_cast<std::size_t>(relations.rows()) != kg.num_relations()) {
      throw ShapeError("embedding table rows do not match the graph vocabularies");
    }
    if (entities.cols() <= 0 || relations.cols() != entities.cols()) {
      throw ShapeError("embedding tables must share a positive dimension");
    }
  }
};

struct TransEConfig {
  double margin = 1.0;
  double learning_rate = 0.01;
  int epochs = 500;
  std::uint64_t seed = 42;
  std::size_t negatives = 1;

  void validate() const {
    if (!(margin > 0)) throw ConfigError("pre-training margin must be positive");
    if (!(learning_rate > 0)) throw ConfigError("pre-training learning rate must be positive");
    if (epochs < 0) throw ConfigError("pre-training epochs must be non-negative");
    if (negatives == 0) throw ConfigError("pre-training needs at least one negative per positive");
  }
};

/// ||h + r - t||_2
inline double transe_energy(const RowRef& h, const RowRef& r, const RowRef& t) {
  require_same_size(h, r, "transe_energy");
  require_same_size(h, t, "transe_energy");
  return (h + r - t).norm();
}

struct TransEResult {
  EmbeddingTable table;
  std::vector<double> losses;  // one per epoch
};

inline EmbeddingTable xavier_embeddings(std::size_t num_entities, std::size_t num_relations, Eigen::Index dim,
                                        Rng& rng) {
  EmbeddingTable t;
  t.entities = xavier_matrix(static_cast<Eigen::Index>(num_entities), dim, rng);
  t.relations = xavier_matrix(static_cast<Eigen::Index>(num_relations), dim, rng);
  return t;
}

/// Per-triple SGD on the margin loss with the translation energy. Entity
/// rows are projected back to the unit sphere after every epoch.
inline TransEResult pretrain_embeddings(const KnowledgeGraph& kg, const TransEConfig& cfg, Eigen::Index dim) {
  cfg.validate();
  if (kg.empty()) throw EmptyGraphError("cannot pre-train on an empty graph");
  if (dim <= 0) throw ConfigError("embedding dimension must be positive");

  Rng rng(cfg.seed);
  TransEResult result;
  result.table = xavier_embeddings(kg.num_entities(), kg.num_relations(), dim, rng);
  Matrix& ent = result.table.entities;
  Matrix& rel = result.table.relations;

  std::vector<std::size_t> order(kg.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double lr = cfg.learning_rate;
  RowVector g_pos(dim);
  RowVector g_neg(dim);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    for (std::size_t idx : order) {
      const Triple& pos = kg.triples()[idx];
      for (const NegativeSample& ns : sample_negatives(kg, pos, cfg.negatives, rng)) {
        const Triple& neg = ns.triple;
        g_pos = ent.row(pos.head.index()) + rel.row(pos.relation.index()) - ent.row(pos.tail.index());
        g_neg = ent.row(neg.head.index()) + rel.row(neg.relation.index()) - ent.row(neg.tail.index());
        const double d_pos = g_pos.norm();
        const double d_neg = g_neg.norm();
        const double hinge = cfg.margin + d_pos - d_neg;
        if (hinge <= 0.0) continue;
        loss += hinge;
        if (d_pos > 0.0) g_pos /= d_pos; else g_pos.setZero();
        if (d_neg > 0.0) g_neg /= d_neg; else g_neg.setZero();
        ent.row(pos.head.index()) -= lr * g_pos;
        rel.row(pos.relation.index()) -= lr * g_pos;
        ent.row(pos.tail.index()) += lr * g_pos;
        ent.row(neg.head.index()) += lr * g_neg;
        rel.row(neg.relation.index()) += lr * g_neg;
        ent.row(neg.tail.index()) -= lr * g_neg;
      }
    }
    for (Eigen::Index i = 0; i < ent.rows(); ++i) {
      const double norm = ent.row(i).norm();
      if (norm > 0.0) ent.row(i) /= norm;
    }
    result.losses.push_back(loss);
  }
  return result;
}

/// Scores a triple by the translation energy of a plain embedding table.
struct TransEScorer {
  const EmbeddingTable* table;
  double operator()(const Triple& t) const {
    return transe_energy(table->entities.row(t.head.index()), table->relations.row(t.relation.index()),
                         table->entities.row(t.tail.index()));
  }
};

// ---------------------------------------------------------------------------
// Embedding block of the checkpoint format:
//   #embeddings entities=<n> relations=<m> dim=<d>
// followed by n + m comma-separated rows.

inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << "#embeddings entities=" << table.entities.rows() << " relations=" << table.relations.rows()
      << " dim=" << table.dim() << '\n';
  for (Eigen::Index i = 0; i < table.entities.rows(); ++i) {
    write_csv_row(out, table.entities.row(i));
    out << '\n';
  }
  for (Eigen::Index i = 0; i < table.relations.rows(); ++i) {
    write_csv_row(out, table.relations.row(i));
    out << '\n';
  }
}

/// Reads `rows` csv lines of width `cols` into a matrix.
inline Matrix read_matrix_rows(std::istream& in, Eigen::Index rows, Eigen::Index cols, std::size_t& lineno) {
  Matrix m(rows, cols);
  std::string line;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw ParseError("unexpected end of matrix data", lineno + 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto values = parse_csv_row(line, lineno);
    if (static_cast<Eigen::Index>(values.size()) != cols) {
      throw ParseError("row has " + std::to_string(values.size()) + " values, expected " + std::to_string(cols),
                       lineno);
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[j];
  }
  return m;
}

/// Parses `key=value` tokens after a `#tag` word.
inline std::vector<std::pair<std::string, std::string>> parse_header_fields(std::string_view line) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = line.find(' ');
  while (pos != std::string_view::npos) {
    const std::size_t start = pos + 1;
    pos = line.find(' ', start);
    const auto token = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace_back(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
  }
  return out;
}

inline EmbeddingTable read_embeddings(std::istream& in, std::size_t& lineno) {
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  if (line.rfind("#embeddings ", 0) != 0) throw ParseError("expected '#embeddings' header", lineno);
  long long n = -1, m = -1, d = -1;
  for (const auto& [k, v] : parse_header_fields(line)) {
    const auto value = static_cast<long long>(parse_uint(v, lineno));
    if (k == "entities") n = value;
    else if (k == "relations") m = value;
    else if (k == "dim") d = value;
  }
  if (n < 0 || m < 0 || d <= 0) throw ParseError("incomplete '#embeddings' header", lineno);
  EmbeddingTable t;
  t.entities = read_matrix_rows(in, n, d, lineno);
  t.relations = read_matrix_rows(in, m, d, lineno);
  return t;
}

}  // namespace ndrl

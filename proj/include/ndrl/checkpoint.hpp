#pragma once

// Text checkpoints. An embeddings-only file is just the `#embeddings` block;
// a model checkpoint appends named matrices, a config snapshot, the epoch
// counter and the loss curve:
//
//   #embeddings entities=<n> relations=<m> dim=<d>
//   <n + m rows>
//   #matrix name=<name> rows=<r> cols=<c>
//   <r rows>
//   #config <key>=<value>
//   #epoch <k>
//   #loss <v1>,<v2>,...

#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "ndrl/config.hpp"
#include "ndrl/errors.hpp"
#include "ndrl/text_io.hpp"
#include "ndrl/trainer.hpp"
#include "ndrl/transe.hpp"

namespace ndrl {

namespace detail {

template <typename M>
void write_named_matrix(std::ostream& out, const std::string& name, const M& m) {
  out << "#matrix name=" << name << " rows=" << m.rows() << " cols=" << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    write_csv_row(out, m.row(i));
    out << '\n';
  }
}

inline std::string layer_name(std::size_t l, std::size_t k, const char* what) {
  return "gat.layer" + std::to_string(l) + ".head" + std::to_string(k) + "." + what;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const ModelParams& p = ckpt.params;
  write_embeddings(out, EmbeddingTable{p.entities, p.relations});
  for (std::size_t l = 0; l < p.gat.layers.size(); ++l) {
    const auto& layer = p.gat.layers[l];
    for (std::size_t k = 0; k < layer.heads(); ++k) {
      detail::write_named_matrix(out, detail::layer_name(l, k, "W"), layer.weights[k]);
      detail::write_named_matrix(out, detail::layer_name(l, k, "z"), layer.attention[k].transpose());
    }
    detail::write_named_matrix(out, "gat.relation" + std::to_string(l), p.gat.relation_transforms[l]);
  }
  detail::write_named_matrix(out, "gat.residual", p.gat.residual);
  detail::write_named_matrix(out, "desc.projection", p.desc.projection);
  detail::write_named_matrix(out, "desc.attention", p.desc.attention);
  detail::write_named_matrix(out, "desc.z", p.desc.attention_vector.transpose());

  RunConfig rc;
  rc.set_train_config(ckpt.config);
  std::istringstream dumped(rc.dump());
  std::string line;
  while (std::getline(dumped, line)) {
    const auto key = line.substr(0, line.find('='));
    if (is_snapshot_key(key)) out << "#config " << line << '\n';
  }
  out << "#epoch " << ckpt.epoch << '\n';
  out << "#loss ";
  for (std::size_t i = 0; i < ckpt.losses.size(); ++i) {
    if (i) out << ',';
    out << format_double(ckpt.losses[i]);
  }
  out << '\n';
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  write_checkpoint(out, ckpt);
}

inline void save_embeddings(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embeddings: " + path);
  write_embeddings(out, table);
}

struct CheckpointFile {
  EmbeddingTable embeddings;
  std::optional<Checkpoint> model;  // absent for embeddings-only files
};

inline CheckpointFile read_checkpoint(std::istream& in) {
  std::size_t lineno = 0;
  CheckpointFile file;
  file.embeddings = read_embeddings(in, lineno);

  std::map<std::string, Matrix> matrices;
  RunConfig rc;
  bool saw_config = false;
  int epoch = 0;
  std::vector<double> losses;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#matrix ", 0) == 0) {
      std::string name;
      long long rows = -1, cols = -1;
      for (const auto& [k, v] : parse_header_fields(line)) {
        if (k == "name") name = v;
        else if (k == "rows") rows = static_cast<long long>(parse_uint(v, lineno));
        else if (k == "cols") cols = static_cast<long long>(parse_uint(v, lineno));
      }
      if (name.empty() || rows < 0 || cols < 0) throw ParseError("incomplete '#matrix' header", lineno);
      matrices[name] = read_matrix_rows(in, rows, cols, lineno);
    } else if (line.rfind("#config ", 0) == 0) {
      const std::string kv = line.substr(8);
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ParseError("malformed '#config' line", lineno);
      try {
        rc.set(kv.substr(0, eq), kv.substr(eq + 1));
      } catch (const ConfigError& e) {
        throw ParseError(e.what(), lineno);
      }
      saw_config = true;
    } else if (line.rfind("#epoch ", 0) == 0) {
      epoch = static_cast<int>(parse_uint(std::string_view(line).substr(7), lineno));
    } else if (line.rfind("#loss", 0) == 0) {
      const std::string_view rest = std::string_view(line).substr(5);
      if (!rest.empty() && rest != " ") losses = parse_csv_row(rest.substr(1), lineno);
    } else {
      throw ParseError("unexpected checkpoint line", lineno);
    }
  }
  if (matrices.empty()) return file;
  if (!saw_config) throw ParseError("model checkpoint has no config snapshot");

  auto take = [&](const std::string& name) -> Matrix {
    auto it = matrices.find(name);
    if (it == matrices.end()) throw ParseError("checkpoint is missing matrix '" + name + "'");
    return it->second;
  };
  auto take_vector = [&](const std::string& name) -> Vector {
    const Matrix m = take(name);
    return Eigen::Map<const Vector>(m.data(), m.size());
  };

  Checkpoint ckpt;
  ckpt.config = rc.train_config();
  ckpt.epoch = epoch;
  ckpt.losses = std::move(losses);
  ModelParams& p = ckpt.params;
  p.entities = file.embeddings.entities;
  p.relations = file.embeddings.relations;
  p.gat.rho = ckpt.config.model.effective_rho();
  for (std::size_t l = 0; l < ckpt.config.model.layers; ++l) {
    GatLayerParams layer;
    layer.slope = ckpt.config.model.slope;
    for (std::size_t k = 0; k < ckpt.config.model.heads; ++k) {
      layer.weights.push_back(take(detail::layer_name(l, k, "W")));
      layer.attention.push_back(take_vector(detail::layer_name(l, k, "z")));
    }
    p.gat.layers.push_back(std::move(layer));
    p.gat.relation_transforms.push_back(take("gat.relation" + std::to_string(l)));
  }
  p.gat.residual = take("gat.residual");
  p.desc.projection = take("desc.projection");
  p.desc.attention = take("desc.attention");
  p.desc.attention_vector = take_vector("desc.z");
  p.desc.slope = ckpt.config.model.slope;
  p.gat.validate(p.entities.cols());
  p.desc.validate(p.desc.projection.rows(), p.gat.output_dim());
  file.model = std::move(ckpt);
  return file;
}

inline CheckpointFile load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  return read_checkpoint(in);
}

}  // namespace ndrl

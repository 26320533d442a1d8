#pragma once

#include <unistd.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "ndrl/kg_store.hpp"

namespace ndrl::testing {

/// Builds a graph from tab-separated triple lines.
inline KnowledgeGraph graph_of(const std::string& text) {
  std::istringstream in(text);
  return read_triples(in);
}

inline EntityId ent(const KnowledgeGraph& kg, const std::string& label) { return *kg.entity(label); }
inline RelationId rel(const KnowledgeGraph& kg, const std::string& label) { return *kg.relation(label); }

inline Triple triple(const KnowledgeGraph& kg, const std::string& h, const std::string& r, const std::string& t) {
  return {ent(kg, h), rel(kg, r), ent(kg, t)};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("ndrl_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

}  // namespace ndrl::testing

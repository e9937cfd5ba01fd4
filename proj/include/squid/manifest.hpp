#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace squid {

/// "fnv1a64:<16 hex digits>" over the file's bytes. Throws IoError if unreadable.
std::string file_hash(const std::filesystem::path& path);

struct ArtifactRecord {
  std::string path;
  std::string hash;
  std::string created;  // UTC, ISO-8601
};

/// Records which artifact fills which pipeline role (corpus, sparse-index,
/// vectors, checkpoint, ...) together with a content hash and the effective
/// configuration, so later stages can locate and verify their inputs.
class RunManifest {
 public:
  static RunManifest load(const std::filesystem::path& path);  // missing file -> empty manifest
  void save(const std::filesystem::path& path) const;

  /// Hashes the file now and stores it under `role`.
  void record(const std::string& role, const std::filesystem::path& artifact);
  std::optional<std::filesystem::path> path_of(const std::string& role) const;
  const std::map<std::string, ArtifactRecord>& artifacts() const { return artifacts_; }

  /// Throws ValidationError naming the role if a recorded artifact is missing
  /// or its current hash differs. Roles not in the manifest are skipped.
  void verify(const std::vector<std::string>& roles) const;
  void verify_all() const;

  nlohmann::json& config() { return config_; }
  const nlohmann::json& config() const { return config_; }

 private:
  std::map<std::string, ArtifactRecord> artifacts_;
  nlohmann::json config_ = nlohmann::json::object();
};

}  // namespace squid

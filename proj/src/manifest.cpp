#include "squid/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "squid/common.hpp"

namespace squid {
namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + hex;
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  RunManifest m;
  if (!std::filesystem::exists(path)) return m;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(in);
    for (const auto& [role, rec] : obj.at("artifacts").items()) {
      m.artifacts_[role] = {rec.at("path").get<std::string>(), rec.at("hash").get<std::string>(),
                            rec.value("created", "")};
    }
    if (obj.contains("config")) m.config_ = obj["config"];
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  nlohmann::json arts = nlohmann::json::object();
  for (const auto& [role, rec] : artifacts_) {
    arts[role] = {{"path", rec.path}, {"hash", rec.hash}, {"created", rec.created}};
  }
  const nlohmann::json obj = {{"artifacts", arts}, {"config", config_}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << obj.dump(2) << '\n';
}

void RunManifest::record(const std::string& role, const std::filesystem::path& artifact) {
  artifacts_[role] = {std::filesystem::absolute(artifact).lexically_normal().string(), file_hash(artifact), utc_now()};
}

std::optional<std::filesystem::path> RunManifest::path_of(const std::string& role) const {
  auto it = artifacts_.find(role);
  if (it == artifacts_.end()) return std::nullopt;
  return std::filesystem::path(it->second.path);
}

void RunManifest::verify(const std::vector<std::string>& roles) const {
  for (const auto& role : roles) {
    auto it = artifacts_.find(role);
    if (it == artifacts_.end()) continue;
    if (!std::filesystem::exists(it->second.path)) {
      throw ValidationError("manifest: " + role + " artifact " + it->second.path + " is missing");
    }
    if (file_hash(it->second.path) != it->second.hash) {
      throw ValidationError("manifest: hash mismatch for " + role + " (" + it->second.path + ")");
    }
  }
}

void RunManifest::verify_all() const {
  std::vector<std::string> roles;
  for (const auto& [role, rec] : artifacts_) roles.push_back(role);
  verify(roles);
}

}  // namespace squid

#include "squid/dense_index.hpp"

#include <cmath>
#include <fstream>

#include "binary_io.hpp"

namespace squid {

namespace {
constexpr std::string_view kMagic = "SQEM";
}

void EmbeddingMatrix::write(std::ostream& out) const {
  detail::LeWriter w(out);
  w.bytes(kMagic);
  w.u32(kFormatVersion);
  w.u64(static_cast<std::uint64_t>(size()));
  w.u32(static_cast<std::uint32_t>(dim()));
  const float* p = rows.data();
  for (Eigen::Index i = 0; i < rows.size(); ++i) w.f32(p[i]);
}

EmbeddingMatrix EmbeddingMatrix::read(std::istream& in) {
  detail::LeReader r(in, "SQEM");
  r.expect_magic(kMagic);
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw ValidationError("SQEM: unsupported format version " + std::to_string(version));
  }
  const auto n = r.u64();
  const auto d = r.u32();
  EmbeddingMatrix m;
  m.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  float* p = m.rows.data();
  for (Eigen::Index i = 0; i < m.rows.size(); ++i) {
    p[i] = r.f32();
    if (!std::isfinite(p[i])) throw ValidationError("SQEM: non-finite entry");
  }
  return m;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  matrix.write(out);
  if (!out) throw IoError("write failed: " + path.string());
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return EmbeddingMatrix::read(in);
}

}  // namespace squid

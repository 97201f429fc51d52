#include "dedup/hash_cache.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>
#include <memory>

namespace dedup {
namespace {

constexpr char kMagic[8] = {'P', 'H', 'C', 'A', 'C', 'H', 'E', '1'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}

  template <typename T>
  void uint(T value) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(value >> (8 * i));
    out_.write(reinterpret_cast<const char*>(buf), sizeof(T));
  }
  void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  explicit Reader(std::ifstream& in) : in_(in) {}

  template <typename T>
  bool uint(T& value) {
    unsigned char buf[sizeof(T)];
    if (!in_.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
    value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(T{buf[i]} << (8 * i));
    return true;
  }
  bool bytes(void* data, std::size_t n) {
    return static_cast<bool>(in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n)));
  }

 private:
  std::ifstream& in_;
};

}  // namespace

std::optional<HashCache> read_hash_cache(const std::filesystem::path& path, Warnings& warnings) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  auto ignore = [&](const std::string& why) -> std::optional<HashCache> {
    warnings.push_back({path.string(), "hash cache ignored: " + why});
    return std::nullopt;
  };
  std::ifstream in(path, std::ios::binary);
  if (!in) return ignore("cannot open");
  Reader r(in);

  char magic[8];
  if (!r.bytes(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    return ignore("bad magic");
  }
  HashCache cache;
  std::uint8_t mode = 0;
  std::uint64_t count = 0;
  if (!r.uint(cache.version) || !r.uint(mode) || !r.uint(count)) return ignore("truncated header");
  if (cache.version != kCacheVersion && cache.version != kCacheVersionDigest) {
    return ignore("unsupported version " + std::to_string(cache.version));
  }
  if (mode != 6 && mode != 8) return ignore("unknown mode tag " + std::to_string(mode));
  cache.mode = static_cast<AugmentMode>(mode);

  const auto file_size = std::filesystem::file_size(path, ec);
  // Smallest possible record: empty id, size, hashes.
  if (count > file_size / (2 + 8 + 8 * std::uint64_t{mode})) return ignore("record count exceeds file size");
  cache.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    CacheRecord rec;
    std::uint16_t id_len = 0;
    if (!r.uint(id_len)) return ignore("truncated record");
    rec.id.resize(id_len);
    if (!r.bytes(rec.id.data(), id_len) || !r.uint(rec.byte_size)) return ignore("truncated record");
    if (cache.version == kCacheVersionDigest) {
      Sha256 digest{};
      if (!r.bytes(digest.data(), digest.size())) return ignore("truncated record");
      rec.digest = digest;
    }
    rec.hashes.resize(mode);
    for (auto& h : rec.hashes) {
      if (!r.uint(h.bits)) return ignore("truncated record");
    }
    cache.records.push_back(std::move(rec));
  }
  if (in.peek() != std::char_traits<char>::eof()) return ignore("trailing bytes");
  return cache;
}

void write_hash_cache(const std::filesystem::path& path, const HashCache& cache) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write hash cache '" + tmp.string() + "'");
    Writer w(out);
    w.bytes(kMagic, sizeof(kMagic));
    w.uint(cache.version);
    w.uint(static_cast<std::uint8_t>(cache.mode));
    w.uint(static_cast<std::uint64_t>(cache.records.size()));
    const auto expected = static_cast<std::size_t>(cache.mode);
    for (const CacheRecord& rec : cache.records) {
      if (rec.id.size() > 0xFFFF) throw InvalidInput("image id too long for cache: '" + rec.id + "'");
      if (rec.hashes.size() != expected) throw InvalidInput("cache record '" + rec.id + "' has wrong hash count");
      w.uint(static_cast<std::uint16_t>(rec.id.size()));
      w.bytes(rec.id.data(), rec.id.size());
      w.uint(rec.byte_size);
      if (cache.version == kCacheVersionDigest) {
        if (!rec.digest) throw InvalidInput("cache record '" + rec.id + "' lacks a digest");
        w.bytes(rec.digest->data(), rec.digest->size());
      }
      for (PerceptualHash h : rec.hashes) w.uint(h.bits);
    }
    if (!out.flush()) throw InvalidInput("cannot write hash cache '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Sha256 file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw InvariantViolation("SHA-256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  Sha256 digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  return digest;
}

}  // namespace dedup

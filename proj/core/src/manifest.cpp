#include "pseudopost/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "pseudopost/errors.hpp"

namespace pseudopost {

std::uint64_t fnv1a_digest(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for digesting");
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[static_cast<std::size_t>(i)]);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

std::string digest_hex(std::uint64_t digest) {
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[digest & 0xf];
    digest >>= 4;
  }
  return out;
}

std::string library_version() {
#ifdef PSEUDOPOST_VERSION
  return PSEUDOPOST_VERSION;
#else
  return "unknown";
#endif
}

std::string iso_timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::add_input(const std::string& path) {
  input_digests[path] = digest_hex(file_digest(path));
}

void RunManifest::add_output(const std::string& path) {
  output_digests[path] = digest_hex(file_digest(path));
}

void write_manifest(const RunManifest& manifest, const std::string& json_path) {
  nlohmann::json j;
  j["command"] = manifest.command;
  if (manifest.config_echo.empty()) {
    j["config"] = nlohmann::json::object();
  } else {
    try {
      j["config"] = nlohmann::json::parse(manifest.config_echo);
    } catch (const nlohmann::json::parse_error&) {
      j["config"] = manifest.config_echo;
    }
  }
  j["master_seed"] = manifest.master_seed;
  j["inputs"] = manifest.input_digests;
  j["outputs"] = manifest.output_digests;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["version"] = manifest.version;

  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + json_path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failure on '" + json_path + "'");
}

}  // namespace pseudopost

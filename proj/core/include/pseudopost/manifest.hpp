#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace pseudopost {

// FNV-1a, 64-bit. Stable across platforms; used to fingerprint run inputs and
// outputs so reruns can be compared byte-for-byte.
std::uint64_t fnv1a_digest(const void* data, std::size_t size);
std::uint64_t file_digest(const std::string& path);
std::string digest_hex(std::uint64_t digest);

std::string library_version();
std::string iso_timestamp_utc();

struct RunManifest {
  std::string command;               // subcommand that produced the outputs
  std::string config_echo;           // resolved configuration, serialized JSON
  std::uint64_t master_seed = 0;
  std::map<std::string, std::string> input_digests;   // path -> hex digest
  std::map<std::string, std::string> output_digests;  // path -> hex digest
  std::string started_at;
  std::string finished_at;
  std::string version;

  void add_input(const std::string& path);
  void add_output(const std::string& path);
};

void write_manifest(const RunManifest& manifest, const std::string& json_path);

}  // namespace pseudopost

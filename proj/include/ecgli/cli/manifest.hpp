#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ecgli::cli {

inline constexpr const char* kVersion = "ecgli 0.1.0";

/// Ordered key = value record of one run directory.
struct RunManifest {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  /// Empty string when absent.
  std::string get(const std::string& key) const;
  bool has(const std::string& key) const;

  bool operator==(const RunManifest&) const = default;
};

std::string manifest_text(const RunManifest& m);
/// Written to a temporary file and renamed into place.
void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

/// FNV-1a of a file's bytes as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

}  // namespace ecgli::cli

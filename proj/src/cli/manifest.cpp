#include "ecgli/cli/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ecgli/binary_io.hpp"
#include "ecgli/common.hpp"

namespace ecgli::cli {

void RunManifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

void RunManifest::set(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  set(key, std::string(buf));
}

std::string RunManifest::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return "";
}

bool RunManifest::has(const std::string& key) const {
  for (const auto& e : entries) {
    if (e.first == key) return true;
  }
  return false;
}

std::string manifest_text(const RunManifest& m) {
  std::string out;
  for (const auto& [k, v] : m.entries) out += k + " = " + v + "\n";
  return out;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << manifest_text(m);
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  RunManifest m;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    m.entries.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  return m;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto h = io::fnv1a(std::as_bytes(std::span<const char>(bytes.data(), bytes.size())));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ecgli::cli

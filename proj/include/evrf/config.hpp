#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "evrf/errors.hpp"

namespace evrf::io {

// Flat sectioned "key = value" text. '#' and ';' start comments. Every key
// must be consumed by the reader; leftovers are hard errors so a typo cannot
// silently fall back to a default.
class Config {
 public:
  Config() = default;
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback);
  double get_double(const std::string& section, const std::string& key, double fallback);
  int get_int(const std::string& section, const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  std::vector<double> fallback);  // comma separated
  std::vector<int> get_ints(const std::string& section, const std::string& key, std::vector<int> fallback);

  // Throws FormatError naming every key that was never read. Sections listed
  // in `tolerated_sections` (owned by other subcommands) are exempt.
  void reject_unknown_keys(const std::set<std::string>& tolerated_sections = {}) const;

  // Flat "section.key = value" snapshot (for manifests / config echo).
  std::vector<std::pair<std::string, std::string>> entries() const;

  void set(const std::string& section, const std::string& key, const std::string& value);

 private:
  std::string lookup(const std::string& section, const std::string& key);
  std::map<std::string, std::string> values_;  // "section.key" -> value
  std::set<std::string> consumed_;
  std::string origin_ = "<empty>";
};

}  // namespace evrf::io

#include "evrf/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace evrf::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path.string());
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(origin + ":" + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw FormatError(origin + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError(origin + ":" + std::to_string(line_no) + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values_.count(full)) throw FormatError(origin + ":" + std::to_string(line_no) + ": duplicate key " + full);
    cfg.values_[full] = value;
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return values_.count(section.empty() ? key : section + "." + key) > 0;
}

std::string Config::lookup(const std::string& section, const std::string& key) {
  std::string full = section.empty() ? key : section + "." + key;
  consumed_.insert(full);
  auto it = values_.find(full);
  return it == values_.end() ? std::string() : it->second;
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) {
  if (!has(section, key)) {
    lookup(section, key);
    return fallback;
  }
  return lookup(section, key);
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) {
  if (!has(section, key)) return fallback;
  std::string v = lookup(section, key);
  try {
    std::size_t pos;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw FormatError(origin_ + ": key " + section + "." + key + " is not a number: '" + v + "'");
  }
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) {
  if (!has(section, key)) return fallback;
  std::string v = lookup(section, key);
  int out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw FormatError(origin_ + ": key " + section + "." + key + " is not an integer: '" + v + "'");
  return out;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) {
  if (!has(section, key)) return fallback;
  std::string v = lookup(section, key);
  std::uint64_t out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw FormatError(origin_ + ": key " + section + "." + key + " is not an unsigned integer: '" + v + "'");
  return out;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) {
  if (!has(section, key)) return fallback;
  std::string v = lookup(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw FormatError(origin_ + ": key " + section + "." + key + " is not a boolean: '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        std::vector<double> fallback) {
  if (!has(section, key)) return fallback;
  std::string v = lookup(section, key);
  std::vector<double> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw FormatError(origin_ + ": key " + section + "." + key + " has a non-numeric element: '" + item + "'");
    }
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& section, const std::string& key, std::vector<int> fallback) {
  if (!has(section, key)) return fallback;
  std::vector<double> d = get_doubles(section, key, {});
  consumed_.insert(section.empty() ? key : section + "." + key);
  std::vector<int> out;
  for (double x : d) {
    int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
      throw FormatError(origin_ + ": key " + section + "." + key + " has a non-integer element");
    out.push_back(i);
  }
  return out;
}

void Config::reject_unknown_keys(const std::set<std::string>& tolerated_sections) const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (consumed_.count(key)) continue;
    const std::size_t dot = key.find('.');
    if (dot != std::string::npos && tolerated_sections.count(key.substr(0, dot))) continue;
    unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw FormatError(origin_ + ": unknown config keys: " + unknown);
}

std::vector<std::pair<std::string, std::string>> Config::entries() const {
  return {values_.begin(), values_.end()};
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  values_[section.empty() ? key : section + "." + key] = value;
}

}  // namespace evrf::io

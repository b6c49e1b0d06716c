#pragma once

#include <istream>
#include <string>
#include <vector>

namespace gner {

// Minimal INI reader: [section] headers, key = value pairs, '#' and ';'
// comments. Section order and key order are preserved.
struct IniSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws if absent
  std::string get_or(const std::string& key, const std::string& fallback) const;
};

std::vector<IniSection> parse_ini(std::istream& in);
std::vector<IniSection> parse_ini_file(const std::string& path);

}  // namespace gner

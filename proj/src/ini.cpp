#include "gner/ini.hpp"

#include <fstream>

#include "gner/error.hpp"

namespace gner {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

bool IniSection::has(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return true;
  }
  return false;
}

const std::string& IniSection::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  throw Error("missing key '" + key + "' in section [" + name + "]");
}

std::string IniSection::get_or(const std::string& key,
                               const std::string& fallback) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return fallback;
}

std::vector<IniSection> parse_ini(std::istream& in) {
  std::vector<IniSection> sections;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw Error("line " + std::to_string(line_no) + ": malformed section header");
      }
      sections.push_back(IniSection{trim(t.substr(1, t.size() - 2)), {}});
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error("line " + std::to_string(line_no) + ": expected key = value");
    }
    if (sections.empty()) {
      // Keys before any section header go into an unnamed section.
      sections.push_back(IniSection{"", {}});
    }
    sections.back().entries.emplace_back(trim(t.substr(0, eq)),
                                         trim(t.substr(eq + 1)));
  }
  return sections;
}

std::vector<IniSection> parse_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  try {
    return parse_ini(in);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace gner

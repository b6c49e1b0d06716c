#include "gner/text.hpp"

namespace gner {

namespace {

// Returns the number of bytes consumed, or 0 on malformed input.
int decode_one(const unsigned char* p, std::size_t n, char32_t* cp) {
  if (n == 0) return 0;
  unsigned char b0 = p[0];
  if (b0 < 0x80) {
    *cp = b0;
    return 1;
  }
  int len;
  char32_t v;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    v = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    v = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    v = b0 & 0x07;
  } else {
    return 0;
  }
  if (n < static_cast<std::size_t>(len)) return 0;
  for (int i = 1; i < len; ++i) {
    if ((p[i] & 0xC0) != 0x80) return 0;
    v = (v << 6) | (p[i] & 0x3F);
  }
  // Reject overlong encodings and surrogates.
  if ((len == 2 && v < 0x80) || (len == 3 && v < 0x800) ||
      (len == 4 && v < 0x10000) || v > 0x10FFFF ||
      (v >= 0xD800 && v <= 0xDFFF)) {
    return 0;
  }
  *cp = v;
  return len;
}

}  // namespace

bool utf8_decode(std::string_view s, std::vector<char32_t>* out) {
  out->clear();
  const unsigned char* p = reinterpret_cast<const unsigned char*>(s.data());
  std::size_t n = s.size();
  while (n > 0) {
    char32_t cp;
    int used = decode_one(p, n, &cp);
    if (used == 0) return false;
    out->push_back(cp);
    p += used;
    n -= used;
  }
  return true;
}

bool utf8_valid(std::string_view s) {
  const unsigned char* p = reinterpret_cast<const unsigned char*>(s.data());
  std::size_t n = s.size();
  while (n > 0) {
    char32_t cp;
    int used = decode_one(p, n, &cp);
    if (used == 0) return false;
    p += used;
    n -= used;
  }
  return true;
}

void utf8_append(char32_t cp, std::string* out) {
  if (cp < 0x80) {
    out->push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string utf8_encode(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) utf8_append(cp, &out);
  return out;
}

char32_t to_lower_cp(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  // Latin-1 Supplement: À..Þ except ×.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  // Latin Extended-A, alternating pairs.
  if ((cp >= 0x0100 && cp <= 0x0137) || (cp >= 0x014A && cp <= 0x0177)) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x0139 && cp <= 0x0148) {
    return (cp % 2 == 1) ? cp + 1 : cp;
  }
  if (cp == 0x0178) return 0x00FF;  // Ÿ -> ÿ
  if (cp == 0x0179 || cp == 0x017B || cp == 0x017D) return cp + 1;
  return cp;
}

char32_t to_upper_cp(char32_t cp) {
  if (cp >= U'a' && cp <= U'z') return cp - 0x20;
  // à..þ except ÷; ß has no single-codepoint uppercase form.
  if (cp >= 0xE0 && cp <= 0xFE && cp != 0xF7) return cp - 0x20;
  if (cp == 0xFF) return 0x0178;
  if ((cp >= 0x0100 && cp <= 0x0137) || (cp >= 0x014A && cp <= 0x0177)) {
    return (cp % 2 == 1) ? cp - 1 : cp;
  }
  if (cp >= 0x0139 && cp <= 0x0148) {
    return (cp % 2 == 0) ? cp - 1 : cp;
  }
  if (cp == 0x017A || cp == 0x017C || cp == 0x017E) return cp - 1;
  return cp;
}

bool is_upper_cp(char32_t cp) { return to_lower_cp(cp) != cp; }

bool is_lower_cp(char32_t cp) {
  if (cp == 0xDF) return true;  // ß
  return to_upper_cp(cp) != cp;
}

std::string utf8_lower(std::string_view s) {
  std::vector<char32_t> cps;
  if (!utf8_decode(s, &cps)) return std::string(s);
  for (char32_t& cp : cps) cp = to_lower_cp(cp);
  return utf8_encode(cps);
}

bool is_punct_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0xA1:  // ¡
    case 0xA2:  // ¢
    case 0xA3:  // £
    case 0xA4:  // ¤
    case 0xA5:  // ¥
    case 0xA7:  // §
    case 0xA9:  // ©
    case 0xAB:  // «
    case 0xAE:  // ®
    case 0xB0:  // °
    case 0xB6:  // ¶
    case 0xB7:  // ·
    case 0xBB:  // »
    case 0xBF:  // ¿
    case 0xD7:  // ×
    case 0xF7:  // ÷
    case 0x2122:  // ™
      return true;
    default:
      break;
  }
  // General Punctuation (dashes, quotes, ellipsis, primes, ...).
  if (cp >= 0x2010 && cp <= 0x2027) return true;
  if (cp >= 0x2030 && cp <= 0x205E) return true;
  // Currency Symbols (€ and friends).
  if (cp >= 0x20A0 && cp <= 0x20BF) return true;
  return false;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_sep(line[i])) ++i;
    if (i > start) fields.emplace_back(line.substr(start, i - start));
  }
  return fields;
}

bool is_blank_line(std::string_view line) {
  for (char c : line) {
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

}  // namespace gner

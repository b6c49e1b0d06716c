#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gner {

// UTF-8 helpers for the Latin ranges that occur in German text. Case
// mapping covers ASCII, Latin-1 Supplement and Latin Extended-A; other
// codepoints are passed through unchanged.

bool utf8_decode(std::string_view s, std::vector<char32_t>* out);
bool utf8_valid(std::string_view s);
void utf8_append(char32_t cp, std::string* out);
std::string utf8_encode(const std::vector<char32_t>& cps);

char32_t to_lower_cp(char32_t cp);
char32_t to_upper_cp(char32_t cp);
bool is_upper_cp(char32_t cp);
bool is_lower_cp(char32_t cp);

// Lowercases a UTF-8 string. Invalid byte sequences are copied verbatim.
std::string utf8_lower(std::string_view s);

// Punctuation in the corpus-normalization sense: ASCII punctuation,
// Latin-1 punctuation/symbols, the General Punctuation block and the
// Currency Symbols block. Covers the marks found in German web text.
bool is_punct_cp(char32_t cp);

// Splits on runs of spaces/tabs. Carriage returns are treated as spaces.
std::vector<std::string> split_fields(std::string_view line);

bool is_blank_line(std::string_view line);

}  // namespace gner

#pragma once

#include <compare>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gner/error.hpp"

namespace gner::conll {

struct Token {
  std::string form;
  std::optional<std::string> lemma;
  std::optional<std::string> pos;
  std::string ne_tag = "O";

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::vector<Sentence> sentences;
  // Optional source label per sentence; either empty or parallel to
  // `sentences`. Not part of the serialized format.
  std::vector<std::string> provenance;

  std::size_t size() const { return sentences.size(); }
  bool operator==(const Corpus& other) const {
    return sentences == other.sentences;
  }
};

// Token range [start, end], both inclusive, with one category.
struct EntitySpan {
  int start = 0;
  int end = 0;
  std::string category;

  auto operator<=>(const EntitySpan&) const = default;
};

enum class TagScheme { iob1, bio };
TagScheme parse_scheme(const std::string& name);

// Column roles of a CoNLL-style file. `ne2` captures a second (nested)
// annotation layer for the dataset adapters; `skip` ignores a column.
enum class Column { form, lemma, pos, ne, ne2, skip };
std::vector<Column> parse_columns(const std::string& spec);

Corpus parse_conll(std::istream& in, const std::vector<Column>& columns);
Corpus parse_conll_file(const std::string& path, const std::vector<Column>& columns);

// Like parse_conll but also returns the `ne2` column per sentence (empty
// when the column is not declared).
struct ParsedLayers {
  Corpus corpus;
  std::vector<std::vector<std::string>> second_layer;
};
ParsedLayers parse_conll_layers(std::istream& in, const std::vector<Column>& columns);

// Canonical form: single-space separated fields, one blank line after each
// sentence. parse_conll(write_conll(c)) == c.
void write_conll(const Corpus& corpus, const std::vector<Column>& columns,
                 std::ostream& out);
std::string write_conll_string(const Corpus& corpus, const std::vector<Column>& columns);

// --- tag sequences and spans -------------------------------------------

// Splits "B-PER" into ('B', "PER"). Returns nullopt unless the tag is "O"
// or matches (B|I)-<nonempty category>.
struct TagParts {
  char prefix = 'O';  // 'O', 'B' or 'I'
  std::string category;
};
std::optional<TagParts> split_tag(const std::string& tag);

// Lenient decoders with the semantics of the CoNLL-2003 evaluation
// script: an I-X without a valid predecessor opens a new entity. Tags
// that fit neither O nor (B|I)-X are treated as outside.
std::vector<EntitySpan> bio_to_spans(const std::vector<std::string>& tags);
std::vector<EntitySpan> iob1_to_spans(const std::vector<std::string>& tags);

std::vector<std::string> spans_to_bio(const std::vector<EntitySpan>& spans,
                                      std::size_t length);

// Converts IOB1 to BIO. The decoded span set is preserved exactly.
// Throws on tags that fail the O | (B|I)-<category> grammar.
std::vector<std::string> iob1_to_bio(const std::vector<std::string>& tags);

enum class BioViolationKind { orphan_i, type_switch_i, unknown_label };
struct BioViolation {
  std::size_t index = 0;
  BioViolationKind kind = BioViolationKind::unknown_label;
};
const char* violation_name(BioViolationKind kind);

// Empty result iff `tags` satisfies the strict BIO grammar.
std::vector<BioViolation> validate_bio(const std::vector<std::string>& tags);

// Tag sequence accessors on parsed sentences.
std::vector<std::string> tags_of(const Sentence& s);
void set_tags(Sentence& s, const std::vector<std::string>& tags);

}  // namespace gner::conll

#include "gner/conll.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gner/text.hpp"

namespace gner::conll {

TagScheme parse_scheme(const std::string& name) {
  if (name == "iob1") return TagScheme::iob1;
  if (name == "bio" || name == "iob2") return TagScheme::bio;
  throw Error("unknown tag scheme: " + name);
}

std::vector<Column> parse_columns(const std::string& spec) {
  std::vector<Column> columns;
  std::string item;
  std::stringstream ss(spec);
  while (std::getline(ss, item, ',')) {
    // Trim surrounding blanks.
    std::size_t a = item.find_first_not_of(" \t");
    std::size_t b = item.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    item = item.substr(a, b - a + 1);
    if (item == "form") columns.push_back(Column::form);
    else if (item == "lemma") columns.push_back(Column::lemma);
    else if (item == "pos") columns.push_back(Column::pos);
    else if (item == "ne") columns.push_back(Column::ne);
    else if (item == "ne2") columns.push_back(Column::ne2);
    else if (item == "skip" || item == "_") columns.push_back(Column::skip);
    else throw Error("unknown column role: " + item);
  }
  if (columns.empty()) throw Error("empty column spec");
  bool has_form = std::find(columns.begin(), columns.end(), Column::form) != columns.end();
  bool has_ne = std::find(columns.begin(), columns.end(), Column::ne) != columns.end();
  if (!has_form || !has_ne)
    throw Error("column spec needs at least 'form' and 'ne': " + spec);
  return columns;
}

ParsedLayers parse_conll_layers(std::istream& in, const std::vector<Column>& columns) {
  ParsedLayers result;
  bool want_ne2 =
      std::find(columns.begin(), columns.end(), Column::ne2) != columns.end();

  Sentence sentence;
  std::vector<std::string> sentence_ne2;
  std::size_t line_no = 0;
  std::string line;

  auto flush = [&]() {
    if (sentence.tokens.empty()) return;  // consecutive blank lines
    result.corpus.sentences.push_back(std::move(sentence));
    if (want_ne2) result.second_layer.push_back(std::move(sentence_ne2));
    sentence = Sentence{};
    sentence_ne2.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!utf8_valid(line)) {
      throw Error("line " + std::to_string(line_no) + ": invalid UTF-8");
    }
    if (is_blank_line(line)) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;  // metadata/comment line

    std::vector<std::string> fields = split_fields(line);
    if (fields.size() < columns.size()) {
      throw Error("line " + std::to_string(line_no) + ": expected " +
                  std::to_string(columns.size()) + " fields, got " +
                  std::to_string(fields.size()));
    }
    Token token;
    std::string ne2;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      switch (columns[i]) {
        case Column::form: token.form = fields[i]; break;
        case Column::lemma: token.lemma = fields[i]; break;
        case Column::pos: token.pos = fields[i]; break;
        case Column::ne: token.ne_tag = fields[i]; break;
        case Column::ne2: ne2 = fields[i]; break;
        case Column::skip: break;
      }
    }
    sentence.tokens.push_back(std::move(token));
    if (want_ne2) sentence_ne2.push_back(std::move(ne2));
  }
  flush();
  return result;
}

Corpus parse_conll(std::istream& in, const std::vector<Column>& columns) {
  return parse_conll_layers(in, columns).corpus;
}

Corpus parse_conll_file(const std::string& path, const std::vector<Column>& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  try {
    return parse_conll(in, columns);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_conll(const Corpus& corpus, const std::vector<Column>& columns,
                 std::ostream& out) {
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    const Sentence& sentence = corpus.sentences[si];
    for (std::size_t ti = 0; ti < sentence.tokens.size(); ++ti) {
      const Token& token = sentence.tokens[ti];
      bool first = true;
      for (Column c : columns) {
        const std::string* field = nullptr;
        switch (c) {
          case Column::form: field = &token.form; break;
          case Column::lemma:
            if (!token.lemma) {
              throw Error("sentence " + std::to_string(si) + " token " +
                          std::to_string(ti) + ": missing lemma");
            }
            field = &*token.lemma;
            break;
          case Column::pos:
            if (!token.pos) {
              throw Error("sentence " + std::to_string(si) + " token " +
                          std::to_string(ti) + ": missing pos");
            }
            field = &*token.pos;
            break;
          case Column::ne: field = &token.ne_tag; break;
          case Column::ne2:
            throw Error("cannot write column role 'ne2'");
          case Column::skip: continue;
        }
        if (!first) out << ' ';
        out << *field;
        first = false;
      }
      out << '\n';
    }
    out << '\n';
  }
}

std::string write_conll_string(const Corpus& corpus, const std::vector<Column>& columns) {
  std::ostringstream out;
  write_conll(corpus, columns, out);
  return out.str();
}

std::optional<TagParts> split_tag(const std::string& tag) {
  if (tag == "O") return TagParts{'O', ""};
  if (tag.size() >= 3 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return TagParts{tag[0], tag.substr(2)};
  }
  return std::nullopt;
}

namespace {

// Shared span decoder. `begin_on_b` distinguishes BIO (B always opens)
// from IOB1 (B opens only to split adjacent same-type entities, which in
// lenient decoding is the same action: close and reopen).
std::vector<EntitySpan> decode_spans(const std::vector<std::string>& tags) {
  std::vector<EntitySpan> spans;
  int open_start = -1;
  std::string open_category;

  auto close = [&](int end) {
    if (open_start >= 0) {
      spans.push_back(EntitySpan{open_start, end, open_category});
      open_start = -1;
      open_category.clear();
    }
  };

  for (std::size_t i = 0; i < tags.size(); ++i) {
    std::optional<TagParts> parts = split_tag(tags[i]);
    int pos = static_cast<int>(i);
    if (!parts || parts->prefix == 'O') {
      close(pos - 1);
      continue;
    }
    if (parts->prefix == 'B') {
      close(pos - 1);
      open_start = pos;
      open_category = parts->category;
    } else {  // 'I'
      if (open_start >= 0 && open_category == parts->category) continue;
      // Orphan or type switch: lenient decoding opens a new entity.
      close(pos - 1);
      open_start = pos;
      open_category = parts->category;
    }
  }
  close(static_cast<int>(tags.size()) - 1);
  return spans;
}

}  // namespace

std::vector<EntitySpan> bio_to_spans(const std::vector<std::string>& tags) {
  return decode_spans(tags);
}

std::vector<EntitySpan> iob1_to_spans(const std::vector<std::string>& tags) {
  // Lenient IOB1 and BIO decoding coincide: I continues a same-type
  // entity and otherwise opens one; B always opens.
  return decode_spans(tags);
}

std::vector<std::string> spans_to_bio(const std::vector<EntitySpan>& spans,
                                      std::size_t length) {
  std::vector<std::string> tags(length, "O");
  std::vector<EntitySpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  int prev_end = -1;
  for (const EntitySpan& span : sorted) {
    if (span.start < 0 || span.end < span.start ||
        span.end >= static_cast<int>(length)) {
      throw Error("span out of range: [" + std::to_string(span.start) + "," +
                  std::to_string(span.end) + "] for length " +
                  std::to_string(length));
    }
    if (span.start <= prev_end) {
      throw Error("overlapping spans at token " + std::to_string(span.start));
    }
    tags[span.start] = "B-" + span.category;
    for (int i = span.start + 1; i <= span.end; ++i) {
      tags[i] = "I-" + span.category;
    }
    prev_end = span.end;
  }
  return tags;
}

std::vector<std::string> iob1_to_bio(const std::vector<std::string>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!split_tag(tags[i])) {
      throw Error("malformed tag at index " + std::to_string(i) + ": " + tags[i]);
    }
  }
  return spans_to_bio(iob1_to_spans(tags), tags.size());
}

const char* violation_name(BioViolationKind kind) {
  switch (kind) {
    case BioViolationKind::orphan_i: return "orphan-I";
    case BioViolationKind::type_switch_i: return "type-switch-I";
    case BioViolationKind::unknown_label: return "unknown-label";
  }
  return "?";
}

std::vector<BioViolation> validate_bio(const std::vector<std::string>& tags) {
  std::vector<BioViolation> violations;
  std::optional<TagParts> prev;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    std::optional<TagParts> parts = split_tag(tags[i]);
    if (!parts) {
      violations.push_back({i, BioViolationKind::unknown_label});
      prev = std::nullopt;
      continue;
    }
    if (parts->prefix == 'I') {
      if (!prev || prev->prefix == 'O') {
        violations.push_back({i, BioViolationKind::orphan_i});
      } else if (prev->category != parts->category) {
        violations.push_back({i, BioViolationKind::type_switch_i});
      }
    }
    prev = parts;
  }
  return violations;
}

std::vector<std::string> tags_of(const Sentence& s) {
  std::vector<std::string> tags;
  tags.reserve(s.tokens.size());
  for (const Token& t : s.tokens) tags.push_back(t.ne_tag);
  return tags;
}

void set_tags(Sentence& s, const std::vector<std::string>& tags) {
  if (tags.size() != s.tokens.size()) {
    throw Error("tag sequence length mismatch");
  }
  for (std::size_t i = 0; i < tags.size(); ++i) s.tokens[i].ne_tag = tags[i];
}

}  // namespace gner::conll

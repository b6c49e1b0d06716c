#include "gner/normalize.hpp"

#include "gner/error.hpp"
#include "gner/text.hpp"

namespace gner::normalize {

Variant parse_variant(const std::string& name) {
  if (name == "lower") return Variant::lower;
  if (name == "lemma") return Variant::lemma;
  if (name == "lemma_lower") return Variant::lemma_lower;
  if (name == "lemmapos") return Variant::lemmapos;
  if (name == "lemmapos_lower") return Variant::lemmapos_lower;
  throw Error("unknown variant: " + name);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::lower: return "lower";
    case Variant::lemma: return "lemma";
    case Variant::lemma_lower: return "lemma_lower";
    case Variant::lemmapos: return "lemmapos";
    case Variant::lemmapos_lower: return "lemmapos_lower";
  }
  return "?";
}

bool variant_needs_lemma(Variant v) { return v != Variant::lower; }

bool variant_needs_pos(Variant v) {
  return v == Variant::lemmapos || v == Variant::lemmapos_lower;
}

std::vector<std::string> separate_punctuation(std::string_view line) {
  std::vector<std::string> out;
  for (const std::string& raw : split_fields(line)) {
    std::vector<char32_t> cps;
    if (!utf8_decode(raw, &cps)) {
      // Not UTF-8; pass the token through untouched.
      out.push_back(raw);
      continue;
    }
    std::size_t begin = 0;
    std::size_t end = cps.size();
    std::vector<char32_t> trailing;
    while (end - begin > 1 && is_punct_cp(cps[begin])) {
      out.push_back(utf8_encode({cps[begin]}));
      ++begin;
    }
    while (end - begin > 1 && is_punct_cp(cps[end - 1])) {
      trailing.push_back(cps[end - 1]);
      --end;
    }
    out.push_back(utf8_encode(
        std::vector<char32_t>(cps.begin() + begin, cps.begin() + end)));
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) {
      out.push_back(utf8_encode({*it}));
    }
  }
  return out;
}

std::vector<std::string> apply_variant(const std::vector<AnnotatedToken>& tokens,
                                       Variant variant) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const AnnotatedToken& token = tokens[i];
    if (variant_needs_lemma(variant) && token.lemma.empty()) {
      throw Error("token " + std::to_string(i) + ": missing lemma for variant " +
                  variant_name(variant));
    }
    if (variant_needs_pos(variant) && token.pos.empty()) {
      throw Error("token " + std::to_string(i) + ": missing pos for variant " +
                  variant_name(variant));
    }
    switch (variant) {
      case Variant::lower:
        out.push_back(utf8_lower(token.form));
        break;
      case Variant::lemma:
        out.push_back(token.lemma);
        break;
      case Variant::lemma_lower:
        out.push_back(utf8_lower(token.lemma));
        break;
      case Variant::lemmapos:
        out.push_back(token.lemma + "_" + token.pos);
        break;
      case Variant::lemmapos_lower:
        out.push_back(utf8_lower(token.lemma) + "_" + token.pos);
        break;
    }
  }
  return out;
}

Mode parse_mode(const std::string& name) {
  if (name == "raw") return Mode::raw;
  if (name == "annotated") return Mode::annotated;
  throw Error("unknown normalization mode: " + name);
}

namespace {

void emit_line(const std::vector<std::string>& tokens, std::ostream& out) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out << ' ';
    out << tokens[i];
  }
  out << '\n';
}

}  // namespace

void normalize_stream(std::istream& in, Mode mode, Variant variant,
                      std::ostream& out) {
  if (mode == Mode::raw) {
    if (variant != Variant::lower) {
      throw Error(std::string("raw mode supports only the 'lower' variant, got ") +
                  variant_name(variant));
    }
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> tokens = separate_punctuation(line);
      if (tokens.empty()) continue;
      for (std::string& t : tokens) t = utf8_lower(t);
      emit_line(tokens, out);
    }
    return;
  }

  // Annotated mode: 3-column form/lemma/pos, blank line per sentence.
  std::vector<AnnotatedToken> sentence;
  std::size_t line_no = 0;
  std::string line;
  auto flush = [&]() {
    if (sentence.empty()) return;
    emit_line(apply_variant(sentence, variant), out);
    sentence.clear();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_line(line)) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() < 3) {
      throw Error("line " + std::to_string(line_no) +
                  ": annotated mode expects form lemma pos");
    }
    sentence.push_back(AnnotatedToken{fields[0], fields[1], fields[2]});
  }
  flush();
}

void apply_variant_to_corpus(conll::Corpus& corpus, Variant variant) {
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    for (std::size_t ti = 0; ti < corpus.sentences[si].tokens.size(); ++ti) {
      conll::Token& token = corpus.sentences[si].tokens[ti];
      auto where = [&]() {
        return "sentence " + std::to_string(si) + " token " + std::to_string(ti);
      };
      if (variant_needs_lemma(variant) && !token.lemma) {
        throw Error(where() + ": missing lemma for variant " + variant_name(variant));
      }
      if (variant_needs_pos(variant) && !token.pos) {
        throw Error(where() + ": missing pos for variant " + variant_name(variant));
      }
      AnnotatedToken at{token.form, token.lemma.value_or(""), token.pos.value_or("")};
      token.form = apply_variant({at}, variant).front();
    }
  }
}

}  // namespace gner::normalize

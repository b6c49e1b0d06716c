#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "gner/conll.hpp"

namespace gner::normalize {

// The five embedding-corpus variants. `lower` works on raw text; the
// others need lemma (and for lemmapos*, POS) annotations.
enum class Variant { lower, lemma, lemma_lower, lemmapos, lemmapos_lower };

Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);
bool variant_needs_lemma(Variant v);
bool variant_needs_pos(Variant v);

struct AnnotatedToken {
  std::string form;
  std::string lemma;
  std::string pos;
};

// Splits on whitespace, then peels leading and trailing punctuation off
// each token as separate tokens. Word-internal punctuation (decimal
// points, hyphens) stays put. Idempotent.
std::vector<std::string> separate_punctuation(std::string_view line);

// One output string per input token. The POS suffix keeps its original
// case even under the _lower variants.
std::vector<std::string> apply_variant(const std::vector<AnnotatedToken>& tokens,
                                       Variant variant);

enum class Mode { raw, annotated };
Mode parse_mode(const std::string& name);

// Streams sentences through the variant transformation, one output line
// per sentence, single-space separated. Raw mode tokenizes with
// separate_punctuation and supports only the `lower` variant; annotated
// mode reads 3-column form/lemma/pos CoNLL-style input. Single pass,
// bounded memory.
void normalize_stream(std::istream& in, Mode mode, Variant variant,
                      std::ostream& out);

// Applies the variant to the token forms of an NER corpus so datasets
// match the embedding corpus they are trained against. Requires lemma/pos
// columns when the variant does.
void apply_variant_to_corpus(conll::Corpus& corpus, Variant variant);

}  // namespace gner::normalize

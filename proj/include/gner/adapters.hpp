#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gner/conll.hpp"

namespace gner::adapters {

using conll::Corpus;
using conll::EntitySpan;
using conll::Sentence;
using conll::TagScheme;

// One sentence with stacked annotation layers; layer 0 is the outermost.
// Within a layer spans must not overlap; across layers they are expected
// to nest or stay disjoint.
struct LayeredAnnotation {
  Sentence sentence;
  std::vector<std::vector<EntitySpan>> layers;
};

struct LabelMapping {
  std::map<std::string, std::string> pairs;
};

// Fractions over (train, dev, test), summing to 1.
struct SplitSpec {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};
SplitSpec parse_split_spec(const std::string& text);  // "80/10/10"

// Keeps, for every annotated token, the longest span covering it; ties go
// to the outermost layer, then to the leftmost start. Output spans never
// overlap.
std::vector<EntitySpan> filter_nested_longest(const LayeredAnnotation& ann);

// Layer 0 only.
std::vector<EntitySpan> select_top_level(const LayeredAnnotation& ann);

// Renames tag categories; prefixes, O tags and everything else untouched.
// Every category occurring in the corpus must have an entry.
Corpus map_labels(const Corpus& corpus, const LabelMapping& mapping);

struct SplitResult {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Contiguous order-preserving partition. test = floor(N*r_test),
// dev = floor(N*r_dev), train = rest.
SplitResult split_dataset(const Corpus& corpus, const SplitSpec& spec);

// Concatenates harmonized parts, recording the source label per sentence.
// Every part must be valid BIO over {PER, LOC, ORG, MISC}.
Corpus merge_datasets(const std::vector<std::pair<Corpus, std::string>>& parts);

// --- manifest-driven adaptation ------------------------------------------

enum class NestedPolicy { none, top_level, longest };
NestedPolicy parse_nested_policy(const std::string& name);

struct RoleSpec {
  enum class Kind { train, dev, test, split } kind = Kind::train;
  SplitSpec split;  // meaningful for Kind::split
};
RoleSpec parse_role(const std::string& text);

struct SourceConfig {
  std::string name;
  std::string path;
  std::vector<conll::Column> columns;
  TagScheme scheme = TagScheme::bio;
  NestedPolicy nested = NestedPolicy::none;
  LabelMapping mapping;  // identity over {PER,LOC,ORG,MISC} plus the listed pairs
  RoleSpec role;
};

std::vector<SourceConfig> load_manifest(const std::string& path);

struct AdaptedSource {
  std::string name;
  std::optional<Corpus> train;
  std::optional<Corpus> dev;
  std::optional<Corpus> test;
};

// Full harmonization pipeline for one source: parse, drop -DOCSTART-
// sentinel sentences, resolve nesting, convert the scheme to BIO, map
// categories, assign role splits.
AdaptedSource adapt_source(const SourceConfig& config);
AdaptedSource adapt_source(const SourceConfig& config, std::istream& in);

}  // namespace gner::adapters

#include "gner/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gner/ini.hpp"

namespace gner::adapters {

namespace {

const std::set<std::string> kHarmonizedCategories = {"PER", "LOC", "ORG", "MISC"};

void check_layer_disjoint(const std::vector<EntitySpan>& layer) {
  std::vector<EntitySpan> sorted = layer;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start <= sorted[i - 1].end) {
      throw Error("overlapping spans within one layer at token " +
                  std::to_string(sorted[i].start));
    }
  }
}

}  // namespace

SplitSpec parse_split_spec(const std::string& text) {
  double a, b, c;
  char s1, s2;
  std::istringstream ss(text);
  if (!(ss >> a >> s1 >> b >> s2 >> c) || s1 != '/' || s2 != '/') {
    throw Error("malformed split ratio (want e.g. 80/10/10): " + text);
  }
  SplitSpec spec{a / 100.0, b / 100.0, c / 100.0};
  double sum = spec.train + spec.dev + spec.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error("split ratios must sum to 100: " + text);
  }
  for (double r : {spec.train, spec.dev, spec.test}) {
    if (r <= 0.0 || r >= 1.0) {
      throw Error("each split fraction must lie in (0,1): " + text);
    }
  }
  return spec;
}

std::vector<EntitySpan> filter_nested_longest(const LayeredAnnotation& ann) {
  struct Candidate {
    EntitySpan span;
    int layer;
  };
  std::vector<Candidate> candidates;
  for (std::size_t k = 0; k < ann.layers.size(); ++k) {
    check_layer_disjoint(ann.layers[k]);
    for (const EntitySpan& span : ann.layers[k]) {
      candidates.push_back({span, static_cast<int>(k)});
    }
  }
  // Longest first; ties broken by outermost layer, then leftmost start.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     int la = a.span.end - a.span.start;
                     int lb = b.span.end - b.span.start;
                     if (la != lb) return la > lb;
                     if (a.layer != b.layer) return a.layer < b.layer;
                     return a.span.start < b.span.start;
                   });
  std::vector<EntitySpan> kept;
  for (const Candidate& c : candidates) {
    bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const EntitySpan& k) {
      return c.span.start <= k.end && k.start <= c.span.end;
    });
    if (!overlaps) kept.push_back(c.span);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<EntitySpan> select_top_level(const LayeredAnnotation& ann) {
  if (ann.layers.empty()) throw Error("layered annotation has no layers");
  std::vector<EntitySpan> top = ann.layers.front();
  std::sort(top.begin(), top.end());
  return top;
}

Corpus map_labels(const Corpus& corpus, const LabelMapping& mapping) {
  Corpus out = corpus;
  for (Sentence& sentence : out.sentences) {
    for (conll::Token& token : sentence.tokens) {
      auto parts = conll::split_tag(token.ne_tag);
      if (!parts || parts->prefix == 'O') continue;
      auto it = mapping.pairs.find(parts->category);
      if (it == mapping.pairs.end()) {
        throw Error("unmapped NE category: " + parts->category);
      }
      token.ne_tag = std::string(1, parts->prefix) + "-" + it->second;
    }
  }
  return out;
}

SplitResult split_dataset(const Corpus& corpus, const SplitSpec& spec) {
  std::size_t n = corpus.sentences.size();
  if (n == 0) throw Error("cannot split an empty corpus");
  auto part = [&](double r) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r));
  };
  std::size_t n_test = part(spec.test);
  std::size_t n_dev = part(spec.dev);
  if (n_test + n_dev >= n) throw Error("corpus too small to split");
  std::size_t n_train = n - n_dev - n_test;
  if (n_train == 0 || n_dev == 0 || n_test == 0) {
    throw Error("split produces an empty part (corpus size " +
                std::to_string(n) + ")");
  }
  SplitResult result;
  auto copy_range = [&](std::size_t begin, std::size_t end) {
    Corpus c;
    c.sentences.assign(corpus.sentences.begin() + begin,
                       corpus.sentences.begin() + end);
    return c;
  };
  result.train = copy_range(0, n_train);
  result.dev = copy_range(n_train, n_train + n_dev);
  result.test = copy_range(n_train + n_dev, n);
  return result;
}

Corpus merge_datasets(const std::vector<std::pair<Corpus, std::string>>& parts) {
  Corpus merged;
  for (const auto& [corpus, label] : parts) {
    for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
      const Sentence& sentence = corpus.sentences[si];
      std::vector<std::string> tags = conll::tags_of(sentence);
      if (!conll::validate_bio(tags).empty()) {
        throw Error("part '" + label + "' sentence " + std::to_string(si) +
                    " is not valid BIO");
      }
      for (const std::string& tag : tags) {
        auto tag_parts = conll::split_tag(tag);
        if (tag_parts && tag_parts->prefix != 'O' &&
            !kHarmonizedCategories.count(tag_parts->category)) {
          throw Error("part '" + label + "' contains unharmonized category: " +
                      tag_parts->category);
        }
      }
      merged.sentences.push_back(sentence);
      merged.provenance.push_back(label);
    }
  }
  return merged;
}

NestedPolicy parse_nested_policy(const std::string& name) {
  if (name == "none") return NestedPolicy::none;
  if (name == "top_level") return NestedPolicy::top_level;
  if (name == "longest") return NestedPolicy::longest;
  throw Error("unknown nested policy: " + name);
}

RoleSpec parse_role(const std::string& text) {
  RoleSpec role;
  if (text == "train") {
    role.kind = RoleSpec::Kind::train;
  } else if (text == "dev") {
    role.kind = RoleSpec::Kind::dev;
  } else if (text == "test") {
    role.kind = RoleSpec::Kind::test;
  } else if (text.rfind("split:", 0) == 0) {
    role.kind = RoleSpec::Kind::split;
    role.split = parse_split_spec(text.substr(6));
  } else {
    throw Error("unknown role: " + text);
  }
  return role;
}

std::vector<SourceConfig> load_manifest(const std::string& path) {
  std::vector<SourceConfig> sources;
  for (const IniSection& section : parse_ini_file(path)) {
    if (section.name.empty()) throw Error(path + ": keys outside any [source] section");
    SourceConfig config;
    config.name = section.name;
    config.path = section.get("path");
    config.columns = conll::parse_columns(section.get_or("columns", "form,ne"));
    config.scheme = conll::parse_scheme(section.get_or("scheme", "bio"));
    config.nested = parse_nested_policy(section.get_or("nested", "none"));
    config.role = parse_role(section.get_or("role", "train"));
    // Identity over the harmonized categories; explicit pairs on top.
    for (const std::string& cat : kHarmonizedCategories) {
      config.mapping.pairs[cat] = cat;
    }
    std::string mapping = section.get_or("mapping", "");
    std::stringstream ss(mapping);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
      std::size_t colon = pair.find(':');
      if (colon == std::string::npos) {
        throw Error(path + ": malformed mapping entry '" + pair + "'");
      }
      auto trim = [](std::string s) {
        std::size_t a = s.find_first_not_of(" \t");
        std::size_t b = s.find_last_not_of(" \t");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      std::string from = trim(pair.substr(0, colon));
      std::string to = trim(pair.substr(colon + 1));
      if (!kHarmonizedCategories.count(to)) {
        throw Error(path + ": mapping target '" + to +
                    "' is not one of PER/LOC/ORG/MISC");
      }
      config.mapping.pairs[from] = to;
    }
    sources.push_back(std::move(config));
  }
  if (sources.empty()) throw Error(path + ": manifest has no sources");
  return sources;
}

namespace {

bool is_docstart(const Sentence& sentence) {
  return !sentence.tokens.empty() && sentence.tokens.front().form == "-DOCSTART-";
}

std::vector<EntitySpan> decode_by_scheme(const std::vector<std::string>& tags,
                                         TagScheme scheme) {
  return scheme == TagScheme::iob1 ? conll::iob1_to_spans(tags)
                                   : conll::bio_to_spans(tags);
}

}  // namespace

AdaptedSource adapt_source(const SourceConfig& config, std::istream& in) {
  conll::ParsedLayers parsed = conll::parse_conll_layers(in, config.columns);
  bool has_ne2 = std::find(config.columns.begin(), config.columns.end(),
                           conll::Column::ne2) != config.columns.end();
  if (config.nested != NestedPolicy::none && !has_ne2) {
    throw Error("source '" + config.name +
                "': nested policy requires an 'ne2' column");
  }

  Corpus harmonized;
  for (std::size_t si = 0; si < parsed.corpus.sentences.size(); ++si) {
    Sentence sentence = parsed.corpus.sentences[si];
    if (is_docstart(sentence)) continue;

    std::vector<std::string> tags = conll::tags_of(sentence);
    std::vector<EntitySpan> spans;
    if (config.nested == NestedPolicy::none) {
      spans = decode_by_scheme(tags, config.scheme);
    } else {
      LayeredAnnotation ann;
      ann.sentence = sentence;
      ann.layers.push_back(decode_by_scheme(tags, config.scheme));
      ann.layers.push_back(decode_by_scheme(parsed.second_layer[si], config.scheme));
      spans = config.nested == NestedPolicy::top_level
                  ? select_top_level(ann)
                  : filter_nested_longest(ann);
    }
    conll::set_tags(sentence, conll::spans_to_bio(spans, sentence.size()));
    harmonized.sentences.push_back(std::move(sentence));
  }
  harmonized = map_labels(harmonized, config.mapping);

  AdaptedSource result;
  result.name = config.name;
  switch (config.role.kind) {
    case RoleSpec::Kind::train:
      result.train = std::move(harmonized);
      break;
    case RoleSpec::Kind::dev:
      result.dev = std::move(harmonized);
      break;
    case RoleSpec::Kind::test:
      result.test = std::move(harmonized);
      break;
    case RoleSpec::Kind::split: {
      SplitResult split = split_dataset(harmonized, config.role.split);
      result.train = std::move(split.train);
      result.dev = std::move(split.dev);
      result.test = std::move(split.test);
      break;
    }
  }
  return result;
}

AdaptedSource adapt_source(const SourceConfig& config) {
  std::ifstream in(config.path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + config.path);
  try {
    return adapt_source(config, in);
  } catch (const Error& e) {
    throw Error(config.path + ": " + e.what());
  }
}

}  // namespace gner::adapters

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gner/embeddings.hpp"
#include "gner/evaluator.hpp"
#include "gner/normalize.hpp"
#include "gner/tagger.hpp"

namespace gner::experiment {

// Sidecar metadata written next to every embedding file so the
// variant-consistency rule between embeddings and datasets can be
// checked mechanically.
struct EmbeddingMeta {
  std::string variant;
  int dim = 0;
  int window = 0;
  int min_count = 0;
  std::string mode;
  std::uint64_t corpus_hash = 0;
};

std::string meta_path_for(const std::string& embeddings_path);
void write_embedding_meta(const EmbeddingMeta& meta, const std::string& path);
std::optional<EmbeddingMeta> read_embedding_meta(const std::string& path);

struct ExperimentSpec {
  std::string manifest_path;
  // Exactly one of: a pretrained embedding file, or a normalized corpus
  // to train embeddings from.
  std::string embeddings_path;
  std::string embed_corpus;
  embeddings::EmbedConfig embed_config;
  normalize::Variant variant = normalize::Variant::lower;
  tagger::TaggerConfig tagger_config;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6};
  std::string out_dir;
  std::string embeddings_label = "self-trained";
};

ExperimentSpec load_experiment_spec(const std::string& path);

struct TestResult {
  std::string dataset;
  evaluator::RunAggregate aggregate;
};

struct ExperimentResult {
  std::vector<TestResult> by_dataset;
};

// Full pipeline: adapt/merge datasets, apply the variant to their tokens,
// obtain embeddings (load or train), then one tagger run per seed with
// evaluation on every configured test set. Writes models, per-run
// reports, an aggregate report, and the score table (text + CSV) into
// out_dir.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream& log);

}  // namespace gner::experiment

#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gner/mat.hpp"
#include "gner/rng.hpp"

namespace gner::embeddings {

struct Vocabulary {
  // Sorted by descending count, ties by first occurrence in the corpus.
  std::vector<std::pair<std::string, long long>> entries;
  std::unordered_map<std::string, int> index;
  int min_count = 1;

  int size() const { return static_cast<int>(entries.size()); }
  // Returns -1 for out-of-vocabulary tokens.
  int lookup(const std::string& token) const;
  long long total_tokens() const;  // sum of retained counts
};

Vocabulary build_vocab(std::istream& corpus, int min_count);

// Exact unigram^power sampler: P(i) proportional to count_i^power.
class NegativeSampler {
 public:
  explicit NegativeSampler(const Vocabulary& vocab, double power = 0.75);

  double probability(int i) const;
  int sample(Rng& rng) const;

 private:
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

enum class EmbedMode { skipgram, structured };
EmbedMode parse_embed_mode(const std::string& name);
const char* embed_mode_name(EmbedMode m);

struct EmbedConfig {
  int dim = 100;
  int window = 8;
  int min_count = 4;
  int negatives = 5;
  int epochs = 5;
  double initial_lr = 0.025;
  EmbedMode mode = EmbedMode::skipgram;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct EmbeddingTable {
  Vocabulary vocab;
  int dim = 0;
  Mat input_vectors;  // |V| x dim; these are the embeddings
  // One bank for plain skip-gram; 2*window banks (one per relative
  // position, -window..-1 then +1..+window) for structured skip-gram.
  std::vector<Mat> output_banks;
  EmbedMode mode = EmbedMode::skipgram;
  int window = 0;
};

struct SgnsGradients {
  std::vector<double> d_center;
  std::vector<double> d_context;
  std::vector<std::vector<double>> d_negatives;
};

// loss = -log sigmoid(ctx . center) - sum_k log sigmoid(-neg_k . center)
double sgns_pair_loss(std::span<const double> center,
                      std::span<const double> context,
                      const std::vector<std::span<const double>>& negatives,
                      SgnsGradients* grads);

// A corpus that can be re-opened once per epoch.
using CorpusSource = std::function<std::unique_ptr<std::istream>()>;
CorpusSource file_source(const std::string& path);
CorpusSource string_source(std::string text);

struct TrainStats {
  std::vector<double> epoch_mean_loss;  // mean loss per (center,context) pair
  long long pairs = 0;
};

EmbeddingTable train_embeddings(const CorpusSource& source, const EmbedConfig& config,
                                TrainStats* stats = nullptr);

// Text format: header "V D", then one line per token with D floats at 9
// significant digits. Only the input vectors are stored.
void save_embeddings(const EmbeddingTable& table, const std::string& path);
void save_embeddings(const EmbeddingTable& table, std::ostream& out);
EmbeddingTable load_embeddings(const std::string& path);
EmbeddingTable load_embeddings(std::istream& in);

}  // namespace gner::embeddings

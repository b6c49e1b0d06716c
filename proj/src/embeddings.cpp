#include "gner/embeddings.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <thread>

#include "gner/error.hpp"
#include "gner/text.hpp"

namespace gner::embeddings {

int Vocabulary::lookup(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? -1 : it->second;
}

long long Vocabulary::total_tokens() const {
  long long total = 0;
  for (const auto& [token, count] : entries) total += count;
  return total;
}

Vocabulary build_vocab(std::istream& corpus, int min_count) {
  std::unordered_map<std::string, long long> counts;
  std::unordered_map<std::string, long long> first_seen;
  long long ordinal = 0;
  std::string line;
  while (std::getline(corpus, line)) {
    for (const std::string& token : split_fields(line)) {
      auto [it, inserted] = counts.try_emplace(token, 0);
      it->second++;
      if (inserted) first_seen[token] = ordinal++;
    }
  }
  if (corpus.bad()) throw Error("I/O error while reading corpus");

  Vocabulary vocab;
  vocab.min_count = min_count;
  for (const auto& [token, count] : counts) {
    if (count >= min_count) vocab.entries.emplace_back(token, count);
  }
  std::sort(vocab.entries.begin(), vocab.entries.end(),
            [&](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return first_seen.at(a.first) < first_seen.at(b.first);
            });
  for (std::size_t i = 0; i < vocab.entries.size(); ++i) {
    vocab.index[vocab.entries[i].first] = static_cast<int>(i);
  }
  return vocab;
}

NegativeSampler::NegativeSampler(const Vocabulary& vocab, double power) {
  if (vocab.size() == 0) throw Error("cannot build sampler from empty vocabulary");
  probs_.resize(vocab.entries.size());
  double z = 0.0;
  for (std::size_t i = 0; i < vocab.entries.size(); ++i) {
    probs_[i] = std::pow(static_cast<double>(vocab.entries[i].second), power);
    z += probs_[i];
  }
  cumulative_.resize(probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    probs_[i] /= z;
    acc += probs_[i];
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
}

double NegativeSampler::probability(int i) const { return probs_.at(i); }

int NegativeSampler::sample(Rng& rng) const {
  double u = rng.next_double();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<int>(it - cumulative_.begin());
}

EmbedMode parse_embed_mode(const std::string& name) {
  if (name == "skipgram") return EmbedMode::skipgram;
  if (name == "structured") return EmbedMode::structured;
  throw Error("unknown embedding mode: " + name);
}

const char* embed_mode_name(EmbedMode m) {
  return m == EmbedMode::skipgram ? "skipgram" : "structured";
}

namespace {

double log_sigmoid(double x) {
  // Stable in both tails.
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double sgns_pair_loss(std::span<const double> center,
                      std::span<const double> context,
                      const std::vector<std::span<const double>>& negatives,
                      SgnsGradients* grads) {
  const std::size_t dim = center.size();
  if (context.size() != dim) throw Error("sgns: dimension mismatch");
  for (const auto& neg : negatives) {
    if (neg.size() != dim) throw Error("sgns: dimension mismatch");
  }
  if (grads) {
    grads->d_center.assign(dim, 0.0);
    grads->d_context.assign(dim, 0.0);
    grads->d_negatives.assign(negatives.size(), std::vector<double>(dim, 0.0));
  }

  double s_pos = kernels::dot(context.data(), center.data(), dim);
  double loss = -log_sigmoid(s_pos);
  if (grads) {
    double g = sigmoid(s_pos) - 1.0;  // dL/ds_pos
    kernels::axpy(g, context.data(), grads->d_center.data(), dim);
    kernels::axpy(g, center.data(), grads->d_context.data(), dim);
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    double s_neg = kernels::dot(negatives[k].data(), center.data(), dim);
    loss -= log_sigmoid(-s_neg);
    if (grads) {
      double g = sigmoid(s_neg);  // dL/ds_neg
      kernels::axpy(g, negatives[k].data(), grads->d_center.data(), dim);
      kernels::axpy(g, center.data(), grads->d_negatives[k].data(), dim);
    }
  }
  return loss;
}

CorpusSource file_source(const std::string& path) {
  return [path]() -> std::unique_ptr<std::istream> {
    auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*in) throw Error("cannot open corpus: " + path);
    return in;
  };
}

CorpusSource string_source(std::string text) {
  return [text = std::move(text)]() -> std::unique_ptr<std::istream> {
    return std::make_unique<std::istringstream>(text);
  };
}

namespace {

// Relative position -window..-1,+1..+window to bank index 0..2*window-1.
int bank_index(int offset, int window) {
  return offset < 0 ? offset + window : window + offset - 1;
}

struct WorkerContext {
  const EmbedConfig* config;
  EmbeddingTable* table;
  const NegativeSampler* sampler;
  std::atomic<long long>* processed;
  long long total_updates;
  double* loss_sum;       // per-worker
  long long* pair_count;  // per-worker
};

void train_worker(const CorpusSource& source, WorkerContext ctx, int worker_id,
                  int epoch) {
  const EmbedConfig& config = *ctx.config;
  EmbeddingTable& table = *ctx.table;
  const int dim = config.dim;
  Rng rng(config.seed + 0x9E37ull * static_cast<std::uint64_t>(worker_id) +
          0x79B9ull * static_cast<std::uint64_t>(epoch));

  std::unique_ptr<std::istream> in = source();
  std::string line;
  long long sentence_index = -1;
  std::vector<int> ids;
  std::vector<double> d_center(dim);

  while (std::getline(*in, line)) {
    ++sentence_index;
    if (config.workers > 1 && sentence_index % config.workers != worker_id) continue;
    ids.clear();
    for (const std::string& token : split_fields(line)) {
      int id = table.vocab.lookup(token);
      if (id >= 0) ids.push_back(id);  // OOV tokens never cause updates
    }
    for (std::size_t center_pos = 0; center_pos < ids.size(); ++center_pos) {
      long long done = ctx.processed->fetch_add(1, std::memory_order_relaxed);
      double alpha = config.initial_lr *
                     (1.0 - static_cast<double>(done) /
                                static_cast<double>(ctx.total_updates));
      alpha = std::max(alpha, config.initial_lr * 1e-4);

      double* center = table.input_vectors.row(ids[center_pos]);
      for (int offset = -config.window; offset <= config.window; ++offset) {
        if (offset == 0) continue;
        long long context_pos = static_cast<long long>(center_pos) + offset;
        if (context_pos < 0 || context_pos >= static_cast<long long>(ids.size()))
          continue;
        int target = ids[static_cast<std::size_t>(context_pos)];
        Mat& bank = table.output_banks[config.mode == EmbedMode::structured
                                           ? bank_index(offset, config.window)
                                           : 0];
        std::fill(d_center.begin(), d_center.end(), 0.0);
        double pair_loss = 0.0;
        // Positive example.
        {
          double* ctxv = bank.row(target);
          double s = kernels::dot(ctxv, center, dim);
          pair_loss -= log_sigmoid(s);
          double g = sigmoid(s) - 1.0;
          kernels::axpy(g, ctxv, d_center.data(), dim);
          kernels::axpy(-alpha * g, center, ctxv, dim);
        }
        // Negatives; a draw that hits the target is skipped, as in word2vec.
        for (int k = 0; k < config.negatives; ++k) {
          int neg = ctx.sampler->sample(rng);
          if (neg == target) continue;
          double* negv = bank.row(neg);
          double s = kernels::dot(negv, center, dim);
          pair_loss -= log_sigmoid(-s);
          double g = sigmoid(s);
          kernels::axpy(g, negv, d_center.data(), dim);
          kernels::axpy(-alpha * g, center, negv, dim);
        }
        kernels::axpy(-alpha, d_center.data(), center, dim);
        *ctx.loss_sum += pair_loss;
        ++*ctx.pair_count;
      }
    }
  }
}

}  // namespace

EmbeddingTable train_embeddings(const CorpusSource& source, const EmbedConfig& config,
                                TrainStats* stats) {
  if (config.dim < 1 || config.window < 1 || config.negatives < 1 ||
      config.epochs < 1 || config.initial_lr <= 0.0) {
    throw Error("invalid embedding configuration");
  }
  EmbeddingTable table;
  {
    std::unique_ptr<std::istream> in = source();
    table.vocab = build_vocab(*in, config.min_count);
  }
  if (table.vocab.size() == 0) throw Error("empty vocabulary after min-count filtering");
  table.dim = config.dim;
  table.mode = config.mode;
  table.window = config.window;

  const int v = table.vocab.size();
  table.input_vectors = Mat(v, config.dim);
  Rng init_rng(config.seed);
  double bound = 0.5 / config.dim;
  for (double& x : table.input_vectors.data) x = init_rng.uniform(-bound, bound);
  int banks = config.mode == EmbedMode::structured ? 2 * config.window : 1;
  table.output_banks.assign(banks, Mat(v, config.dim));

  NegativeSampler sampler(table.vocab);
  long long total_updates =
      static_cast<long long>(config.epochs) * table.vocab.total_tokens();
  std::atomic<long long> processed{0};

  if (stats) {
    stats->epoch_mean_loss.clear();
    stats->pairs = 0;
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    int workers = std::max(1, config.workers);
    std::vector<double> loss_sums(workers, 0.0);
    std::vector<long long> pair_counts(workers, 0);
    auto make_ctx = [&](int w) {
      return WorkerContext{&config,       &table,         &sampler,
                           &processed,    total_updates,  &loss_sums[w],
                           &pair_counts[w]};
    };
    if (workers == 1) {
      train_worker(source, make_ctx(0), 0, epoch);
    } else {
      std::vector<std::thread> threads;
      for (int w = 0; w < workers; ++w) {
        threads.emplace_back(train_worker, std::cref(source), make_ctx(w), w, epoch);
      }
      for (std::thread& t : threads) t.join();
    }
    if (stats) {
      double loss = 0.0;
      long long pairs = 0;
      for (int w = 0; w < workers; ++w) {
        loss += loss_sums[w];
        pairs += pair_counts[w];
      }
      stats->epoch_mean_loss.push_back(pairs > 0 ? loss / pairs : 0.0);
      stats->pairs += pairs;
    }
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, std::ostream& out) {
  out << table.vocab.size() << ' ' << table.dim << '\n';
  char buf[64];
  for (int i = 0; i < table.vocab.size(); ++i) {
    out << table.vocab.entries[i].first;
    const double* row = table.input_vectors.row(i);
    for (int d = 0; d < table.dim; ++d) {
      std::snprintf(buf, sizeof(buf), "%.9g", row[d]);
      out << ' ' << buf;
      // Integral values keep a decimal point ("-1.0", not "-1").
      if (std::string_view(buf).find_first_of(".e") == std::string_view::npos) {
        out << ".0";
      }
    }
    out << '\n';
  }
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  save_embeddings(table, out);
  if (!out) throw Error("write failed: " + path);
}

EmbeddingTable load_embeddings(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error("embedding file: missing header");
  long long v, d;
  {
    std::istringstream hs(header);
    std::string extra;
    if (!(hs >> v >> d) || (hs >> extra) || v < 0 || d <= 0) {
      throw Error("embedding file: malformed header: " + header);
    }
  }
  EmbeddingTable table;
  table.dim = static_cast<int>(d);
  table.input_vectors = Mat(static_cast<int>(v), table.dim);
  table.vocab.min_count = 0;

  std::string line;
  long long row = 0;
  while (std::getline(in, line)) {
    if (is_blank_line(line)) continue;
    if (row >= v) throw Error("embedding file: more rows than header declares");
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != static_cast<std::size_t>(d) + 1) {
      throw Error("embedding file: row " + std::to_string(row) + " has " +
                  std::to_string(fields.size() - 1) + " values, expected " +
                  std::to_string(d));
    }
    const std::string& token = fields[0];
    if (table.vocab.index.count(token)) {
      throw Error("embedding file: duplicate token: " + token);
    }
    table.vocab.index[token] = static_cast<int>(row);
    table.vocab.entries.emplace_back(token, 0);
    double* dst = table.input_vectors.row(static_cast<int>(row));
    for (long long c = 0; c < d; ++c) {
      try {
        dst[c] = std::stod(fields[static_cast<std::size_t>(c) + 1]);
      } catch (const std::exception&) {
        throw Error("embedding file: bad float in row " + std::to_string(row));
      }
    }
    ++row;
  }
  if (row != v) {
    throw Error("embedding file: header declares " + std::to_string(v) +
                " rows, found " + std::to_string(row));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  try {
    return load_embeddings(in);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace gner::embeddings

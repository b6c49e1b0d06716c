#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "gner/embeddings.hpp"
#include "gner/error.hpp"
#include "gner/text.hpp"
#include "helpers.hpp"

using namespace gner;
using namespace gner::embeddings;

TEST_CASE("build_vocab applies the min-count threshold") {
  std::istringstream in("a a a a b b b");
  Vocabulary vocab = build_vocab(in, 4);
  REQUIRE(vocab.size() == 1);
  CHECK(vocab.entries[0].first == "a");
  CHECK(vocab.entries[0].second == 4);
  CHECK(vocab.lookup("b") == -1);
}

TEST_CASE("build_vocab on empty input") {
  std::istringstream in("");
  CHECK(build_vocab(in, 1).size() == 0);
}

TEST_CASE("build_vocab equals a brute-force frequency map at min_count 1") {
  Rng rng(31337);
  const std::vector<std::string> words = {"der", "die", "das", "und", "Haus",
                                          "klein", "groß"};
  for (int it = 0; it < 50; ++it) {
    std::ostringstream corpus;
    std::map<std::string, long long> expected;
    int lines = 1 + static_cast<int>(rng.next_below(10));
    for (int l = 0; l < lines; ++l) {
      int len = static_cast<int>(rng.next_below(12));
      for (int t = 0; t < len; ++t) {
        const std::string& w = words[rng.next_below(words.size())];
        corpus << w << ' ';
        ++expected[w];
      }
      corpus << '\n';
    }
    std::istringstream in(corpus.str());
    Vocabulary vocab = build_vocab(in, 1);
    CHECK(vocab.size() == static_cast<int>(expected.size()));
    for (const auto& [token, count] : vocab.entries) {
      CHECK(expected.at(token) == count);
    }
    // Ordering invariant: descending count.
    for (int i = 1; i < vocab.size(); ++i) {
      CHECK(vocab.entries[i - 1].second >= vocab.entries[i].second);
    }
  }
}

TEST_CASE("vocabulary ties break by first occurrence") {
  std::istringstream in("zebra apfel zebra apfel birne");
  Vocabulary vocab = build_vocab(in, 1);
  REQUIRE(vocab.size() == 3);
  CHECK(vocab.entries[0].first == "zebra");
  CHECK(vocab.entries[1].first == "apfel");
  CHECK(vocab.entries[2].first == "birne");
}

TEST_CASE("negative sampling distribution follows count^0.75") {
  std::istringstream in("a a a a a a a a b");
  Vocabulary vocab = build_vocab(in, 1);
  NegativeSampler sampler(vocab);
  // 8^0.75 / (8^0.75 + 1) = 0.826293...
  double expected = std::pow(8.0, 0.75) / (std::pow(8.0, 0.75) + 1.0);
  CHECK(sampler.probability(0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(sampler.probability(0) == doctest::Approx(0.8263).epsilon(1e-4));

  std::istringstream single("nur nur");
  NegativeSampler one(build_vocab(single, 1));
  CHECK(one.probability(0) == doctest::Approx(1.0));

  std::istringstream uniform("a b c a b c");
  NegativeSampler three(build_vocab(uniform, 1));
  for (int i = 0; i < 3; ++i) {
    CHECK(three.probability(i) == doctest::Approx(1.0 / 3.0));
  }

  std::istringstream nothing("");
  CHECK_THROWS_AS(NegativeSampler(build_vocab(nothing, 1)), Error);

  // Empirical draw frequencies approach the exact distribution.
  Rng rng(5);
  int hits = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) hits += (sampler.sample(rng) == 0);
  CHECK(static_cast<double>(hits) / draws == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("sgns_pair_loss values") {
  // Orthogonal context: loss is ln 2.
  std::vector<double> center = {1.0, 0.0};
  std::vector<double> context = {0.0, 1.0};
  double loss = sgns_pair_loss(center, context, {}, nullptr);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Strongly aligned pair: positive term decays toward zero.
  std::vector<double> big = {50.0, 0.0};
  CHECK(sgns_pair_loss(big, big, {}, nullptr) < 1e-9);

  std::vector<double> wrong_dim = {1.0};
  CHECK_THROWS_AS(sgns_pair_loss(center, wrong_dim, {}, nullptr), Error);
}

TEST_CASE("sgns_pair_loss gradients match finite differences") {
  Rng rng(123);
  const int dim = 7;
  for (int it = 0; it < 100; ++it) {
    std::vector<double> center(dim), context(dim);
    int n_neg = static_cast<int>(rng.next_below(4));
    std::vector<std::vector<double>> negatives(n_neg, std::vector<double>(dim));
    for (double& x : center) x = rng.uniform(-1.5, 1.5);
    for (double& x : context) x = rng.uniform(-1.5, 1.5);
    for (auto& neg : negatives) {
      for (double& x : neg) x = rng.uniform(-1.5, 1.5);
    }
    auto spans = [&]() {
      std::vector<std::span<const double>> s;
      for (const auto& neg : negatives) s.emplace_back(neg);
      return s;
    };
    SgnsGradients grads;
    sgns_pair_loss(center, context, spans(), &grads);

    auto loss_fn = [&]() { return sgns_pair_loss(center, context, spans(), nullptr); };
    for (int d = 0; d < dim; ++d) {
      CHECK(testutil::rel_err(grads.d_center[d],
                              testutil::finite_diff(&center[d], loss_fn)) < 1e-6);
      CHECK(testutil::rel_err(grads.d_context[d],
                              testutil::finite_diff(&context[d], loss_fn)) < 1e-6);
      for (int k = 0; k < n_neg; ++k) {
        CHECK(testutil::rel_err(grads.d_negatives[k][d],
                                testutil::finite_diff(&negatives[k][d], loss_fn)) < 1e-6);
      }
    }
  }
}

namespace {

// Two interchangeable token clusters; tokens within a cluster share
// contexts, so their vectors should end up closer to each other.
std::string cluster_corpus(Rng& rng, int lines) {
  const std::vector<std::string> cluster_a = {"apfel", "birne", "kirsche"};
  const std::vector<std::string> cluster_b = {"hammer", "zange", "säge"};
  std::ostringstream out;
  for (int i = 0; i < lines; ++i) {
    bool pick_a = rng.next_double() < 0.5;
    const auto& nouns = pick_a ? cluster_a : cluster_b;
    const char* verb = pick_a ? "essen" : "bauen";
    const char* ctx = pick_a ? "obst" : "werkzeug";
    out << "wir " << verb << ' ' << nouns[rng.next_below(nouns.size())] << ' '
        << ctx << '\n';
  }
  return out.str();
}

double cosine(const double* a, const double* b, int dim) {
  double num = kernels::dot(a, b, dim);
  double da = std::sqrt(kernels::dot(a, a, dim));
  double db = std::sqrt(kernels::dot(b, b, dim));
  return num / (da * db);
}

}  // namespace

TEST_CASE("training separates token clusters and loss decreases") {
  Rng corpus_rng(77);
  std::string corpus = cluster_corpus(corpus_rng, 600);

  EmbedConfig config;
  config.dim = 16;
  config.window = 2;
  config.min_count = 1;
  config.negatives = 5;
  config.epochs = 5;
  config.seed = 42;
  config.mode = EmbedMode::skipgram;

  TrainStats stats;
  EmbeddingTable table = train_embeddings(string_source(corpus), config, &stats);
  REQUIRE(stats.epoch_mean_loss.size() == 5);
  // Mean epoch loss non-increasing over the first epochs (1% slack).
  CHECK(stats.epoch_mean_loss[1] <= stats.epoch_mean_loss[0] * 1.01);
  CHECK(stats.epoch_mean_loss[2] <= stats.epoch_mean_loss[1] * 1.01);

  auto vec = [&](const char* w) {
    int id = table.vocab.lookup(w);
    REQUIRE(id >= 0);
    return table.input_vectors.row(id);
  };
  // All vectors finite after training.
  for (double x : table.input_vectors.data) CHECK(std::isfinite(x));
  for (const Mat& bank : table.output_banks) {
    for (double x : bank.data) CHECK(std::isfinite(x));
  }

  std::vector<const char*> a = {"apfel", "birne", "kirsche"};
  std::vector<const char*> b = {"hammer", "zange", "säge"};
  double intra = 0.0, inter = 0.0;
  int intra_n = 0, inter_n = 0;
  for (auto x : a)
    for (auto y : a)
      if (x != y) { intra += cosine(vec(x), vec(y), config.dim); ++intra_n; }
  for (auto x : b)
    for (auto y : b)
      if (x != y) { intra += cosine(vec(x), vec(y), config.dim); ++intra_n; }
  for (auto x : a)
    for (auto y : b) { inter += cosine(vec(x), vec(y), config.dim); ++inter_n; }
  CHECK(intra / intra_n > inter / inter_n);
}

TEST_CASE("training on an empty vocabulary is rejected") {
  EmbedConfig config;
  config.min_count = 5;
  CHECK_THROWS_AS(train_embeddings(string_source("a b c\n"), config), Error);
  config.dim = 0;
  CHECK_THROWS_AS(train_embeddings(string_source("a a a a a\n"), config), Error);
}

TEST_CASE("structured mode allocates one bank per relative position") {
  std::string corpus = "a b c d e a b c d e a b c d e\n";
  EmbedConfig config;
  config.dim = 4;
  config.window = 3;
  config.min_count = 1;
  config.epochs = 1;
  config.mode = EmbedMode::structured;
  EmbeddingTable table = train_embeddings(string_source(corpus), config);
  CHECK(table.output_banks.size() == 6);

  config.mode = EmbedMode::skipgram;
  EmbeddingTable plain = train_embeddings(string_source(corpus), config);
  CHECK(plain.output_banks.size() == 1);
}

TEST_CASE("fixed seed single worker is bit-reproducible") {
  Rng corpus_rng(3);
  std::string corpus = cluster_corpus(corpus_rng, 100);
  EmbedConfig config;
  config.dim = 8;
  config.window = 2;
  config.min_count = 1;
  config.epochs = 2;
  config.seed = 9;
  config.mode = EmbedMode::structured;

  EmbeddingTable t1 = train_embeddings(string_source(corpus), config);
  EmbeddingTable t2 = train_embeddings(string_source(corpus), config);
  CHECK(t1.input_vectors == t2.input_vectors);
  REQUIRE(t1.output_banks.size() == t2.output_banks.size());
  for (std::size_t i = 0; i < t1.output_banks.size(); ++i) {
    CHECK(t1.output_banks[i] == t2.output_banks[i]);
  }
}

TEST_CASE("OOV tokens never cause updates") {
  // "rare" falls below min_count: vectors of surviving tokens must match
  // a run on a corpus with the OOV token deleted.
  std::string with_oov = "a b a b rare a b a b\n";
  std::string without = "a b a b a b a b\n";
  EmbedConfig config;
  config.dim = 4;
  config.window = 1;
  config.min_count = 2;
  config.epochs = 1;
  config.seed = 4;
  EmbeddingTable t1 = train_embeddings(string_source(with_oov), config);
  EmbeddingTable t2 = train_embeddings(string_source(without), config);
  REQUIRE(t1.vocab.size() == t2.vocab.size());
  CHECK(t1.input_vectors.data == t2.input_vectors.data);
}

TEST_CASE("multi-worker training completes with finite vectors") {
  // Asynchronous updates are nondeterministic by contract; this only
  // checks that the shared-parameter path is sound.
  Rng corpus_rng(11);
  std::string corpus = cluster_corpus(corpus_rng, 200);
  EmbedConfig config;
  config.dim = 8;
  config.window = 2;
  config.min_count = 1;
  config.epochs = 2;
  config.workers = 2;
  EmbeddingTable table = train_embeddings(string_source(corpus), config);
  for (double x : table.input_vectors.data) CHECK(std::isfinite(x));
}

TEST_CASE("save/load round trip") {
  std::istringstream vin("a b a b");
  EmbeddingTable table;
  table.vocab = build_vocab(vin, 1);
  table.dim = 2;
  table.input_vectors = Mat(2, 2);
  table.input_vectors.at(0, 0) = 0.5;
  table.input_vectors.at(0, 1) = -1.0;
  table.input_vectors.at(1, 0) = 0.123456789123;
  table.input_vectors.at(1, 1) = -9.87654321e-5;

  std::ostringstream out;
  save_embeddings(table, out);
  CHECK(out.str().substr(0, 4) == "2 2\n");
  CHECK(out.str().find("a 0.5 -1.0\n") != std::string::npos);

  std::istringstream in(out.str());
  EmbeddingTable loaded = load_embeddings(in);
  REQUIRE(loaded.dim == 2);
  REQUIRE(loaded.vocab.size() == 2);
  CHECK(loaded.vocab.entries[0].first == "a");
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      CHECK(std::abs(loaded.input_vectors.at(r, c) - table.input_vectors.at(r, c)) <
            1e-8);
    }
  }
}

TEST_CASE("load_embeddings rejects malformed input") {
  auto load_str = [](const std::string& s) {
    std::istringstream in(s);
    return load_embeddings(in);
  };
  CHECK_THROWS_AS(load_str(""), Error);
  CHECK_THROWS_AS(load_str("kaputt\n"), Error);
  CHECK_THROWS_AS(load_str("2 3\na 1 2 3\n"), Error);          // missing row
  CHECK_THROWS_AS(load_str("1 3\na 1 2\n"), Error);            // arity
  CHECK_THROWS_AS(load_str("2 2\na 1 2\na 3 4\n"), Error);     // duplicate
  CHECK_THROWS_AS(load_str("1 2\na 1 zwei\n"), Error);         // bad float
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gner/tagger.hpp"
#include "helpers.hpp"

using namespace gner;
using namespace gner::tagger;

namespace {

conll::Sentence make_sentence(std::initializer_list<std::pair<const char*, const char*>> items) {
  conll::Sentence s;
  for (const auto& [form, tag] : items) {
    s.tokens.push_back(conll::Token{form, {}, {}, tag});
  }
  return s;
}

// Deterministic token -> label rule over a small vocabulary.
conll::Corpus rule_corpus(Rng& rng, int sentences) {
  const std::vector<std::pair<std::string, std::string>> lexicon = {
      {"Anna", "B-PER"}, {"Berlin", "B-LOC"}, {"Firma", "B-ORG"},
      {"geht", "O"},     {"nach", "O"},       {"die", "O"},
      {"heute", "O"},    {"müde", "O"}};
  conll::Corpus corpus;
  for (int i = 0; i < sentences; ++i) {
    conll::Sentence s;
    int len = 3 + static_cast<int>(rng.next_below(5));
    for (int t = 0; t < len; ++t) {
      const auto& [form, tag] = lexicon[rng.next_below(lexicon.size())];
      s.tokens.push_back(conll::Token{form, {}, {}, tag});
    }
    corpus.sentences.push_back(s);
  }
  return corpus;
}

TaggerConfig tiny_config() {
  TaggerConfig config;
  config.char_dim = 4;
  config.word_dim = 8;
  config.crf_hidden = 6;
  config.epochs = 3;
  config.seed = 11;
  return config;
}

}  // namespace

TEST_CASE("label set construction") {
  conll::Corpus corpus;
  corpus.sentences.push_back(make_sentence({{"a", "B-PER"}, {"b", "O"}, {"c", "B-LOC"}}));
  LabelSet labels = LabelSet::from_corpus(corpus);
  // O first, categories alphabetical, B before I, I closed over B.
  CHECK(labels.labels == std::vector<std::string>{"O", "B-LOC", "I-LOC", "B-PER", "I-PER"});
  CHECK(labels.find("I-PER") == 4);
  CHECK(labels.find("B-MISC") == -1);
}

TEST_CASE("encode_chars shape and determinism") {
  conll::Corpus corpus;
  corpus.sentences.push_back(make_sentence({{"Größe", "O"}, {"Haus", "B-LOC"}}));
  TaggerConfig config;  // paper dimensions: d_c = 25
  Rng rng(1);
  TaggerParams params = init_params(corpus, nullptr, config, rng);

  std::vector<double> v1 = encode_chars("Größe", params);
  CHECK(v1.size() == 50);
  std::vector<double> v2 = encode_chars("Größe", params);
  CHECK(v1 == v2);
  // Unknown characters fall back to the UNK row instead of failing.
  CHECK(encode_chars("Дом", params).size() == 50);
  CHECK_THROWS_AS(encode_chars("", params), Error);
}

TEST_CASE("single-char word matches a direct one-step composition") {
  conll::Corpus corpus;
  corpus.sentences.push_back(make_sentence({{"a", "O"}}));
  TaggerConfig config = tiny_config();
  Rng rng(3);
  TaggerParams params = init_params(corpus, nullptr, config, rng);

  std::vector<double> enc = encode_chars("a", params);
  REQUIRE(enc.size() == static_cast<std::size_t>(2 * config.char_dim));
  // Both directions see the same single input row.
  int id = params.charset.lookup(U'a');
  std::vector<double> x(params.char_emb.row(id), params.char_emb.row(id) + config.char_dim);
  auto fw = lstm_forward(params.char_fw, {x}, nullptr);
  auto bw = lstm_forward(params.char_bw, {x}, nullptr);
  for (int j = 0; j < config.char_dim; ++j) {
    CHECK(enc[j] == doctest::Approx(fw[0][j]).epsilon(1e-14));
    CHECK(enc[config.char_dim + j] == doctest::Approx(bw[0][j]).epsilon(1e-14));
  }
}

TEST_CASE("encode_sentence shape and determinism") {
  // All four categories present: the 9-label set O + B/I x 4.
  conll::Corpus corpus;
  corpus.sentences.push_back(make_sentence({{"Anna", "B-PER"},
                                            {"Berlin", "B-LOC"},
                                            {"Firma", "B-ORG"},
                                            {"Olympia", "B-MISC"},
                                            {"geht", "O"}}));
  TaggerConfig config = tiny_config();
  Rng rng(17);
  TaggerParams params = init_params(corpus, nullptr, config, rng);
  REQUIRE(params.labels.size() == 9);

  conll::Sentence seven;
  for (int i = 0; i < 7; ++i) seven.tokens.push_back(conll::Token{"Anna", {}, {}, "B-PER"});
  Mat e = encode_sentence(seven, params);
  CHECK(e.rows == 7);
  CHECK(e.cols == 9);

  Mat e2 = encode_sentence(seven, params);
  CHECK(e == e2);

  // With dropout, an RNG is mandatory.
  CHECK_THROWS_AS(encode_sentence(seven, params, true, nullptr), Error);
}

TEST_CASE("one-token sentence equals the layer-by-layer composition") {
  conll::Corpus corpus;
  corpus.sentences.push_back(make_sentence({{"Anna", "B-PER"}}));
  TaggerConfig config = tiny_config();
  Rng rng(23);
  TaggerParams params = init_params(corpus, nullptr, config, rng);

  conll::Sentence s = make_sentence({{"Anna", "B-PER"}});
  Mat e = encode_sentence(s, params);

  // Direct composition: lookup, char encoder, one biLSTM step each
  // direction, projection.
  std::vector<double> x;
  const double* row = params.word_emb.row(params.vocab.lookup("Anna"));
  x.insert(x.end(), row, row + config.word_dim);
  std::vector<double> cv = encode_chars("Anna", params);
  x.insert(x.end(), cv.begin(), cv.end());
  auto fw = lstm_forward(params.word_fw, {x}, nullptr);
  auto bw = lstm_forward(params.word_bw, {x}, nullptr);
  std::vector<double> h;
  h.insert(h.end(), fw[0].begin(), fw[0].end());
  h.insert(h.end(), bw[0].begin(), bw[0].end());
  std::vector<double> z1(config.crf_hidden);
  for (int j = 0; j < config.crf_hidden; ++j) z1[j] = params.proj_b.at(0, j);
  matvec_acc(params.proj_w, h.data(), z1.data());
  for (double& v : z1) v = std::tanh(v);
  std::vector<double> scores(params.labels.size());
  for (int j = 0; j < params.labels.size(); ++j) scores[j] = params.out_b.at(0, j);
  matvec_acc(params.out_w, z1.data(), scores.data());

  for (int j = 0; j < params.labels.size(); ++j) {
    CHECK(e.at(0, j) == doctest::Approx(scores[j]).epsilon(1e-14));
  }
}

TEST_CASE("full-model gradients match finite differences (tiny model)") {
  Rng crng(29);
  conll::Corpus corpus = rule_corpus(crng, 6);
  TaggerConfig config = tiny_config();

  for (int it = 0; it < 3; ++it) {
    Rng rng(100 + it);
    TaggerParams params = init_params(corpus, nullptr, config, rng);
    const conll::Sentence& sentence = corpus.sentences[it % corpus.sentences.size()];
    std::vector<int> gold;
    for (const auto& token : sentence.tokens) {
      gold.push_back(params.labels.find(token.ne_tag));
    }

    TaggerGrads grads = TaggerGrads::zeros_like(params);
    sentence_backward(params, sentence, gold, nullptr, grads);
    auto loss_fn = [&]() { return sentence_loss(params, sentence, gold); };

    double worst = 0.0;
    std::vector<Mat*> param_mats, grad_mats;
    params.for_each_tensor([&](const char*, Mat& m) { param_mats.push_back(&m); });
    grads.for_each_tensor([&](const char*, Mat& m) { grad_mats.push_back(&m); });
    REQUIRE(param_mats.size() == grad_mats.size());
    for (std::size_t m = 0; m < param_mats.size(); ++m) {
      for (std::size_t i = 0; i < param_mats[m]->data.size(); ++i) {
        double fd = testutil::finite_diff4(&param_mats[m]->data[i], loss_fn);
        double an = grad_mats[m]->data[i];
        if (std::abs(fd) < 1e-8 && std::abs(an) < 1e-8) continue;
        worst = std::max(worst, testutil::rel_err(an, fd));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("constrained decoding always yields valid BIO") {
  Rng crng(31);
  conll::Corpus corpus = rule_corpus(crng, 8);
  TaggerConfig config = tiny_config();

  // Untrained (random) parameters push the raw argmax into invalid
  // regions; the decode-time mask must still produce valid BIO.
  for (int model = 0; model < 5; ++model) {
    Rng rng(1000 + model);
    TaggerParams params = init_params(corpus, nullptr, config, rng);
    for (int trial = 0; trial < 40; ++trial) {
      conll::Sentence s;
      int len = 1 + static_cast<int>(crng.next_below(7));
      for (int t = 0; t < len; ++t) {
        s.tokens.push_back(conll::Token{
            corpus.sentences[crng.next_below(corpus.sentences.size())].tokens[0].form,
            {}, {}, "O"});
      }
      std::vector<std::string> tags = tag(s, params);
      CHECK(tags.size() == s.tokens.size());
      CHECK(conll::validate_bio(tags).empty());
      CHECK(tag(s, params) == tags);  // deterministic
    }
  }
}

TEST_CASE("training is reproducible and records the config snapshot") {
  Rng crng(37);
  conll::Corpus train = rule_corpus(crng, 12);
  conll::Corpus dev = rule_corpus(crng, 6);

  TaggerConfig config = tiny_config();
  config.epochs = 3;

  std::vector<EpochLog> h1, h2;
  std::ostringstream log;
  TaggerParams p1 = train_tagger(train, dev, nullptr, config, &log, &h1);
  TaggerParams p2 = train_tagger(train, dev, nullptr, config, nullptr, &h2);
  // One structured line per epoch.
  std::string log_text = log.str();
  CHECK(log_text.find("epoch=1 train_loss=") != std::string::npos);
  CHECK(log_text.find(" dev_f1=") != std::string::npos);
  CHECK(std::count(log_text.begin(), log_text.end(), '\n') == config.epochs);
  REQUIRE(h1.size() == h2.size());
  for (std::size_t i = 0; i < h1.size(); ++i) {
    CHECK(h1[i].train_loss == h2[i].train_loss);
    CHECK(h1[i].dev_f1 == h2[i].dev_f1);
  }
  CHECK(p1.word_emb == p2.word_emb);
  CHECK(p1.transitions == p2.transitions);

  // Defaults carry the paper's training parameters.
  TaggerConfig defaults;
  CHECK(defaults.epochs == 100);
  CHECK(defaults.batch_size == 1);
  CHECK(defaults.dropout == 0.5);
  CHECK(defaults.lr == 0.005);
  CHECK(p1.config.lr == config.lr);
  CHECK(p1.config.dropout == config.dropout);
}

TEST_CASE("pretrained embeddings are consumed and can be frozen") {
  Rng crng(41);
  conll::Corpus train = rule_corpus(crng, 8);

  embeddings::EmbeddingTable table;
  {
    std::istringstream vin("Anna Berlin neuwort Anna Berlin neuwort");
    table.vocab = embeddings::build_vocab(vin, 1);
  }
  table.dim = 8;
  table.input_vectors = Mat(3, 8);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 8; ++c) table.input_vectors.at(r, c) = 0.01 * (r + 1);
  }

  TaggerConfig config = tiny_config();
  config.word_dim = 8;
  config.epochs = 1;
  config.update_embeddings = false;
  Rng rng(7);
  TaggerParams params = init_params(train, &table, config, rng);

  // Pretrained rows initialized from the table; vocabulary extended by
  // embedding-only tokens.
  int anna = params.vocab.lookup("Anna");
  REQUIRE(anna > 0);
  CHECK(params.pretrained[anna] == 1);
  CHECK(params.word_emb.at(anna, 0) == doctest::Approx(0.01));
  int neu = params.vocab.lookup("neuwort");
  CHECK(neu > 0);
  int unknown = params.vocab.lookup("nichtda");
  CHECK(unknown == 0);  // UNK row

  TaggerParams trained = train_tagger(train, conll::Corpus{}, &table, config);
  int anna2 = trained.vocab.lookup("Anna");
  for (int c = 0; c < 8; ++c) {
    CHECK(trained.word_emb.at(anna2, c) == doctest::Approx(0.01));  // frozen
  }

  // Dimension mismatch is rejected.
  config.word_dim = 5;
  Rng rng2(7);
  CHECK_THROWS_AS(init_params(train, &table, config, rng2), Error);
}

TEST_CASE("cap feature widens the input and changes nothing else") {
  conll::Corpus corpus;
  corpus.sentences.push_back(
      make_sentence({{"EU", "B-ORG"}, {"klein", "O"}, {"Groß", "O"}, {"iPhone", "O"}}));
  TaggerConfig config = tiny_config();
  config.cap_feature = true;
  Rng rng(2);
  TaggerParams params = init_params(corpus, nullptr, config, rng);
  CHECK(params.input_dim() == config.word_dim + 2 * config.char_dim + 4);
  Mat e = encode_sentence(corpus.sentences[0], params);
  CHECK(e.rows == 4);
}

TEST_CASE("model save/load round trip is bit-exact") {
  Rng crng(53);
  conll::Corpus train = rule_corpus(crng, 10);
  TaggerConfig config = tiny_config();
  config.epochs = 2;
  TaggerParams params = train_tagger(train, train, nullptr, config);

  std::ostringstream buffer;
  save_model(params, buffer);
  std::string bytes = buffer.str();

  std::istringstream in(bytes);
  TaggerParams loaded = load_model(in);

  CHECK(loaded.labels.labels == params.labels.labels);
  CHECK(loaded.vocab.words == params.vocab.words);
  CHECK(loaded.charset.chars == params.charset.chars);
  bool tensors_equal = true;
  std::vector<const Mat*> a, b;
  params.for_each_tensor([&](const char*, const Mat& m) { a.push_back(&m); });
  loaded.for_each_tensor([&](const char*, const Mat& m) { b.push_back(&m); });
  for (std::size_t i = 0; i < a.size(); ++i) tensors_equal &= (*a[i] == *b[i]);
  CHECK(tensors_equal);

  // Identical predictions on fresh sentences.
  conll::Corpus sample = rule_corpus(crng, 20);
  for (const conll::Sentence& s : sample.sentences) {
    CHECK(tag(s, params) == tag(s, loaded));
  }

  // A corrupted byte fails the checksum.
  std::string corrupted = bytes;
  corrupted[corrupted.size() / 2] ^= 0x01;
  std::istringstream bad(corrupted);
  CHECK_THROWS_AS(load_model(bad), Error);

  // Truncation is detected.
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_model(truncated), Error);

  // Untrained parameters are loadable too.
  Rng rng(3);
  TaggerParams fresh = init_params(train, nullptr, config, rng);
  std::ostringstream buffer2;
  save_model(fresh, buffer2);
  std::istringstream in2(buffer2.str());
  CHECK_NOTHROW(load_model(in2));
}

#include "gner/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "gner/error.hpp"
#include "gner/evaluator.hpp"
#include "gner/text.hpp"

namespace gner::tagger {

int LabelSet::find(const std::string& label) const {
  auto it = index.find(label);
  return it == index.end() ? -1 : it->second;
}

LabelSet LabelSet::from_corpus(const conll::Corpus& corpus) {
  std::set<std::string> categories;
  for (const conll::Sentence& sentence : corpus.sentences) {
    for (const conll::Token& token : sentence.tokens) {
      auto parts = conll::split_tag(token.ne_tag);
      if (!parts) throw Error("malformed tag in training data: " + token.ne_tag);
      if (parts->prefix != 'O') categories.insert(parts->category);
    }
  }
  std::vector<std::string> labels = {"O"};
  for (const std::string& category : categories) {
    labels.push_back("B-" + category);
    labels.push_back("I-" + category);
  }
  return from_labels(std::move(labels));
}

LabelSet LabelSet::from_labels(std::vector<std::string> labels) {
  LabelSet set;
  set.labels = std::move(labels);
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    set.index[set.labels[i]] = static_cast<int>(i);
  }
  if (!set.index.count("O")) throw Error("label set must contain O");
  return set;
}

int Charset::lookup(char32_t cp) const {
  auto it = index.find(cp);
  return it == index.end() ? 0 : it->second;
}

Charset Charset::from_corpus(const conll::Corpus& corpus) {
  std::set<char32_t> seen;
  std::vector<char32_t> cps;
  for (const conll::Sentence& sentence : corpus.sentences) {
    for (const conll::Token& token : sentence.tokens) {
      if (!utf8_decode(token.form, &cps)) {
        throw Error("invalid UTF-8 in token form: " + token.form);
      }
      seen.insert(cps.begin(), cps.end());
    }
  }
  Charset charset;
  charset.chars.push_back(U'\0');  // UNK slot
  for (char32_t cp : seen) {
    charset.index[cp] = static_cast<int>(charset.chars.size());
    charset.chars.push_back(cp);
  }
  return charset;
}

int WordVocab::lookup(const std::string& word) const {
  auto it = index.find(word);
  return it == index.end() ? 0 : it->second;
}

TaggerGrads TaggerGrads::zeros_like(const TaggerParams& params) {
  TaggerGrads grads;
  std::vector<const Mat*> sources;
  params.for_each_tensor([&](const char*, const Mat& m) { sources.push_back(&m); });
  std::size_t i = 0;
  grads.for_each_tensor([&](const char*, Mat& m) {
    m = Mat(sources[i]->rows, sources[i]->cols);
    ++i;
  });
  return grads;
}

void TaggerGrads::clear() {
  for_each_tensor([](const char*, Mat& m) { m.fill(0.0); });
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void init_uniform(Mat& m, double bound, Rng& rng) {
  for (double& x : m.data) x = rng.uniform(-bound, bound);
}

void init_glorot(Mat& m, int fan_in, int fan_out, Rng& rng) {
  init_uniform(m, std::sqrt(6.0 / (fan_in + fan_out)), rng);
}

void init_lstm(LstmParams& p, Rng& rng) {
  int h = p.hidden();
  init_glorot(p.w_in, p.input_dim(), h, rng);
  init_glorot(p.w_rec, h, h, rng);
  p.bias.fill(0.0);
  // Forget-gate bias starts at 1 so early gradients flow through time.
  for (int j = 0; j < h; ++j) p.bias.at(0, h + j) = 1.0;
}

// 4-way capitalization class: all-lower, all-caps, initial-cap, other.
int cap_class(const std::string& word) {
  std::vector<char32_t> cps;
  if (!utf8_decode(word, &cps)) return 3;
  bool any_upper = false, any_lower = false;
  bool first_cased_upper = false, saw_cased = false, tail_all_lower = true;
  for (char32_t cp : cps) {
    bool upper = is_upper_cp(cp);
    bool lower = is_lower_cp(cp);
    if (!upper && !lower) continue;
    if (!saw_cased) {
      saw_cased = true;
      first_cased_upper = upper;
    } else if (upper) {
      tail_all_lower = false;
    }
    any_upper |= upper;
    any_lower |= lower;
  }
  if (!saw_cased) return 3;
  if (!any_upper) return 0;
  if (!any_lower) return 1;
  if (first_cased_upper && tail_all_lower) return 2;
  return 3;
}

struct TokenCache {
  int word_id = 0;
  std::vector<int> char_ids;
  LstmSequenceCache char_fw_cache, char_bw_cache;
  std::vector<double> input;    // concat before dropout
  std::vector<double> mask;     // empty when dropout off
  std::vector<double> dropped;  // what the word biLSTM saw
};

struct SentenceCache {
  std::vector<TokenCache> tokens;
  LstmSequenceCache word_fw_cache, word_bw_cache;
  std::vector<std::vector<double>> hidden;  // 2*word_dim per token
  std::vector<std::vector<double>> a1;      // tanh projection per token
  Mat emissions;
};

std::vector<int> char_ids_of(const std::string& word, const Charset& charset) {
  std::vector<char32_t> cps;
  if (!utf8_decode(word, &cps)) {
    throw Error("invalid UTF-8 in word: " + word);
  }
  if (cps.empty()) throw Error("cannot encode empty word");
  std::vector<int> ids;
  ids.reserve(cps.size());
  for (char32_t cp : cps) ids.push_back(charset.lookup(cp));
  return ids;
}

std::vector<std::vector<double>> rows_of(const Mat& table, const std::vector<int>& ids) {
  std::vector<std::vector<double>> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    rows.emplace_back(table.row(id), table.row(id) + table.cols);
  }
  return rows;
}

// Character encoder, optionally keeping caches for the backward pass.
std::vector<double> encode_chars_cached(const std::string& word,
                                        const TaggerParams& params,
                                        TokenCache* cache) {
  std::vector<int> ids = char_ids_of(word, params.charset);
  std::vector<std::vector<double>> xs = rows_of(params.char_emb, ids);
  std::vector<std::vector<double>> xs_rev(xs.rbegin(), xs.rend());

  std::vector<std::vector<double>> fw = lstm_forward(
      params.char_fw, xs, cache ? &cache->char_fw_cache : nullptr);
  std::vector<std::vector<double>> bw = lstm_forward(
      params.char_bw, xs_rev, cache ? &cache->char_bw_cache : nullptr);

  std::vector<double> out;
  out.reserve(2 * params.config.char_dim);
  out.insert(out.end(), fw.back().begin(), fw.back().end());
  out.insert(out.end(), bw.back().begin(), bw.back().end());
  if (cache) cache->char_ids = std::move(ids);
  return out;
}

Mat forward_sentence(const TaggerParams& params, const conll::Sentence& sentence,
                     Rng* dropout_rng, SentenceCache* cache) {
  if (sentence.tokens.empty()) throw Error("cannot encode empty sentence");
  const TaggerConfig& config = params.config;
  const int n = static_cast<int>(sentence.tokens.size());
  const int input_dim = params.input_dim();
  const double keep = 1.0 - config.dropout;

  std::vector<std::vector<double>> inputs(n);
  std::vector<TokenCache> token_caches(n);
  for (int t = 0; t < n; ++t) {
    const conll::Token& token = sentence.tokens[t];
    TokenCache& tc = token_caches[t];
    tc.word_id = params.vocab.lookup(token.form);

    std::vector<double> x;
    x.reserve(input_dim);
    const double* wrow = params.word_emb.row(tc.word_id);
    x.insert(x.end(), wrow, wrow + config.word_dim);
    std::vector<double> cvec = encode_chars_cached(token.form, params, cache ? &tc : nullptr);
    x.insert(x.end(), cvec.begin(), cvec.end());
    if (config.cap_feature) {
      double onehot[4] = {0, 0, 0, 0};
      onehot[cap_class(token.form)] = 1.0;
      x.insert(x.end(), onehot, onehot + 4);
    }

    if (dropout_rng && config.dropout > 0.0) {
      tc.mask.resize(input_dim);
      std::vector<double> dropped(input_dim);
      for (int j = 0; j < input_dim; ++j) {
        tc.mask[j] = dropout_rng->next_double() < keep ? 1.0 / keep : 0.0;
        dropped[j] = x[j] * tc.mask[j];
      }
      tc.dropped = dropped;
      inputs[t] = std::move(dropped);
    } else {
      inputs[t] = x;
      if (cache) tc.dropped = x;
    }
    if (cache) tc.input = std::move(x);
  }

  std::vector<std::vector<double>> inputs_rev(inputs.rbegin(), inputs.rend());
  std::vector<std::vector<double>> fw = lstm_forward(
      params.word_fw, inputs, cache ? &cache->word_fw_cache : nullptr);
  std::vector<std::vector<double>> bw = lstm_forward(
      params.word_bw, inputs_rev, cache ? &cache->word_bw_cache : nullptr);

  const int l = params.labels.size();
  const int hidden2 = 2 * config.word_dim;
  Mat emissions(n, l);
  std::vector<std::vector<double>> hiddens(n), a1s(n);
  std::vector<double> z1(config.crf_hidden);
  for (int t = 0; t < n; ++t) {
    std::vector<double> h;
    h.reserve(hidden2);
    h.insert(h.end(), fw[t].begin(), fw[t].end());
    const std::vector<double>& b = bw[n - 1 - t];
    h.insert(h.end(), b.begin(), b.end());

    for (int j = 0; j < config.crf_hidden; ++j) z1[j] = params.proj_b.at(0, j);
    matvec_acc(params.proj_w, h.data(), z1.data());
    std::vector<double> a1(config.crf_hidden);
    for (int j = 0; j < config.crf_hidden; ++j) a1[j] = std::tanh(z1[j]);

    double* erow = emissions.row(t);
    for (int j = 0; j < l; ++j) erow[j] = params.out_b.at(0, j);
    matvec_acc(params.out_w, a1.data(), erow);

    if (cache) {
      hiddens[t] = std::move(h);
      a1s[t] = std::move(a1);
    }
  }

  if (cache) {
    cache->tokens = std::move(token_caches);
    cache->hidden = std::move(hiddens);
    cache->a1 = std::move(a1s);
    cache->emissions = emissions;
  }
  return emissions;
}

void backward_sentence(const TaggerParams& params, const SentenceCache& cache,
                       const Mat& d_emissions, TaggerGrads& grads) {
  const TaggerConfig& config = params.config;
  const int n = d_emissions.rows;
  const int l = params.labels.size();
  const int hidden2 = 2 * config.word_dim;
  const int d_c = config.char_dim;

  // Projection layers, collecting d_hidden per token.
  std::vector<std::vector<double>> d_hidden(n, std::vector<double>(hidden2, 0.0));
  std::vector<double> da1(config.crf_hidden), dz1(config.crf_hidden);
  for (int t = 0; t < n; ++t) {
    const double* de = d_emissions.row(t);
    outer_acc(grads.out_w, de, cache.a1[t].data());
    for (int j = 0; j < l; ++j) grads.out_b.at(0, j) += de[j];
    std::fill(da1.begin(), da1.end(), 0.0);
    matvec_t_acc(params.out_w, de, da1.data());
    for (int j = 0; j < config.crf_hidden; ++j) {
      dz1[j] = da1[j] * (1.0 - cache.a1[t][j] * cache.a1[t][j]);
    }
    outer_acc(grads.proj_w, dz1.data(), cache.hidden[t].data());
    for (int j = 0; j < config.crf_hidden; ++j) grads.proj_b.at(0, j) += dz1[j];
    matvec_t_acc(params.proj_w, dz1.data(), d_hidden[t].data());
  }

  // Word biLSTM. The backward direction walked the reversed sequence.
  std::vector<std::vector<double>> d_fw(n, std::vector<double>(config.word_dim));
  std::vector<std::vector<double>> d_bw(n, std::vector<double>(config.word_dim));
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < config.word_dim; ++j) {
      d_fw[t][j] = d_hidden[t][j];
      d_bw[n - 1 - t][j] = d_hidden[t][config.word_dim + j];
    }
  }
  std::vector<std::vector<double>> dx_fw, dx_bw;
  lstm_backward(params.word_fw, cache.word_fw_cache, d_fw, grads.word_fw, &dx_fw);
  lstm_backward(params.word_bw, cache.word_bw_cache, d_bw, grads.word_bw, &dx_bw);

  for (int t = 0; t < n; ++t) {
    const TokenCache& tc = cache.tokens[t];
    std::vector<double> dx(params.input_dim());
    for (int j = 0; j < params.input_dim(); ++j) {
      dx[j] = dx_fw[t][j] + dx_bw[n - 1 - t][j];
      if (!tc.mask.empty()) dx[j] *= tc.mask[j];
    }

    // Word embedding rows.
    kernels::axpy(1.0, dx.data(), grads.word_emb.row(tc.word_id), config.word_dim);

    // Character encoder: gradient reaches only the two final states.
    std::size_t chars = tc.char_ids.size();
    std::vector<std::vector<double>> d_char_fw(chars, std::vector<double>(d_c, 0.0));
    std::vector<std::vector<double>> d_char_bw(chars, std::vector<double>(d_c, 0.0));
    for (int j = 0; j < d_c; ++j) {
      d_char_fw[chars - 1][j] = dx[config.word_dim + j];
      d_char_bw[chars - 1][j] = dx[config.word_dim + d_c + j];
    }
    std::vector<std::vector<double>> dx_cfw, dx_cbw;
    lstm_backward(params.char_fw, tc.char_fw_cache, d_char_fw, grads.char_fw, &dx_cfw);
    lstm_backward(params.char_bw, tc.char_bw_cache, d_char_bw, grads.char_bw, &dx_cbw);
    for (std::size_t k = 0; k < chars; ++k) {
      kernels::axpy(1.0, dx_cfw[k].data(), grads.char_emb.row(tc.char_ids[k]), d_c);
      // Backward LSTM step k saw character chars-1-k.
      kernels::axpy(1.0, dx_cbw[k].data(),
                    grads.char_emb.row(tc.char_ids[chars - 1 - k]), d_c);
    }
  }
}

}  // namespace

TaggerParams init_params(const conll::Corpus& train,
                         const embeddings::EmbeddingTable* pretrained,
                         const TaggerConfig& config, Rng& rng) {
  if (config.dropout < 0.0 || config.dropout >= 1.0) {
    throw Error("dropout must lie in [0,1)");
  }
  if (config.lr <= 0.0) throw Error("learning rate must be positive");
  if (config.batch_size != 1) throw Error("only batch size 1 is supported");
  TaggerParams params;
  params.config = config;
  if (pretrained && pretrained->dim != config.word_dim) {
    throw Error("embedding dimension " + std::to_string(pretrained->dim) +
                " does not match configured word_dim " +
                std::to_string(config.word_dim));
  }

  params.labels = LabelSet::from_corpus(train);
  params.charset = Charset::from_corpus(train);

  // Vocabulary: UNK, then training forms in first-occurrence order, then
  // any additional pretrained tokens in file order.
  params.vocab.words.push_back("<UNK>");
  auto add_word = [&](const std::string& word) {
    if (params.vocab.index.count(word)) return;
    params.vocab.index[word] = static_cast<int>(params.vocab.words.size());
    params.vocab.words.push_back(word);
  };
  for (const conll::Sentence& sentence : train.sentences) {
    for (const conll::Token& token : sentence.tokens) add_word(token.form);
  }
  if (pretrained) {
    for (const auto& [token, count] : pretrained->vocab.entries) add_word(token);
  }

  const int l = params.labels.size();
  params.char_emb = Mat(params.charset.size(), config.char_dim);
  init_uniform(params.char_emb, std::sqrt(3.0 / config.char_dim), rng);
  params.word_emb = Mat(params.vocab.size(), config.word_dim);
  init_uniform(params.word_emb, std::sqrt(3.0 / config.word_dim), rng);

  params.char_fw = LstmParams::sized(config.char_dim, config.char_dim);
  params.char_bw = LstmParams::sized(config.char_dim, config.char_dim);
  init_lstm(params.char_fw, rng);
  init_lstm(params.char_bw, rng);
  params.word_fw = LstmParams::sized(params.input_dim(), config.word_dim);
  params.word_bw = LstmParams::sized(params.input_dim(), config.word_dim);
  init_lstm(params.word_fw, rng);
  init_lstm(params.word_bw, rng);

  params.proj_w = Mat(config.crf_hidden, 2 * config.word_dim);
  init_glorot(params.proj_w, 2 * config.word_dim, config.crf_hidden, rng);
  params.proj_b = Mat(1, config.crf_hidden);
  params.out_w = Mat(l, config.crf_hidden);
  init_glorot(params.out_w, config.crf_hidden, l, rng);
  params.out_b = Mat(1, l);
  params.transitions = Mat(l + 2, l + 2);

  params.pretrained.assign(params.vocab.size(), 0);
  if (pretrained) {
    for (int row = 0; row < params.vocab.size(); ++row) {
      int src = pretrained->vocab.lookup(params.vocab.words[row]);
      if (src < 0) continue;
      std::copy(pretrained->input_vectors.row(src),
                pretrained->input_vectors.row(src) + config.word_dim,
                params.word_emb.row(row));
      params.pretrained[row] = 1;
    }
  }
  return params;
}

std::vector<double> encode_chars(const std::string& word, const TaggerParams& params) {
  return encode_chars_cached(word, params, nullptr);
}

Mat encode_sentence(const conll::Sentence& sentence, const TaggerParams& params,
                    bool dropout_active, Rng* rng) {
  if (dropout_active && rng == nullptr) {
    throw Error("dropout requires an RNG");
  }
  return forward_sentence(params, sentence, dropout_active ? rng : nullptr, nullptr);
}

double sentence_loss(const TaggerParams& params, const conll::Sentence& sentence,
                     const std::vector<int>& gold) {
  Mat emissions = forward_sentence(params, sentence, nullptr, nullptr);
  return crf_neg_log_likelihood(emissions, params.transitions, gold, nullptr, nullptr);
}

double sentence_backward(const TaggerParams& params, const conll::Sentence& sentence,
                         const std::vector<int>& gold, Rng* dropout_rng,
                         TaggerGrads& grads) {
  SentenceCache cache;
  Mat emissions = forward_sentence(params, sentence, dropout_rng, &cache);
  Mat d_emissions, d_transitions;
  double loss = crf_neg_log_likelihood(emissions, params.transitions, gold,
                                       &d_emissions, &d_transitions);
  for (std::size_t i = 0; i < d_transitions.data.size(); ++i) {
    grads.transitions.data[i] += d_transitions.data[i];
  }
  backward_sentence(params, cache, d_emissions, grads);
  return loss;
}

namespace {

std::vector<int> gold_ids(const conll::Sentence& sentence, const LabelSet& labels) {
  std::vector<int> ids;
  ids.reserve(sentence.tokens.size());
  for (const conll::Token& token : sentence.tokens) {
    int id = labels.find(token.ne_tag);
    if (id < 0) throw Error("tag not in label set: " + token.ne_tag);
    ids.push_back(id);
  }
  return ids;
}

double grad_norm(TaggerGrads& grads) {
  double sum = 0.0;
  grads.for_each_tensor([&](const char*, Mat& m) {
    sum += kernels::dot(m.data.data(), m.data.data(), m.data.size());
  });
  return std::sqrt(sum);
}

void sgd_step(TaggerParams& params, TaggerGrads& grads) {
  const TaggerConfig& config = params.config;
  // Frozen pretrained rows take no updates.
  if (!config.update_embeddings) {
    for (int row = 0; row < params.vocab.size(); ++row) {
      if (params.pretrained[row]) {
        std::fill(grads.word_emb.row(row), grads.word_emb.row(row) + config.word_dim,
                  0.0);
      }
    }
  }
  double norm = grad_norm(grads);
  double scale = 1.0;
  if (config.clip_norm > 0.0 && norm > config.clip_norm) {
    scale = config.clip_norm / norm;
  }
  std::vector<Mat*> gs;
  grads.for_each_tensor([&](const char*, Mat& m) { gs.push_back(&m); });
  std::size_t i = 0;
  params.for_each_tensor([&](const char*, Mat& m) {
    kernels::axpy(-config.lr * scale, gs[i]->data.data(), m.data.data(),
                  m.data.size());
    ++i;
  });
}

}  // namespace

TaggerParams train_tagger(const conll::Corpus& train, const conll::Corpus& dev,
                          const embeddings::EmbeddingTable* pretrained,
                          const TaggerConfig& config, std::ostream* log,
                          std::vector<EpochLog>* history) {
  if (train.sentences.empty()) throw Error("empty training corpus");
  Rng rng(config.seed);
  TaggerParams params = init_params(train, pretrained, config, rng);
  TaggerGrads grads = TaggerGrads::zeros_like(params);

  std::vector<std::vector<int>> gold(train.sentences.size());
  for (std::size_t i = 0; i < train.sentences.size(); ++i) {
    gold[i] = gold_ids(train.sentences[i], params.labels);
  }

  std::vector<std::size_t> order(train.sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const bool has_dev = !dev.sentences.empty();
  TaggerParams best = params;
  double best_f1 = -1.0;
  if (history) history->clear();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      grads.clear();
      loss_sum += sentence_backward(params, train.sentences[idx], gold[idx],
                                    config.dropout > 0.0 ? &rng : nullptr, grads);
      sgd_step(params, grads);
    }
    double train_loss = loss_sum / static_cast<double>(train.sentences.size());

    double dev_f1 = 0.0;
    if (has_dev) {
      conll::Corpus pred = tag_corpus(dev, params);
      dev_f1 = evaluator::evaluate(pred, dev).overall.f1;
    }
    if (log) {
      (*log) << "epoch=" << epoch << " train_loss=" << train_loss
             << " dev_f1=" << dev_f1 << '\n';
      log->flush();
    }
    if (history) history->push_back({epoch, train_loss, dev_f1});
    if (has_dev && dev_f1 > best_f1) {
      best_f1 = dev_f1;
      best = params;
    }
    if (config.early_stop_f1 > 0.0 && dev_f1 >= config.early_stop_f1) break;
  }
  // Without a dev set there is nothing to select on; keep the final epoch.
  return has_dev ? best : params;
}

namespace {

// Transitions with -inf on BIO-invalid moves: I-X is reachable only from
// B-X or I-X.
Mat constrained_transitions(const TaggerParams& params) {
  const int l = params.labels.size();
  Mat masked = params.transitions;
  for (int j = 0; j < l; ++j) {
    auto to = conll::split_tag(params.labels.labels[j]);
    if (!to || to->prefix != 'I') continue;
    for (int i = 0; i < l + 1; ++i) {  // predecessors incl. START
      bool ok = false;
      if (i < l) {
        auto from = conll::split_tag(params.labels.labels[i]);
        ok = from && from->prefix != 'O' && from->category == to->category;
      }
      if (!ok) masked.at(i, j) = kNegInf;
    }
  }
  return masked;
}

}  // namespace

std::vector<std::string> tag(const conll::Sentence& sentence, const TaggerParams& params) {
  Mat emissions = forward_sentence(params, sentence, nullptr, nullptr);
  Mat masked = constrained_transitions(params);
  std::vector<int> path = viterbi_decode(emissions, masked);
  std::vector<std::string> tags;
  tags.reserve(path.size());
  for (int id : path) tags.push_back(params.labels.labels[id]);
  return tags;
}

conll::Corpus tag_corpus(const conll::Corpus& corpus, const TaggerParams& params) {
  conll::Corpus out = corpus;
  for (conll::Sentence& sentence : out.sentences) {
    conll::set_tags(sentence, tag(sentence, params));
  }
  return out;
}

}  // namespace gner::tagger

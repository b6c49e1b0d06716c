#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gner/conll.hpp"
#include "gner/crf.hpp"
#include "gner/embeddings.hpp"
#include "gner/lstm.hpp"
#include "gner/mat.hpp"
#include "gner/rng.hpp"

namespace gner::tagger {

struct LabelSet {
  std::vector<std::string> labels;
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(labels.size()); }
  int find(const std::string& label) const;

  // Collects the tags of a corpus, closing the B/I pairing and putting
  // "O" first, categories alphabetical, B before I. Deterministic.
  static LabelSet from_corpus(const conll::Corpus& corpus);
  static LabelSet from_labels(std::vector<std::string> labels);
};

// Codepoint lookup; index 0 is the UNK character.
struct Charset {
  std::vector<char32_t> chars;  // chars[0] is a placeholder for UNK
  std::unordered_map<char32_t, int> index;

  int size() const { return static_cast<int>(chars.size()); }
  int lookup(char32_t cp) const;
  static Charset from_corpus(const conll::Corpus& corpus);
};

// Word lookup; index 0 is the UNK word.
struct WordVocab {
  std::vector<std::string> words;  // words[0] == "<UNK>"
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(words.size()); }
  int lookup(const std::string& word) const;
};

struct TaggerConfig {
  int char_dim = 25;
  int word_dim = 100;  // matches the embedding dimension when one is given
  int crf_hidden = 25;
  int epochs = 100;
  int batch_size = 1;  // the model trains sentence by sentence
  double dropout = 0.5;
  double lr = 0.005;
  std::uint64_t seed = 1;
  bool update_embeddings = true;
  bool cap_feature = false;
  double clip_norm = 5.0;
  // Stop once dev F1 reaches this value; disabled when <= 0.
  double early_stop_f1 = -1.0;
};

struct TaggerParams {
  TaggerConfig config;
  LabelSet labels;
  Charset charset;
  WordVocab vocab;
  // Marks vocab rows initialized from pretrained embeddings; those rows
  // are frozen during training unless config.update_embeddings.
  std::vector<std::uint8_t> pretrained;

  Mat char_emb;  // |charset| x char_dim
  Mat word_emb;  // |vocab| x word_dim
  LstmParams char_fw, char_bw;  // char_dim -> char_dim
  LstmParams word_fw, word_bw;  // input_dim() -> word_dim
  Mat proj_w, proj_b;           // crf_hidden x 2*word_dim, 1 x crf_hidden
  Mat out_w, out_b;             // L x crf_hidden, 1 x L
  Mat transitions;              // (L+2) x (L+2)

  int input_dim() const {
    return config.word_dim + 2 * config.char_dim + (config.cap_feature ? 4 : 0);
  }

  template <typename Self, typename F>
  static void visit_tensors(Self& self, F&& f) {
    f("char_emb", self.char_emb);
    f("word_emb", self.word_emb);
    f("char_fw.w_in", self.char_fw.w_in);
    f("char_fw.w_rec", self.char_fw.w_rec);
    f("char_fw.bias", self.char_fw.bias);
    f("char_bw.w_in", self.char_bw.w_in);
    f("char_bw.w_rec", self.char_bw.w_rec);
    f("char_bw.bias", self.char_bw.bias);
    f("word_fw.w_in", self.word_fw.w_in);
    f("word_fw.w_rec", self.word_fw.w_rec);
    f("word_fw.bias", self.word_fw.bias);
    f("word_bw.w_in", self.word_bw.w_in);
    f("word_bw.w_rec", self.word_bw.w_rec);
    f("word_bw.bias", self.word_bw.bias);
    f("proj_w", self.proj_w);
    f("proj_b", self.proj_b);
    f("out_w", self.out_w);
    f("out_b", self.out_b);
    f("transitions", self.transitions);
  }

  template <typename F>
  void for_each_tensor(F&& f) {
    visit_tensors(*this, std::forward<F>(f));
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit_tensors(*this, std::forward<F>(f));
  }
};

// Gradient buffers shaped like the trainable tensors of TaggerParams.
struct TaggerGrads {
  Mat char_emb, word_emb;
  LstmParams char_fw, char_bw, word_fw, word_bw;
  Mat proj_w, proj_b, out_w, out_b, transitions;

  static TaggerGrads zeros_like(const TaggerParams& params);
  void clear();

  template <typename F>
  void for_each_tensor(F&& f) {
    TaggerParams::visit_tensors(*this, std::forward<F>(f));
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    TaggerParams::visit_tensors(*this, std::forward<F>(f));
  }
};

// Builds lookup tables from the training corpus (plus the pretrained
// vocabulary when given) and initializes all weights from `rng`.
TaggerParams init_params(const conll::Corpus& train,
                         const embeddings::EmbeddingTable* pretrained,
                         const TaggerConfig& config, Rng& rng);

// Character biLSTM encoding: concatenation of the final forward and final
// backward states, dimension 2*char_dim. Throws on an empty word.
std::vector<double> encode_chars(const std::string& word, const TaggerParams& params);

// Emission scores, one row per token. Dropout (when active) applies to the
// concatenated word representation and needs an RNG.
Mat encode_sentence(const conll::Sentence& sentence, const TaggerParams& params,
                    bool dropout_active = false, Rng* rng = nullptr);

// Negative log-likelihood of the gold tags; pure function of the
// parameters (dropout off). Used by the gradient checks.
double sentence_loss(const TaggerParams& params, const conll::Sentence& sentence,
                     const std::vector<int>& gold);

// Forward + backward for one sentence, accumulating into `grads`.
// `dropout_rng` non-null enables input dropout.
double sentence_backward(const TaggerParams& params, const conll::Sentence& sentence,
                         const std::vector<int>& gold, Rng* dropout_rng,
                         TaggerGrads& grads);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;
};

// Per-epoch single-sentence SGD with global-norm gradient clipping;
// returns the parameters of the best dev-F1 epoch. Single-threaded and
// bit-reproducible for a fixed seed. One "epoch=<k> train_loss=<x>
// dev_f1=<y>" line per epoch goes to `log` when given.
TaggerParams train_tagger(const conll::Corpus& train, const conll::Corpus& dev,
                          const embeddings::EmbeddingTable* pretrained,
                          const TaggerConfig& config, std::ostream* log = nullptr,
                          std::vector<EpochLog>* history = nullptr);

// Viterbi tags with BIO-constrained decoding: transitions into invalid
// B/I successions are -inf at decode time, so the output always passes
// validate_bio.
std::vector<std::string> tag(const conll::Sentence& sentence, const TaggerParams& params);
conll::Corpus tag_corpus(const conll::Corpus& corpus, const TaggerParams& params);

// Versioned, checksummed binary container holding every tensor plus the
// lookup tables and the config snapshot.
void save_model(const TaggerParams& params, const std::string& path);
void save_model(const TaggerParams& params, std::ostream& out);
TaggerParams load_model(const std::string& path);
TaggerParams load_model(std::istream& in);

}  // namespace gner::tagger

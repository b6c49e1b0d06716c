#include <fstream>
#include <sstream>

#include "gner/serialize.hpp"
#include "gner/tagger.hpp"

namespace gner::tagger {

namespace {

constexpr char kMagic[8] = {'G', 'N', 'E', 'R', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

void write_config(std::ostream& os, const TaggerConfig& c) {
  io::write_u32(os, static_cast<std::uint32_t>(c.char_dim));
  io::write_u32(os, static_cast<std::uint32_t>(c.word_dim));
  io::write_u32(os, static_cast<std::uint32_t>(c.crf_hidden));
  io::write_u32(os, static_cast<std::uint32_t>(c.epochs));
  io::write_u32(os, static_cast<std::uint32_t>(c.batch_size));
  io::write_f64(os, c.dropout);
  io::write_f64(os, c.lr);
  io::write_u64(os, c.seed);
  io::write_u32(os, (c.update_embeddings ? 1u : 0u) | (c.cap_feature ? 2u : 0u));
  io::write_f64(os, c.clip_norm);
  io::write_f64(os, c.early_stop_f1);
}

TaggerConfig read_config(std::istream& is) {
  TaggerConfig c;
  c.char_dim = static_cast<int>(io::read_u32(is));
  c.word_dim = static_cast<int>(io::read_u32(is));
  c.crf_hidden = static_cast<int>(io::read_u32(is));
  c.epochs = static_cast<int>(io::read_u32(is));
  c.batch_size = static_cast<int>(io::read_u32(is));
  c.dropout = io::read_f64(is);
  c.lr = io::read_f64(is);
  c.seed = io::read_u64(is);
  std::uint32_t flags = io::read_u32(is);
  c.update_embeddings = flags & 1u;
  c.cap_feature = flags & 2u;
  c.clip_norm = io::read_f64(is);
  c.early_stop_f1 = io::read_f64(is);
  return c;
}

void write_mat(std::ostream& os, const Mat& m) {
  io::write_u32(os, static_cast<std::uint32_t>(m.rows));
  io::write_u32(os, static_cast<std::uint32_t>(m.cols));
  for (double x : m.data) io::write_f64(os, x);
}

Mat read_mat(std::istream& is) {
  int rows = static_cast<int>(io::read_u32(is));
  int cols = static_cast<int>(io::read_u32(is));
  Mat m(rows, cols);
  for (double& x : m.data) x = io::read_f64(is);
  return m;
}

}  // namespace

void save_model(const TaggerParams& params, std::ostream& out) {
  std::ostringstream payload;
  write_config(payload, params.config);

  io::write_u32(payload, static_cast<std::uint32_t>(params.labels.labels.size()));
  for (const std::string& label : params.labels.labels) {
    io::write_string(payload, label);
  }
  io::write_u32(payload, static_cast<std::uint32_t>(params.charset.chars.size()));
  for (char32_t cp : params.charset.chars) {
    io::write_u32(payload, static_cast<std::uint32_t>(cp));
  }
  io::write_u32(payload, static_cast<std::uint32_t>(params.vocab.words.size()));
  for (std::size_t i = 0; i < params.vocab.words.size(); ++i) {
    io::write_string(payload, params.vocab.words[i]);
    payload.put(static_cast<char>(params.pretrained[i]));
  }
  params.for_each_tensor([&](const char*, const Mat& m) { write_mat(payload, m); });

  std::string bytes = payload.str();
  io::Fnv1a hash;
  hash.update(bytes.data(), bytes.size());

  out.write(kMagic, sizeof(kMagic));
  io::write_u32(out, kVersion);
  io::write_u64(out, static_cast<std::uint64_t>(bytes.size()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  io::write_u64(out, hash.digest());
}

void save_model(const TaggerParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  save_model(params, out);
  if (!out) throw Error("write failed: " + path);
}

TaggerParams load_model(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw Error("model file: bad magic");
  }
  std::uint32_t version = io::read_u32(in);
  if (version != kVersion) {
    throw Error("model file: unsupported version " + std::to_string(version));
  }
  std::uint64_t payload_size = io::read_u64(in);
  std::string bytes(payload_size, '\0');
  if (payload_size > 0 &&
      !in.read(bytes.data(), static_cast<std::streamsize>(payload_size))) {
    throw Error("model file: truncated payload");
  }
  std::uint64_t stored = io::read_u64(in);
  io::Fnv1a hash;
  hash.update(bytes.data(), bytes.size());
  if (hash.digest() != stored) throw Error("model file: checksum mismatch");

  std::istringstream payload(bytes);
  TaggerParams params;
  params.config = read_config(payload);

  std::uint32_t n_labels = io::read_u32(payload);
  std::vector<std::string> labels(n_labels);
  for (auto& label : labels) label = io::read_string(payload);
  params.labels = LabelSet::from_labels(std::move(labels));

  std::uint32_t n_chars = io::read_u32(payload);
  params.charset.chars.resize(n_chars);
  for (std::uint32_t i = 0; i < n_chars; ++i) {
    params.charset.chars[i] = static_cast<char32_t>(io::read_u32(payload));
    if (i > 0) params.charset.index[params.charset.chars[i]] = static_cast<int>(i);
  }

  std::uint32_t n_words = io::read_u32(payload);
  params.vocab.words.resize(n_words);
  params.pretrained.resize(n_words);
  for (std::uint32_t i = 0; i < n_words; ++i) {
    params.vocab.words[i] = io::read_string(payload);
    int flag = payload.get();
    if (flag == EOF) throw Error("model file: truncated payload");
    params.pretrained[i] = static_cast<std::uint8_t>(flag);
    if (i > 0) params.vocab.index[params.vocab.words[i]] = static_cast<int>(i);
  }

  params.for_each_tensor([&](const char* name, Mat& m) {
    m = read_mat(payload);
    if (m.rows < 0 || m.cols < 0) {
      throw Error(std::string("model file: bad tensor ") + name);
    }
  });
  return params;
}

TaggerParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  try {
    return load_model(in);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace gner::tagger

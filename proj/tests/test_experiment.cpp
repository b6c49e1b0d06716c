#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gner/experiment.hpp"
#include "gner/ini.hpp"
#include "gner/rng.hpp"

using namespace gner;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

// A small deterministic NER dataset with a token->entity rule.
std::string rule_dataset(Rng& rng, int sentences) {
  const std::vector<std::pair<std::string, std::string>> lexicon = {
      {"Anna", "B-PER"}, {"Berlin", "B-LOC"}, {"Siemens", "B-ORG"},
      {"geht", "O"},     {"nach", "O"},       {"heute", "O"},
      {"die", "O"},      {"Straße", "O"}};
  std::ostringstream out;
  for (int i = 0; i < sentences; ++i) {
    int len = 3 + static_cast<int>(rng.next_below(4));
    for (int t = 0; t < len; ++t) {
      const auto& [form, tag] = lexicon[rng.next_below(lexicon.size())];
      out << form << ' ' << tag << '\n';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("ini parsing") {
  std::istringstream in(
      "# comment\n[alpha]\nkey = value\nspaced   =   x y z  \n; other\n"
      "[beta]\nn = 2\n");
  auto sections = parse_ini(in);
  REQUIRE(sections.size() == 2);
  CHECK(sections[0].name == "alpha");
  CHECK(sections[0].get("key") == "value");
  CHECK(sections[0].get("spaced") == "x y z");
  CHECK(sections[0].get_or("missing", "d") == "d");
  CHECK_THROWS_AS(sections[0].get("missing"), Error);
  CHECK(sections[1].get("n") == "2");

  std::istringstream bad("[unclosed\n");
  CHECK_THROWS_AS(parse_ini(bad), Error);
  std::istringstream bad2("novalue\n");
  CHECK_THROWS_AS(parse_ini(bad2), Error);
}

TEST_CASE("embedding metadata sidecar round trip") {
  TempDir dir("gner_meta_test");
  experiment::EmbeddingMeta meta;
  meta.variant = "lemma";
  meta.dim = 100;
  meta.window = 8;
  meta.min_count = 4;
  meta.mode = "structured";
  meta.corpus_hash = 0xdeadbeefcafef00dull;
  std::string path = experiment::meta_path_for(dir.file("emb.txt"));
  experiment::write_embedding_meta(meta, path);
  auto loaded = experiment::read_embedding_meta(path);
  REQUIRE(loaded.has_value());
  CHECK(loaded->variant == "lemma");
  CHECK(loaded->dim == 100);
  CHECK(loaded->window == 8);
  CHECK(loaded->mode == "structured");
  CHECK(loaded->corpus_hash == meta.corpus_hash);
  CHECK_FALSE(experiment::read_embedding_meta(dir.file("absent.json")).has_value());
}

TEST_CASE("experiment spec parsing and validation") {
  TempDir dir("gner_spec_test");
  write_file(dir.file("exp.ini"),
             "[experiment]\n"
             "manifest = m.ini\n"
             "embed_corpus = corpus.txt\n"
             "out_dir = out\n"
             "variant = lemma\n"
             "seeds = 3,4\n"
             "epochs = 7\n"
             "embed_dim = 12\n");
  experiment::ExperimentSpec spec = experiment::load_experiment_spec(dir.file("exp.ini"));
  CHECK(spec.manifest_path == "m.ini");
  CHECK(spec.variant == normalize::Variant::lemma);
  CHECK(spec.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(spec.tagger_config.epochs == 7);
  CHECK(spec.embed_config.dim == 12);
  CHECK(spec.tagger_config.word_dim == 12);

  write_file(dir.file("both.ini"),
             "[experiment]\nmanifest = m\nout_dir = o\n"
             "embeddings = a\nembed_corpus = b\n");
  CHECK_THROWS_AS(experiment::load_experiment_spec(dir.file("both.ini")), Error);
  write_file(dir.file("neither.ini"), "[experiment]\nmanifest = m\nout_dir = o\n");
  CHECK_THROWS_AS(experiment::load_experiment_spec(dir.file("neither.ini")), Error);
}

TEST_CASE("variant mismatch between embeddings and spec is rejected") {
  TempDir dir("gner_mismatch_test");
  Rng rng(1);
  write_file(dir.file("train.conll"), rule_dataset(rng, 8));
  write_file(dir.file("manifest.ini"),
             "[mini]\npath = " + dir.file("train.conll") + "\nrole = train\n");

  // Minimal embedding file tagged as "lower".
  write_file(dir.file("emb.txt"), "1 4\nanna 0.1 0.2 0.3 0.4\n");
  experiment::EmbeddingMeta meta;
  meta.variant = "lower";
  meta.dim = 4;
  experiment::write_embedding_meta(meta,
                                   experiment::meta_path_for(dir.file("emb.txt")));

  experiment::ExperimentSpec spec;
  spec.manifest_path = dir.file("manifest.ini");
  spec.embeddings_path = dir.file("emb.txt");
  spec.variant = normalize::Variant::lemma;
  spec.out_dir = dir.file("out");
  std::ostringstream log;
  CHECK_THROWS_WITH_AS(experiment::run_experiment(spec, log),
                       doctest::Contains("variant"), Error);
}

TEST_CASE("tiny end-to-end experiment produces models and reports") {
  TempDir dir("gner_e2e_test");
  Rng rng(5);
  write_file(dir.file("train.conll"), rule_dataset(rng, 30));
  write_file(dir.file("dev.conll"), rule_dataset(rng, 8));
  write_file(dir.file("test.conll"), rule_dataset(rng, 8));
  write_file(dir.file("manifest.ini"),
             "[tr]\npath = " + dir.file("train.conll") + "\nrole = train\n" +
             "[dv]\npath = " + dir.file("dev.conll") + "\nrole = dev\n" +
             "[te]\npath = " + dir.file("test.conll") + "\nrole = test\n");
  // Normalized embedding corpus (lower variant of the same vocabulary).
  std::ostringstream corpus;
  for (int i = 0; i < 60; ++i) {
    corpus << "anna geht nach berlin\nsiemens die straße heute\n";
  }
  write_file(dir.file("corpus.txt"), corpus.str());

  experiment::ExperimentSpec spec;
  spec.manifest_path = dir.file("manifest.ini");
  spec.embed_corpus = dir.file("corpus.txt");
  spec.embed_config.dim = 8;
  spec.embed_config.window = 2;
  spec.embed_config.min_count = 1;
  spec.embed_config.epochs = 1;
  spec.variant = normalize::Variant::lower;
  spec.tagger_config.word_dim = 8;
  spec.tagger_config.char_dim = 4;
  spec.tagger_config.crf_hidden = 6;
  spec.tagger_config.epochs = 2;
  spec.seeds = {1, 2};
  spec.out_dir = dir.file("out");

  std::ostringstream log;
  experiment::ExperimentResult result = experiment::run_experiment(spec, log);
  REQUIRE(result.by_dataset.size() == 1);
  CHECK(result.by_dataset[0].dataset == "te");
  CHECK(result.by_dataset[0].aggregate.f1s.size() == 2);
  // The aggregate mean equals aggregate_runs over the per-run scores.
  auto direct = evaluator::aggregate_f1s(result.by_dataset[0].aggregate.f1s);
  CHECK(result.by_dataset[0].aggregate.mean == doctest::Approx(direct.mean));

  CHECK(fs::exists(dir.path / "out" / "model_seed1.bin"));
  CHECK(fs::exists(dir.path / "out" / "model_seed2.bin"));
  CHECK(fs::exists(dir.path / "out" / "scores.txt"));
  CHECK(fs::exists(dir.path / "out" / "scores.csv"));
  CHECK(fs::exists(dir.path / "out" / "aggregate.txt"));
  CHECK(fs::exists(dir.path / "out" / "embeddings.txt"));
  CHECK(fs::exists(dir.path / "out" / "embeddings.txt.meta.json"));
  CHECK(fs::exists(dir.path / "out" / "report_seed1_te.txt"));

  // Rerunning the same spec reproduces the reports byte for byte.
  auto slurp = [&](const char* name) {
    std::ifstream in(dir.path / "out" / name);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  };
  std::string scores_first = slurp("scores.csv");
  std::string aggregate_first = slurp("aggregate.txt");
  std::ostringstream log2;
  experiment::run_experiment(spec, log2);
  CHECK(slurp("scores.csv") == scores_first);
  CHECK(slurp("aggregate.txt") == aggregate_first);
}

// gner: German-NER toolkit CLI. Subcommands cover the whole pipeline:
// dataset conversion and harmonization, corpus normalization, embedding
// training, tagger training/tagging, evaluation, and multi-seed
// experiment runs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "gner/adapters.hpp"
#include "gner/conll.hpp"
#include "gner/embeddings.hpp"
#include "gner/error.hpp"
#include "gner/evaluator.hpp"
#include "gner/experiment.hpp"
#include "gner/kernels.hpp"
#include "gner/normalize.hpp"
#include "gner/serialize.hpp"
#include "gner/tagger.hpp"
#include "gner/text.hpp"

namespace fs = std::filesystem;
using namespace gner;

namespace {

std::unique_ptr<std::istream> open_input(const std::string& path) {
  if (path == "-") return nullptr;  // caller uses std::cin
  auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*in) throw Error("cannot open file: " + path);
  return in;
}

std::unique_ptr<std::ostream> open_output(const std::string& path) {
  if (path == "-") return nullptr;  // caller uses std::cout
  auto out = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*out) throw Error("cannot open for writing: " + path);
  return out;
}

// Keeps the writable roles of a parsed column layout (lemma/pos survive
// only when the parse captured them; ne2 and skip are dropped).
std::vector<conll::Column> writable_columns(const std::vector<conll::Column>& parsed) {
  std::vector<conll::Column> out;
  for (conll::Column c : parsed) {
    if (c == conll::Column::form || c == conll::Column::lemma ||
        c == conll::Column::pos || c == conll::Column::ne) {
      out.push_back(c);
    }
  }
  return out;
}

void write_corpus_file(const conll::Corpus& corpus,
                       const std::vector<conll::Column>& columns,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  conll::write_conll(corpus, columns, out);
  if (!out) throw Error("write failed: " + path);
}

int cmd_convert(const std::string& scheme, const std::string& columns_spec,
                const std::string& in_path, const std::string& out_path) {
  std::size_t colon = scheme.find(':');
  if (colon == std::string::npos) {
    throw Error("--scheme wants FROM:TO, e.g. iob1:bio");
  }
  conll::TagScheme from = conll::parse_scheme(scheme.substr(0, colon));
  conll::TagScheme to = conll::parse_scheme(scheme.substr(colon + 1));
  if (to != conll::TagScheme::bio) throw Error("only conversion to bio is supported");

  std::vector<conll::Column> columns = conll::parse_columns(columns_spec);
  conll::Corpus corpus = conll::parse_conll_file(in_path, columns);
  for (conll::Sentence& sentence : corpus.sentences) {
    std::vector<std::string> tags = conll::tags_of(sentence);
    if (from == conll::TagScheme::iob1) {
      conll::set_tags(sentence, conll::iob1_to_bio(tags));
    } else {
      conll::set_tags(sentence, conll::spans_to_bio(conll::bio_to_spans(tags),
                                                    tags.size()));
    }
  }
  write_corpus_file(corpus, writable_columns(columns), out_path);
  return 0;
}

int cmd_adapt(const std::string& manifest_path, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (const adapters::SourceConfig& source : adapters::load_manifest(manifest_path)) {
    adapters::AdaptedSource adapted = adapters::adapt_source(source);
    auto emit = [&](const std::optional<conll::Corpus>& corpus, const char* part) {
      if (!corpus) return;
      fs::path path = fs::path(out_dir) / (source.name + "." + part + ".conll");
      write_corpus_file(*corpus, writable_columns(source.columns),
                        path.string());
      std::cout << source.name << "." << part << ": " << corpus->size()
                << " sentences -> " << path.string() << "\n";
    };
    emit(adapted.train, "train");
    emit(adapted.dev, "dev");
    emit(adapted.test, "test");
  }
  return 0;
}

int cmd_split(const std::string& ratios, const std::string& columns_spec,
              const std::string& in_path, const std::string& out_prefix) {
  std::vector<conll::Column> columns = conll::parse_columns(columns_spec);
  conll::Corpus corpus = conll::parse_conll_file(in_path, columns);
  adapters::SplitResult split =
      adapters::split_dataset(corpus, adapters::parse_split_spec(ratios));
  std::vector<conll::Column> out_columns = writable_columns(columns);
  write_corpus_file(split.train, out_columns, out_prefix + ".train.conll");
  write_corpus_file(split.dev, out_columns, out_prefix + ".dev.conll");
  write_corpus_file(split.test, out_columns, out_prefix + ".test.conll");
  std::cout << "train=" << split.train.size() << " dev=" << split.dev.size()
            << " test=" << split.test.size() << "\n";
  return 0;
}

int cmd_merge(const std::vector<std::string>& inputs, const std::string& labels_spec,
              const std::string& columns_spec, const std::string& out_path) {
  std::vector<std::string> labels;
  if (!labels_spec.empty()) {
    std::stringstream ss(labels_spec);
    std::string item;
    while (std::getline(ss, item, ',')) labels.push_back(item);
    if (labels.size() != inputs.size()) {
      throw Error("--labels must name one label per input");
    }
  } else {
    for (const std::string& path : inputs) {
      labels.push_back(fs::path(path).stem().string());
    }
  }
  std::vector<conll::Column> columns = conll::parse_columns(columns_spec);
  std::vector<std::pair<conll::Corpus, std::string>> parts;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    parts.emplace_back(conll::parse_conll_file(inputs[i], columns), labels[i]);
  }
  conll::Corpus merged = adapters::merge_datasets(parts);
  write_corpus_file(merged, writable_columns(columns), out_path);
  std::cout << "merged " << merged.size() << " sentences -> " << out_path << "\n";
  return 0;
}

int cmd_normalize(const std::string& mode, const std::string& variant,
                  const std::string& in_path, const std::string& out_path) {
  auto in = open_input(in_path);
  auto out = open_output(out_path);
  normalize::normalize_stream(in ? *in : std::cin, normalize::parse_mode(mode),
                              normalize::parse_variant(variant),
                              out ? *out : std::cout);
  return 0;
}

int cmd_embed(const std::string& corpus, const std::string& out_path,
              const embeddings::EmbedConfig& config, const std::string& variant) {
  embeddings::TrainStats stats;
  embeddings::EmbeddingTable table =
      embeddings::train_embeddings(embeddings::file_source(corpus), config, &stats);
  embeddings::save_embeddings(table, out_path);

  experiment::EmbeddingMeta meta;
  meta.variant = variant;
  meta.dim = config.dim;
  meta.window = config.window;
  meta.min_count = config.min_count;
  meta.mode = embeddings::embed_mode_name(config.mode);
  meta.corpus_hash = io::fnv1a_file(corpus);
  experiment::write_embedding_meta(meta, experiment::meta_path_for(out_path));

  std::cout << "vocab=" << table.vocab.size() << " dim=" << table.dim;
  for (std::size_t e = 0; e < stats.epoch_mean_loss.size(); ++e) {
    std::cout << " epoch" << (e + 1) << "_loss=" << stats.epoch_mean_loss[e];
  }
  std::cout << "\n";
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& dev_path,
              const std::string& embeddings_path, const std::string& out_path,
              const std::string& columns_spec, tagger::TaggerConfig config) {
  std::vector<conll::Column> columns = conll::parse_columns(columns_spec);
  conll::Corpus train = conll::parse_conll_file(train_path, columns);
  conll::Corpus dev;
  if (!dev_path.empty()) dev = conll::parse_conll_file(dev_path, columns);

  std::unique_ptr<embeddings::EmbeddingTable> table;
  if (!embeddings_path.empty()) {
    table = std::make_unique<embeddings::EmbeddingTable>(
        embeddings::load_embeddings(embeddings_path));
    config.word_dim = table->dim;
  }
  tagger::TaggerParams params =
      tagger::train_tagger(train, dev, table.get(), config, &std::cerr);
  tagger::save_model(params, out_path);
  std::cout << "model -> " << out_path << "\n";
  return 0;
}

int cmd_tag(const std::string& model_path, const std::string& in_path,
            const std::string& out_path, const std::string& columns_spec,
            bool untagged, bool keep_gold) {
  tagger::TaggerParams params = tagger::load_model(model_path);
  conll::Corpus corpus;
  if (untagged) {
    // Token-per-line input without tags; first field is the form.
    auto in = open_input(in_path);
    std::istream& is = in ? *in : std::cin;
    std::string line;
    conll::Sentence sentence;
    while (std::getline(is, line)) {
      if (is_blank_line(line)) {
        if (!sentence.tokens.empty()) {
          corpus.sentences.push_back(std::move(sentence));
          sentence = conll::Sentence{};
        }
        continue;
      }
      if (line[0] == '#') continue;
      conll::Token token;
      token.form = split_fields(line)[0];
      sentence.tokens.push_back(std::move(token));
    }
    if (!sentence.tokens.empty()) corpus.sentences.push_back(std::move(sentence));
  } else {
    corpus = conll::parse_conll_file(in_path, conll::parse_columns(columns_spec));
  }

  auto out = open_output(out_path);
  std::ostream& os = out ? *out : std::cout;
  for (const conll::Sentence& sentence : corpus.sentences) {
    std::vector<std::string> predicted = tagger::tag(sentence, params);
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      os << sentence.tokens[t].form;
      if (keep_gold) os << ' ' << sentence.tokens[t].ne_tag;
      os << ' ' << predicted[t] << '\n';
    }
    os << '\n';
  }
  return 0;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path,
             const std::string& merged_path, const std::string& columns_spec) {
  conll::Corpus gold, pred;
  if (!merged_path.empty()) {
    // conlleval-style merged file: the last two fields of every token
    // line are the gold and predicted tags.
    auto in = open_input(merged_path);
    std::istream& is = in ? *in : std::cin;
    std::string line;
    conll::Sentence gs, ps;
    auto flush = [&]() {
      if (gs.tokens.empty()) return;
      gold.sentences.push_back(std::move(gs));
      pred.sentences.push_back(std::move(ps));
      gs = conll::Sentence{};
      ps = conll::Sentence{};
    };
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (is_blank_line(line)) {
        flush();
        continue;
      }
      if (line[0] == '#') continue;
      std::vector<std::string> fields = split_fields(line);
      if (fields.size() < 2) {
        throw Error("line " + std::to_string(line_no) +
                    ": need at least gold and predicted tags");
      }
      std::string form = fields.size() >= 3 ? fields.front() : "w";
      gs.tokens.push_back({form, {}, {}, fields[fields.size() - 2]});
      ps.tokens.push_back({form, {}, {}, fields[fields.size() - 1]});
    }
    flush();
  } else {
    if (gold_path.empty() || pred_path.empty()) {
      throw Error("eval needs --merged or both --gold and --pred");
    }
    std::vector<conll::Column> columns = conll::parse_columns(columns_spec);
    gold = conll::parse_conll_file(gold_path, columns);
    pred = conll::parse_conll_file(pred_path, columns);
  }
  evaluator::EvalReport report = evaluator::evaluate(pred, gold);
  std::cout << evaluator::render_report(report);
  return 0;
}

int cmd_experiment(const std::string& spec_path) {
  experiment::ExperimentSpec spec = experiment::load_experiment_spec(spec_path);
  experiment::run_experiment(spec, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gner: sequence-labeling toolkit for German NER"};
  app.require_subcommand(1);

  std::string kernels_choice = "auto";
  app.add_option("--kernels", kernels_choice, "vector backend: auto|scalar|avx2|neon")
      ->capture_default_str();

  // convert
  auto* convert = app.add_subcommand("convert", "convert tag scheme (iob1:bio)");
  std::string scheme = "iob1:bio", conv_columns = "form,ne", conv_in, conv_out;
  convert->add_option("--scheme", scheme, "FROM:TO")->capture_default_str();
  convert->add_option("--columns", conv_columns)->capture_default_str();
  convert->add_option("input", conv_in)->required();
  convert->add_option("output", conv_out)->required();

  // adapt
  auto* adapt = app.add_subcommand("adapt", "harmonize datasets per manifest");
  std::string manifest, adapt_out = ".";
  adapt->add_option("--manifest", manifest)->required();
  adapt->add_option("--out-dir", adapt_out)->capture_default_str();

  // split
  auto* split = app.add_subcommand("split", "contiguous train/dev/test split");
  std::string ratios = "80/10/10", split_columns = "form,ne", split_in, split_prefix;
  split->add_option("--ratios", ratios)->capture_default_str();
  split->add_option("--columns", split_columns)->capture_default_str();
  split->add_option("input", split_in)->required();
  split->add_option("out_prefix", split_prefix)->required();

  // merge
  auto* merge = app.add_subcommand("merge", "concatenate harmonized datasets");
  std::vector<std::string> merge_inputs;
  std::string merge_labels, merge_columns = "form,ne", merge_out;
  merge->add_option("--out", merge_out)->required();
  merge->add_option("--labels", merge_labels, "comma-separated source labels");
  merge->add_option("--columns", merge_columns)->capture_default_str();
  merge->add_option("inputs", merge_inputs)->required()->expected(-1);

  // normalize
  auto* normalize_cmd = app.add_subcommand("normalize", "emit an embedding-corpus variant");
  std::string norm_mode = "raw", norm_variant = "lower", norm_in = "-", norm_out = "-";
  normalize_cmd->add_option("--mode", norm_mode, "raw|annotated")->capture_default_str();
  normalize_cmd->add_option("--variant", norm_variant,
                            "lower|lemma|lemma_lower|lemmapos|lemmapos_lower")
      ->capture_default_str();
  normalize_cmd->add_option("input", norm_in, "file or - for stdin")->capture_default_str();
  normalize_cmd->add_option("output", norm_out, "file or - for stdout")->capture_default_str();

  // embed
  auto* embed = app.add_subcommand("embed", "train word embeddings");
  std::string embed_corpus, embed_out, embed_mode = "skipgram", embed_variant = "lower";
  embeddings::EmbedConfig embed_config;
  embed->add_option("--corpus", embed_corpus)->required();
  embed->add_option("--out", embed_out)->required();
  embed->add_option("--dim", embed_config.dim)->capture_default_str();
  embed->add_option("--window", embed_config.window)->capture_default_str();
  embed->add_option("--min-count", embed_config.min_count)->capture_default_str();
  embed->add_option("--negatives", embed_config.negatives)->capture_default_str();
  embed->add_option("--epochs", embed_config.epochs)->capture_default_str();
  embed->add_option("--lr", embed_config.initial_lr)->capture_default_str();
  embed->add_option("--mode", embed_mode, "skipgram|structured")->capture_default_str();
  embed->add_option("--workers", embed_config.workers)->capture_default_str();
  embed->add_option("--seed", embed_config.seed)->capture_default_str();
  embed->add_option("--variant", embed_variant, "recorded in the metadata sidecar")
      ->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "train the biLSTM-CRF tagger");
  std::string train_path, dev_path, train_embeddings, model_out;
  std::string train_columns = "form,ne";
  tagger::TaggerConfig tagger_config;
  bool no_update_embeddings = false;
  train->add_option("--train", train_path)->required();
  train->add_option("--dev", dev_path);
  train->add_option("--embeddings", train_embeddings);
  train->add_option("--out", model_out)->required();
  train->add_option("--columns", train_columns)->capture_default_str();
  train->add_option("--epochs", tagger_config.epochs)->capture_default_str();
  train->add_option("--dropout", tagger_config.dropout)->capture_default_str();
  train->add_option("--lr", tagger_config.lr)->capture_default_str();
  train->add_option("--seed", tagger_config.seed)->capture_default_str();
  train->add_option("--word-dim", tagger_config.word_dim)->capture_default_str();
  train->add_option("--char-dim", tagger_config.char_dim)->capture_default_str();
  train->add_option("--early-stop-f1", tagger_config.early_stop_f1)
      ->capture_default_str();
  train->add_flag("--cap-feature", tagger_config.cap_feature,
                  "add the 4-way capitalization one-hot input");
  train->add_flag("--no-update-embeddings", no_update_embeddings,
                  "freeze pretrained embedding rows");

  // tag
  auto* tag = app.add_subcommand("tag", "tag a corpus with a trained model");
  std::string tag_model, tag_in, tag_out = "-", tag_columns = "form,ne";
  bool tag_untagged = false, tag_keep_gold = false;
  tag->add_option("--model", tag_model)->required();
  tag->add_option("input", tag_in)->required();
  tag->add_option("output", tag_out)->capture_default_str();
  tag->add_option("--columns", tag_columns)->capture_default_str();
  tag->add_flag("--untagged", tag_untagged, "input has no tag column");
  tag->add_flag("--keep-gold", tag_keep_gold, "write form gold pred");

  // eval
  auto* eval = app.add_subcommand("eval", "entity-level precision/recall/F1");
  std::string eval_gold, eval_pred, eval_merged, eval_columns = "form,ne";
  eval->add_option("--gold", eval_gold);
  eval->add_option("--pred", eval_pred);
  eval->add_option("--merged", eval_merged, "single file, last two fields gold/pred");
  eval->add_option("--columns", eval_columns)->capture_default_str();

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a full multi-seed experiment");
  std::string exp_spec;
  exp->add_option("spec", exp_spec, "INI experiment spec")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (kernels_choice != "auto") {
      kernels::Backend backend;
      if (kernels_choice == "scalar") backend = kernels::Backend::scalar;
      else if (kernels_choice == "avx2") backend = kernels::Backend::avx2;
      else if (kernels_choice == "neon") backend = kernels::Backend::neon;
      else throw Error("unknown kernel backend: " + kernels_choice);
      if (!kernels::set_backend(backend)) {
        throw Error("kernel backend not available on this machine: " + kernels_choice);
      }
    }

    if (convert->parsed()) return cmd_convert(scheme, conv_columns, conv_in, conv_out);
    if (adapt->parsed()) return cmd_adapt(manifest, adapt_out);
    if (split->parsed()) return cmd_split(ratios, split_columns, split_in, split_prefix);
    if (merge->parsed()) return cmd_merge(merge_inputs, merge_labels, merge_columns, merge_out);
    if (normalize_cmd->parsed()) return cmd_normalize(norm_mode, norm_variant, norm_in, norm_out);
    if (embed->parsed()) {
      embed_config.mode = embeddings::parse_embed_mode(embed_mode);
      return cmd_embed(embed_corpus, embed_out, embed_config, embed_variant);
    }
    if (train->parsed()) {
      tagger_config.update_embeddings = !no_update_embeddings;
      return cmd_train(train_path, dev_path, train_embeddings, model_out,
                       train_columns, tagger_config);
    }
    if (tag->parsed()) {
      return cmd_tag(tag_model, tag_in, tag_out, tag_columns, tag_untagged,
                     tag_keep_gold);
    }
    if (eval->parsed()) return cmd_eval(eval_gold, eval_pred, eval_merged, eval_columns);
    if (exp->parsed()) return cmd_experiment(exp_spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

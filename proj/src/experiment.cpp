#include "gner/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gner/adapters.hpp"
#include "gner/error.hpp"
#include "gner/ini.hpp"
#include "gner/serialize.hpp"

namespace gner::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

std::string meta_path_for(const std::string& embeddings_path) {
  return embeddings_path + ".meta.json";
}

void write_embedding_meta(const EmbeddingMeta& meta, const std::string& path) {
  json j;
  j["variant"] = meta.variant;
  j["dim"] = meta.dim;
  j["window"] = meta.window;
  j["min_count"] = meta.min_count;
  j["mode"] = meta.mode;
  std::ostringstream hash;
  hash << std::hex << meta.corpus_hash;
  j["corpus_hash"] = hash.str();
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

std::optional<EmbeddingMeta> read_embedding_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  EmbeddingMeta meta;
  meta.variant = j.value("variant", "");
  meta.dim = j.value("dim", 0);
  meta.window = j.value("window", 0);
  meta.min_count = j.value("min_count", 0);
  meta.mode = j.value("mode", "");
  std::string hash = j.value("corpus_hash", "0");
  meta.corpus_hash = std::stoull(hash, nullptr, 16);
  return meta;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  ExperimentSpec spec;
  bool saw_experiment = false;
  for (const IniSection& section : parse_ini_file(path)) {
    if (section.name != "experiment" && !section.name.empty()) {
      throw Error(path + ": unknown section [" + section.name + "]");
    }
    saw_experiment = true;
    spec.manifest_path = section.get("manifest");
    spec.embeddings_path = section.get_or("embeddings", "");
    spec.embed_corpus = section.get_or("embed_corpus", "");
    spec.variant = normalize::parse_variant(section.get_or("variant", "lower"));
    spec.out_dir = section.get("out_dir");
    spec.embeddings_label = section.get_or("embeddings_label", "self-trained");

    spec.embed_config.dim = std::stoi(section.get_or("embed_dim", "100"));
    spec.embed_config.window = std::stoi(section.get_or("embed_window", "8"));
    spec.embed_config.min_count = std::stoi(section.get_or("embed_min_count", "4"));
    spec.embed_config.negatives = std::stoi(section.get_or("embed_negatives", "5"));
    spec.embed_config.epochs = std::stoi(section.get_or("embed_epochs", "5"));
    spec.embed_config.initial_lr = std::stod(section.get_or("embed_lr", "0.025"));
    spec.embed_config.mode =
        embeddings::parse_embed_mode(section.get_or("embed_mode", "structured"));
    spec.embed_config.workers = std::stoi(section.get_or("embed_workers", "1"));

    spec.tagger_config.word_dim = spec.embed_config.dim;
    spec.tagger_config.char_dim = std::stoi(section.get_or("char_dim", "25"));
    spec.tagger_config.epochs = std::stoi(section.get_or("epochs", "100"));
    spec.tagger_config.dropout = std::stod(section.get_or("dropout", "0.5"));
    spec.tagger_config.lr = std::stod(section.get_or("lr", "0.005"));
    spec.tagger_config.cap_feature =
        section.get_or("cap_feature", "false") == "true";
    spec.tagger_config.update_embeddings =
        section.get_or("update_embeddings", "true") == "true";

    if (section.has("seeds")) {
      spec.seeds.clear();
      std::stringstream ss(section.get("seeds"));
      std::string item;
      while (std::getline(ss, item, ',')) {
        spec.seeds.push_back(std::stoull(item));
      }
      if (spec.seeds.empty()) throw Error(path + ": empty seed list");
    }
  }
  if (!saw_experiment) throw Error(path + ": no [experiment] section");
  if (spec.embeddings_path.empty() == spec.embed_corpus.empty()) {
    throw Error(path + ": exactly one of 'embeddings' or 'embed_corpus' required");
  }
  return spec;
}

namespace {

struct PreparedData {
  conll::Corpus train;
  conll::Corpus dev;
  std::vector<std::pair<std::string, conll::Corpus>> tests;
};

PreparedData prepare_datasets(const ExperimentSpec& spec) {
  PreparedData data;
  std::vector<std::pair<conll::Corpus, std::string>> train_parts, dev_parts;
  for (const adapters::SourceConfig& source : adapters::load_manifest(spec.manifest_path)) {
    adapters::AdaptedSource adapted = adapters::adapt_source(source);
    if (adapted.train) train_parts.emplace_back(std::move(*adapted.train), source.name);
    if (adapted.dev) dev_parts.emplace_back(std::move(*adapted.dev), source.name);
    if (adapted.test) data.tests.emplace_back(source.name, std::move(*adapted.test));
  }
  if (train_parts.empty()) throw Error("manifest provides no training data");
  data.train = adapters::merge_datasets(train_parts);
  if (!dev_parts.empty()) data.dev = adapters::merge_datasets(dev_parts);

  normalize::apply_variant_to_corpus(data.train, spec.variant);
  normalize::apply_variant_to_corpus(data.dev, spec.variant);
  for (auto& [name, corpus] : data.tests) {
    normalize::apply_variant_to_corpus(corpus, spec.variant);
  }
  return data;
}

embeddings::EmbeddingTable obtain_embeddings(const ExperimentSpec& spec,
                                             std::ostream& log) {
  if (!spec.embeddings_path.empty()) {
    auto meta = read_embedding_meta(meta_path_for(spec.embeddings_path));
    if (meta) {
      if (meta->variant != normalize::variant_name(spec.variant)) {
        throw Error("embedding variant '" + meta->variant +
                    "' does not match experiment variant '" +
                    normalize::variant_name(spec.variant) + "'");
      }
    } else {
      log << "warning: no metadata sidecar for " << spec.embeddings_path
          << "; variant consistency not checked\n";
    }
    return embeddings::load_embeddings(spec.embeddings_path);
  }

  log << "training embeddings on " << spec.embed_corpus << "\n";
  embeddings::EmbeddingTable table = embeddings::train_embeddings(
      embeddings::file_source(spec.embed_corpus), spec.embed_config);
  fs::path out = fs::path(spec.out_dir) / "embeddings.txt";
  embeddings::save_embeddings(table, out.string());
  EmbeddingMeta meta;
  meta.variant = normalize::variant_name(spec.variant);
  meta.dim = spec.embed_config.dim;
  meta.window = spec.embed_config.window;
  meta.min_count = spec.embed_config.min_count;
  meta.mode = embeddings::embed_mode_name(spec.embed_config.mode);
  meta.corpus_hash = io::fnv1a_file(spec.embed_corpus);
  write_embedding_meta(meta, meta_path_for(out.string()));
  return table;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  fs::create_directories(spec.out_dir);
  PreparedData data = prepare_datasets(spec);
  log << "train sentences: " << data.train.size()
      << ", dev sentences: " << data.dev.size() << ", test sets: "
      << data.tests.size() << "\n";

  embeddings::EmbeddingTable table = obtain_embeddings(spec, log);
  if (table.dim != spec.tagger_config.word_dim) {
    // The LSTM dimension follows the embedding dimension.
    log << "setting word_dim to embedding dimension " << table.dim << "\n";
  }
  tagger::TaggerConfig tagger_config = spec.tagger_config;
  tagger_config.word_dim = table.dim;

  // Per-seed runs; each is internally deterministic.
  std::vector<std::vector<double>> f1s_per_test(data.tests.size());
  for (std::uint64_t seed : spec.seeds) {
    tagger::TaggerConfig config = tagger_config;
    config.seed = seed;
    log << "=== seed " << seed << " ===\n";

    fs::path run_log_path = fs::path(spec.out_dir) / ("run_seed" + std::to_string(seed) + ".log");
    std::ofstream run_log(run_log_path);
    tagger::TaggerParams params =
        tagger::train_tagger(data.train, data.dev, &table, config, &run_log);

    fs::path model_path = fs::path(spec.out_dir) / ("model_seed" + std::to_string(seed) + ".bin");
    tagger::save_model(params, model_path.string());

    for (std::size_t i = 0; i < data.tests.size(); ++i) {
      const auto& [name, corpus] = data.tests[i];
      conll::Corpus pred = tagger::tag_corpus(corpus, params);
      evaluator::EvalReport report = evaluator::evaluate(pred, corpus);
      f1s_per_test[i].push_back(report.overall.f1);
      log << "seed " << seed << " " << name << " F1=" << report.overall.f1 << "\n";

      fs::path report_path = fs::path(spec.out_dir) /
                             ("report_seed" + std::to_string(seed) + "_" + name + ".txt");
      std::ofstream report_out(report_path);
      report_out << evaluator::render_report(report);
    }
  }

  ExperimentResult result;
  char row[256];
  std::ostringstream table_text, table_csv;
  std::snprintf(row, sizeof(row), "%-20s %-24s %-16s %8s %8s %8s\n", "data",
                "embeddings", "features", "F-mean", "F-std", "F-max");
  table_text << row;
  table_csv << "data,embeddings,features,f_mean,f_std,f_max\n";
  for (std::size_t i = 0; i < data.tests.size(); ++i) {
    evaluator::RunAggregate agg = evaluator::aggregate_f1s(f1s_per_test[i]);
    result.by_dataset.push_back({data.tests[i].first, agg});
    std::snprintf(row, sizeof(row), "%-20s %-24s %-16s %8.2f %8.2f %8.2f\n",
                  data.tests[i].first.c_str(), spec.embeddings_label.c_str(),
                  normalize::variant_name(spec.variant), agg.mean, agg.stddev,
                  agg.max);
    table_text << row;
    std::snprintf(row, sizeof(row), "%s,%s,%s,%.2f,%.2f,%.2f\n",
                  data.tests[i].first.c_str(), spec.embeddings_label.c_str(),
                  normalize::variant_name(spec.variant), agg.mean, agg.stddev,
                  agg.max);
    table_csv << row;
  }

  std::ofstream text_out(fs::path(spec.out_dir) / "scores.txt");
  text_out << table_text.str();
  std::ofstream csv_out(fs::path(spec.out_dir) / "scores.csv");
  csv_out << table_csv.str();

  std::ofstream agg_out(fs::path(spec.out_dir) / "aggregate.txt");
  for (const TestResult& tr : result.by_dataset) {
    agg_out << tr.dataset << ":";
    for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
      agg_out << " seed" << spec.seeds[s] << "=" << tr.aggregate.f1s[s];
    }
    agg_out << " mean=" << tr.aggregate.mean << " stddev=" << tr.aggregate.stddev
            << " max=" << tr.aggregate.max << "\n";
  }

  log << table_text.str();
  return result;
}

}  // namespace gner::experiment

#include "gner/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "gner/error.hpp"

namespace gner::evaluator {

namespace {

void finalize(CategoryCounts& c) {
  double found = static_cast<double>(c.tp + c.fp);
  double expected = static_cast<double>(c.tp + c.fn);
  c.precision = found > 0 ? 100.0 * c.tp / found : 0.0;
  c.recall = expected > 0 ? 100.0 * c.tp / expected : 0.0;
  c.f1 = (c.precision + c.recall > 0.0)
             ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
             : 0.0;
}

}  // namespace

EvalReport evaluate(const conll::Corpus& pred, const conll::Corpus& gold) {
  if (pred.sentences.size() != gold.sentences.size()) {
    throw Error("evaluate: corpora have " + std::to_string(pred.sentences.size()) +
                " vs " + std::to_string(gold.sentences.size()) + " sentences");
  }
  EvalReport report;
  long long correct_tokens = 0;

  for (std::size_t si = 0; si < gold.sentences.size(); ++si) {
    const conll::Sentence& ps = pred.sentences[si];
    const conll::Sentence& gs = gold.sentences[si];
    if (ps.size() != gs.size()) {
      throw Error("evaluate: sentence " + std::to_string(si) +
                  " differs in length (" + std::to_string(ps.size()) + " vs " +
                  std::to_string(gs.size()) + ")");
    }
    for (std::size_t ti = 0; ti < gs.size(); ++ti) {
      if (ps.tokens[ti].form != gs.tokens[ti].form) {
        throw Error("evaluate: sentence " + std::to_string(si) + " token " +
                    std::to_string(ti) + " differs in form ('" +
                    ps.tokens[ti].form + "' vs '" + gs.tokens[ti].form + "')");
      }
      ++report.tokens;
      if (ps.tokens[ti].ne_tag == gs.tokens[ti].ne_tag) ++correct_tokens;
    }

    std::vector<conll::EntitySpan> pred_spans = conll::bio_to_spans(conll::tags_of(ps));
    std::vector<conll::EntitySpan> gold_spans = conll::bio_to_spans(conll::tags_of(gs));
    report.pred_spans += static_cast<long long>(pred_spans.size());
    report.gold_spans += static_cast<long long>(gold_spans.size());

    std::set<conll::EntitySpan> gold_set(gold_spans.begin(), gold_spans.end());
    for (const conll::EntitySpan& span : pred_spans) {
      if (gold_set.count(span)) {
        ++report.per_category[span.category].tp;
      } else {
        ++report.per_category[span.category].fp;
      }
    }
    std::set<conll::EntitySpan> pred_set(pred_spans.begin(), pred_spans.end());
    for (const conll::EntitySpan& span : gold_spans) {
      if (!pred_set.count(span)) ++report.per_category[span.category].fn;
    }
  }

  for (auto& [category, counts] : report.per_category) {
    report.overall.tp += counts.tp;
    report.overall.fp += counts.fp;
    report.overall.fn += counts.fn;
    finalize(counts);
  }
  finalize(report.overall);
  report.token_accuracy =
      report.tokens > 0 ? 100.0 * correct_tokens / report.tokens : 0.0;
  return report;
}

RunAggregate aggregate_f1s(const std::vector<double>& f1s) {
  if (f1s.empty()) throw Error("aggregate: no runs");
  RunAggregate agg;
  agg.f1s = f1s;
  double sum = 0.0;
  agg.max = f1s.front();
  for (double f : f1s) {
    sum += f;
    agg.max = std::max(agg.max, f);
  }
  agg.mean = sum / static_cast<double>(f1s.size());
  if (f1s.size() > 1) {
    double ss = 0.0;
    for (double f : f1s) ss += (f - agg.mean) * (f - agg.mean);
    agg.stddev = std::sqrt(ss / static_cast<double>(f1s.size() - 1));
  }
  return agg;
}

RunAggregate aggregate_runs(const std::vector<EvalReport>& reports) {
  std::vector<double> f1s;
  f1s.reserve(reports.size());
  for (const EvalReport& r : reports) f1s.push_back(r.overall.f1);
  return aggregate_f1s(f1s);
}

std::string render_report(const EvalReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line),
                "processed %lld tokens with %lld phrases; found: %lld phrases; "
                "correct: %lld.\n",
                report.tokens, report.gold_spans, report.pred_spans,
                report.overall.tp);
  out << line;
  std::snprintf(line, sizeof(line),
                "accuracy: %6.2f%%; precision: %6.2f%%; recall: %6.2f%%; "
                "FB1: %6.2f\n",
                report.token_accuracy, report.overall.precision,
                report.overall.recall, report.overall.f1);
  out << line;
  for (const auto& [category, counts] : report.per_category) {
    std::snprintf(line, sizeof(line),
                  "%17s: precision: %6.2f%%; recall: %6.2f%%; FB1: %6.2f  %lld\n",
                  category.c_str(), counts.precision, counts.recall, counts.f1,
                  counts.tp + counts.fp);
    out << line;
  }
  out << '\n';
  auto kv = [&](const std::string& key, double value) {
    std::snprintf(line, sizeof(line), "%s=%.2f\n", key.c_str(), value);
    out << line;
  };
  out << "overall.tp=" << report.overall.tp << '\n';
  out << "overall.fp=" << report.overall.fp << '\n';
  out << "overall.fn=" << report.overall.fn << '\n';
  kv("overall.precision", report.overall.precision);
  kv("overall.recall", report.overall.recall);
  kv("overall.f1", report.overall.f1);
  kv("token.accuracy", report.token_accuracy);
  for (const auto& [category, counts] : report.per_category) {
    kv(category + ".precision", counts.precision);
    kv(category + ".recall", counts.recall);
    kv(category + ".f1", counts.f1);
  }
  return out.str();
}

}  // namespace gner::evaluator

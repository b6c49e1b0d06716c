#pragma once

#include <map>
#include <string>
#include <vector>

#include "gner/conll.hpp"

namespace gner::evaluator {

struct CategoryCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  double precision = 0.0;  // percent
  double recall = 0.0;     // percent
  double f1 = 0.0;         // percent
};

struct EvalReport {
  std::map<std::string, CategoryCounts> per_category;
  CategoryCounts overall;
  double token_accuracy = 0.0;  // percent
  long long tokens = 0;
  long long gold_spans = 0;
  long long pred_spans = 0;
};

// Entity-level exact-match scoring with the lenient span decoding of the
// CoNLL-2003 evaluation script. Both corpora must have identical
// sentence/token structure (same forms, same lengths).
EvalReport evaluate(const conll::Corpus& pred, const conll::Corpus& gold);

struct RunAggregate {
  std::vector<double> f1s;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single run
  double max = 0.0;
};

RunAggregate aggregate_runs(const std::vector<EvalReport>& reports);
RunAggregate aggregate_f1s(const std::vector<double>& f1s);

// conlleval-style text block followed by machine-readable key=value lines.
std::string render_report(const EvalReport& report);

}  // namespace gner::evaluator

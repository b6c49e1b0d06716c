#pragma once

#include <vector>

#include "gner/mat.hpp"

namespace gner {

// Linear-chain CRF over L labels with virtual START (= L) and STOP
// (= L+1) states. `transitions` is (L+2)x(L+2); transitions.at(a, b) is
// the score of moving from a to b. A path's score is
//   trans(START, y_0) + sum_t emissions(t, y_t)
//                     + sum_t trans(y_{t-1}, y_t) + trans(y_last, STOP).

// log sum over all label paths of exp(path score); forward algorithm in
// log space. Requires at least one token.
double crf_log_partition(const Mat& emissions, const Mat& transitions);

// loss = log_partition - gold path score (always >= 0). When the gradient
// outputs are non-null they are resized and overwritten: d_emissions is
// the per-position marginal minus the gold indicator, d_transitions the
// expected minus observed transition counts.
double crf_neg_log_likelihood(const Mat& emissions, const Mat& transitions,
                              const std::vector<int>& gold, Mat* d_emissions,
                              Mat* d_transitions);

// Maximum-score path. Ties break toward the lowest label index.
std::vector<int> viterbi_decode(const Mat& emissions, const Mat& transitions);

double crf_path_score(const Mat& emissions, const Mat& transitions,
                      const std::vector<int>& path);

}  // namespace gner

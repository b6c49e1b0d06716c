#include "gner/crf.hpp"

#include <cmath>
#include <limits>

#include "gner/error.hpp"

namespace gner {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const double* x, int n) {
  double m = kNegInf;
  for (int i = 0; i < n; ++i) m = std::max(m, x[i]);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

void check_shapes(const Mat& emissions, const Mat& transitions) {
  if (emissions.rows < 1) throw Error("crf: empty sequence");
  int l = emissions.cols;
  if (transitions.rows != l + 2 || transitions.cols != l + 2) {
    throw Error("crf: transition matrix must be (L+2)x(L+2)");
  }
}

// alpha(t, j) = log sum over paths ending in label j at position t.
Mat forward_lattice(const Mat& emissions, const Mat& transitions) {
  const int n = emissions.rows;
  const int l = emissions.cols;
  const int start = l;
  Mat alpha(n, l);
  for (int j = 0; j < l; ++j) {
    alpha.at(0, j) = transitions.at(start, j) + emissions.at(0, j);
  }
  std::vector<double> scores(l);
  for (int t = 1; t < n; ++t) {
    for (int j = 0; j < l; ++j) {
      for (int i = 0; i < l; ++i) {
        scores[i] = alpha.at(t - 1, i) + transitions.at(i, j);
      }
      alpha.at(t, j) = logsumexp(scores.data(), l) + emissions.at(t, j);
    }
  }
  return alpha;
}

// beta(t, i) = log sum over path suffixes starting with label i at t,
// including the final transition into STOP.
Mat backward_lattice(const Mat& emissions, const Mat& transitions) {
  const int n = emissions.rows;
  const int l = emissions.cols;
  const int stop = l + 1;
  Mat beta(n, l);
  for (int i = 0; i < l; ++i) beta.at(n - 1, i) = transitions.at(i, stop);
  std::vector<double> scores(l);
  for (int t = n - 2; t >= 0; --t) {
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < l; ++j) {
        scores[j] = transitions.at(i, j) + emissions.at(t + 1, j) + beta.at(t + 1, j);
      }
      beta.at(t, i) = logsumexp(scores.data(), l);
    }
  }
  return beta;
}

}  // namespace

double crf_log_partition(const Mat& emissions, const Mat& transitions) {
  check_shapes(emissions, transitions);
  const int n = emissions.rows;
  const int l = emissions.cols;
  const int stop = l + 1;
  Mat alpha = forward_lattice(emissions, transitions);
  std::vector<double> finals(l);
  for (int j = 0; j < l; ++j) finals[j] = alpha.at(n - 1, j) + transitions.at(j, stop);
  return logsumexp(finals.data(), l);
}

double crf_path_score(const Mat& emissions, const Mat& transitions,
                      const std::vector<int>& path) {
  check_shapes(emissions, transitions);
  const int n = emissions.rows;
  const int l = emissions.cols;
  if (static_cast<int>(path.size()) != n) throw Error("crf: path length mismatch");
  for (int y : path) {
    if (y < 0 || y >= l) throw Error("crf: label index out of range");
  }
  double score = transitions.at(l, path[0]) + emissions.at(0, path[0]);
  for (int t = 1; t < n; ++t) {
    score += transitions.at(path[t - 1], path[t]) + emissions.at(t, path[t]);
  }
  score += transitions.at(path[n - 1], l + 1);
  return score;
}

double crf_neg_log_likelihood(const Mat& emissions, const Mat& transitions,
                              const std::vector<int>& gold, Mat* d_emissions,
                              Mat* d_transitions) {
  check_shapes(emissions, transitions);
  const int n = emissions.rows;
  const int l = emissions.cols;
  const int start = l;
  const int stop = l + 1;

  double gold_score = crf_path_score(emissions, transitions, gold);
  Mat alpha = forward_lattice(emissions, transitions);
  std::vector<double> finals(l);
  for (int j = 0; j < l; ++j) finals[j] = alpha.at(n - 1, j) + transitions.at(j, stop);
  double log_z = logsumexp(finals.data(), l);
  double loss = log_z - gold_score;

  if (!d_emissions && !d_transitions) return loss;

  Mat beta = backward_lattice(emissions, transitions);
  if (d_emissions) *d_emissions = Mat(n, l);
  if (d_transitions) *d_transitions = Mat(l + 2, l + 2);

  // Unary marginals.
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < l; ++j) {
      double p = std::exp(alpha.at(t, j) + beta.at(t, j) - log_z);
      if (d_emissions) {
        d_emissions->at(t, j) = p - (gold[t] == j ? 1.0 : 0.0);
      }
      if (d_transitions) {
        if (t == 0) d_transitions->at(start, j) += p;
        if (t == n - 1) d_transitions->at(j, stop) += p;
      }
    }
  }
  if (d_transitions) {
    d_transitions->at(start, gold[0]) -= 1.0;
    d_transitions->at(gold[n - 1], stop) -= 1.0;
    // Pairwise marginals.
    for (int t = 0; t + 1 < n; ++t) {
      for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) {
          double p = std::exp(alpha.at(t, i) + transitions.at(i, j) +
                              emissions.at(t + 1, j) + beta.at(t + 1, j) - log_z);
          d_transitions->at(i, j) += p;
        }
      }
      d_transitions->at(gold[t], gold[t + 1]) -= 1.0;
    }
  }
  return loss;
}

std::vector<int> viterbi_decode(const Mat& emissions, const Mat& transitions) {
  check_shapes(emissions, transitions);
  const int n = emissions.rows;
  const int l = emissions.cols;
  const int start = l;
  const int stop = l + 1;

  Mat best(n, l);
  std::vector<std::vector<int>> backpointer(n, std::vector<int>(l, 0));
  for (int j = 0; j < l; ++j) {
    best.at(0, j) = transitions.at(start, j) + emissions.at(0, j);
  }
  for (int t = 1; t < n; ++t) {
    for (int j = 0; j < l; ++j) {
      double best_score = kNegInf;
      int best_prev = 0;
      for (int i = 0; i < l; ++i) {
        double score = best.at(t - 1, i) + transitions.at(i, j);
        // Strict > keeps the lowest predecessor index on ties.
        if (score > best_score) {
          best_score = score;
          best_prev = i;
        }
      }
      best.at(t, j) = best_score + emissions.at(t, j);
      backpointer[t][j] = best_prev;
    }
  }
  double best_final = kNegInf;
  int best_label = 0;
  for (int j = 0; j < l; ++j) {
    double score = best.at(n - 1, j) + transitions.at(j, stop);
    if (score > best_final) {
      best_final = score;
      best_label = j;
    }
  }
  std::vector<int> path(n);
  path[n - 1] = best_label;
  for (int t = n - 1; t > 0; --t) path[t - 1] = backpointer[t][path[t]];
  return path;
}

}  // namespace gner

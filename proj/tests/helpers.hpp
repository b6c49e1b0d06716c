#pragma once

// Shared test utilities: independent oracles and random-instance
// generators. Everything here is deliberately written against the raw
// definitions (chunk rules, path enumeration, LSTM cell equations), not
// against the library code it checks.

#include <cmath>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gner/mat.hpp"
#include "gner/rng.hpp"

namespace testutil {

using SpanTuple = std::set<std::tuple<int, int, std::string>>;

// conlleval-style chunk extraction. startOfChunk/endOfChunk mirror the
// original script's predicates for the B/I/O prefixes.
inline SpanTuple decode_chunks_oracle(const std::vector<std::string>& tags) {
  auto prefix_of = [](const std::string& t) -> char {
    if (t == "O" || t.empty()) return 'O';
    if (t.size() >= 2 && (t[0] == 'B' || t[0] == 'I') && t[1] == '-') return t[0];
    return 'O';
  };
  auto type_of = [](const std::string& t) -> std::string {
    if (t.size() >= 3 && (t[0] == 'B' || t[0] == 'I') && t[1] == '-') return t.substr(2);
    return "";
  };
  auto start_of_chunk = [](char prev, char tag, const std::string& prev_type,
                           const std::string& type) {
    if (tag == 'B') return true;
    if (tag == 'I' && prev == 'O') return true;
    if (tag == 'I' && prev != 'O' && prev_type != type) return true;
    return false;
  };
  auto end_of_chunk = [](char prev, char tag, const std::string& prev_type,
                         const std::string& type) {
    if (prev == 'O') return false;
    if (tag == 'O') return true;
    if (tag == 'B') return true;
    if (prev_type != type) return true;
    return false;
  };

  SpanTuple spans;
  char prev = 'O';
  std::string prev_type;
  int begin = -1;
  bool in_chunk = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    char tag = prefix_of(tags[i]);
    std::string type = type_of(tags[i]);
    if (in_chunk && end_of_chunk(prev, tag, prev_type, type)) {
      spans.insert({begin, static_cast<int>(i) - 1, prev_type});
      in_chunk = false;
    }
    if (tag != 'O' && start_of_chunk(prev, tag, prev_type, type)) {
      begin = static_cast<int>(i);
      in_chunk = true;
    }
    prev = tag;
    prev_type = type;
  }
  if (in_chunk) {
    spans.insert({begin, static_cast<int>(tags.size()) - 1, prev_type});
  }
  return spans;
}

// Random non-overlapping spans over [0, len).
struct RandomSpan {
  int start, end;
  std::string category;
};

inline std::vector<RandomSpan> random_spans(gner::Rng& rng, int len,
                                            const std::vector<std::string>& categories) {
  std::vector<RandomSpan> spans;
  int pos = 0;
  while (pos < len) {
    if (rng.next_double() < 0.45) {
      int max_len = std::min(3, len - pos);
      int span_len = 1 + static_cast<int>(rng.next_below(max_len));
      spans.push_back({pos, pos + span_len - 1,
                       categories[rng.next_below(categories.size())]});
      pos += span_len;
    } else {
      ++pos;
    }
  }
  return spans;
}

// Proper IOB1 encoding: an entity starts with I-X unless the previous
// token ends a same-type entity, in which case B-X separates them.
inline std::vector<std::string> encode_iob1(const std::vector<RandomSpan>& spans,
                                            int len) {
  std::vector<std::string> tags(len, "O");
  const RandomSpan* prev = nullptr;
  for (const RandomSpan& s : spans) {
    bool adjacent_same =
        prev && prev->end + 1 == s.start && prev->category == s.category;
    tags[s.start] = (adjacent_same ? "B-" : "I-") + s.category;
    for (int i = s.start + 1; i <= s.end; ++i) tags[i] = "I-" + s.category;
    prev = &s;
  }
  return tags;
}

inline std::vector<std::string> encode_bio(const std::vector<RandomSpan>& spans,
                                           int len) {
  std::vector<std::string> tags(len, "O");
  for (const RandomSpan& s : spans) {
    tags[s.start] = "B-" + s.category;
    for (int i = s.start + 1; i <= s.end; ++i) tags[i] = "I-" + s.category;
  }
  return tags;
}

// --- brute-force CRF --------------------------------------------------

// Enumerates every label path and log-sum-exps the scores.
inline double brute_log_partition(const gner::Mat& emissions, const gner::Mat& trans) {
  const int n = emissions.rows;
  const int l = emissions.cols;
  std::vector<int> path(n, 0);
  double max_score = -1e300;
  std::vector<double> scores;
  while (true) {
    double score = trans.at(l, path[0]) + emissions.at(0, path[0]);
    for (int t = 1; t < n; ++t) {
      score += trans.at(path[t - 1], path[t]) + emissions.at(t, path[t]);
    }
    score += trans.at(path[n - 1], l + 1);
    scores.push_back(score);
    max_score = std::max(max_score, score);
    int t = n - 1;
    while (t >= 0 && ++path[t] == l) path[t--] = 0;
    if (t < 0) break;
  }
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - max_score);
  return max_score + std::log(sum);
}

// Exhaustive argmax under the library's documented tie-break (lowest
// label index at each backtracking step == reversed-lexicographic
// minimum among the maximum-score paths).
inline std::vector<int> brute_viterbi(const gner::Mat& emissions, const gner::Mat& trans) {
  const int n = emissions.rows;
  const int l = emissions.cols;
  std::vector<int> path(n, 0), best_path(n, 0);
  double best_score = -1e300;
  bool have_best = false;
  auto reversed_less = [&](const std::vector<int>& a, const std::vector<int>& b) {
    for (int t = n - 1; t >= 0; --t) {
      if (a[t] != b[t]) return a[t] < b[t];
    }
    return false;
  };
  while (true) {
    double score = trans.at(l, path[0]) + emissions.at(0, path[0]);
    for (int t = 1; t < n; ++t) {
      score += trans.at(path[t - 1], path[t]) + emissions.at(t, path[t]);
    }
    score += trans.at(path[n - 1], l + 1);
    if (!have_best || score > best_score ||
        (score == best_score && reversed_less(path, best_path))) {
      best_score = score;
      best_path = path;
      have_best = true;
    }
    int t = n - 1;
    while (t >= 0 && ++path[t] == l) path[t--] = 0;
    if (t < 0) break;
  }
  return best_path;
}

// Central finite difference of a scalar function with respect to one
// variable accessed through pointers.
template <typename F>
double finite_diff(double* x, F&& f, double eps = 1e-5) {
  double saved = *x;
  *x = saved + eps;
  double up = f();
  *x = saved - eps;
  double down = f();
  *x = saved;
  return (up - down) / (2.0 * eps);
}

// Fourth-order five-point stencil; truncation error O(h^4) keeps the
// noise floor near 1e-12 so relative checks stay meaningful for small
// gradients.
template <typename F>
double finite_diff4(double* x, F&& f, double h = 1e-3) {
  double saved = *x;
  *x = saved + h;
  double f1 = f();
  *x = saved - h;
  double f2 = f();
  *x = saved + 2.0 * h;
  double f3 = f();
  *x = saved - 2.0 * h;
  double f4 = f();
  *x = saved;
  return (8.0 * (f1 - f2) - (f3 - f4)) / (12.0 * h);
}

inline double rel_err(double a, double b) {
  double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

}  // namespace testutil

#pragma once

#include <cstddef>
#include <vector>

#include "gner/kernels.hpp"

namespace gner {

// Dense row-major matrix of doubles. Everything the tagger and the
// embedding trainer learn lives in these.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const {
    return data.data() + static_cast<std::size_t>(r) * cols;
  }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  std::size_t size() const { return data.size(); }
  void fill(double v) { data.assign(data.size(), v); }

  bool operator==(const Mat&) const = default;
};

// y += W x
inline void matvec_acc(const Mat& w, const double* x, double* y) {
  for (int r = 0; r < w.rows; ++r) y[r] += kernels::dot(w.row(r), x, w.cols);
}

// dx += W^T dy  (row-wise axpy keeps the access pattern contiguous)
inline void matvec_t_acc(const Mat& w, const double* dy, double* dx) {
  for (int r = 0; r < w.rows; ++r) kernels::axpy(dy[r], w.row(r), dx, w.cols);
}

// dW += dy x^T
inline void outer_acc(Mat& dw, const double* dy, const double* x) {
  for (int r = 0; r < dw.rows; ++r) kernels::axpy(dy[r], x, dw.row(r), dw.cols);
}

}  // namespace gner

#pragma once

#include <vector>

#include "gner/mat.hpp"

namespace gner {

// Single-layer LSTM with manually derived backward pass. Gate blocks are
// ordered [input, forget, cell, output] inside the stacked weight rows.
struct LstmParams {
  Mat w_in;   // 4H x D
  Mat w_rec;  // 4H x H
  Mat bias;   // 1 x 4H

  int hidden() const { return w_rec.cols; }
  int input_dim() const { return w_in.cols; }

  static LstmParams sized(int input_dim, int hidden);
};

struct LstmStepCache {
  std::vector<double> x;
  std::vector<double> h_prev, c_prev;
  std::vector<double> i, f, g, o;  // post-activation gates
  std::vector<double> c, tanh_c, h;
};

using LstmSequenceCache = std::vector<LstmStepCache>;

// Runs the layer over `inputs`, returning one hidden state per step.
// The cache, when requested, holds everything the backward pass needs.
std::vector<std::vector<double>> lstm_forward(const LstmParams& params,
                                              const std::vector<std::vector<double>>& inputs,
                                              LstmSequenceCache* cache);

// Backpropagates `d_hidden` (one gradient per step; zero vectors where a
// step's output is unused), accumulating parameter gradients into `grad`
// and input gradients into `d_inputs`.
void lstm_backward(const LstmParams& params, const LstmSequenceCache& cache,
                   const std::vector<std::vector<double>>& d_hidden,
                   LstmParams& grad, std::vector<std::vector<double>>* d_inputs);

}  // namespace gner

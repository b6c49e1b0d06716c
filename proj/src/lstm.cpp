#include "gner/lstm.hpp"

#include <cmath>

#include "gner/error.hpp"

namespace gner {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

LstmParams LstmParams::sized(int input_dim, int hidden) {
  LstmParams p;
  p.w_in = Mat(4 * hidden, input_dim);
  p.w_rec = Mat(4 * hidden, hidden);
  p.bias = Mat(1, 4 * hidden);
  return p;
}

std::vector<std::vector<double>> lstm_forward(const LstmParams& params,
                                              const std::vector<std::vector<double>>& inputs,
                                              LstmSequenceCache* cache) {
  const int h = params.hidden();
  const int d = params.input_dim();
  std::vector<std::vector<double>> hiddens;
  hiddens.reserve(inputs.size());
  if (cache) {
    cache->clear();
    cache->reserve(inputs.size());
  }

  std::vector<double> h_prev(h, 0.0), c_prev(h, 0.0);
  std::vector<double> z(4 * h);

  for (const std::vector<double>& x : inputs) {
    if (static_cast<int>(x.size()) != d) throw Error("lstm: input dimension mismatch");
    // z = bias + W_in x + W_rec h_prev
    for (int j = 0; j < 4 * h; ++j) z[j] = params.bias.at(0, j);
    matvec_acc(params.w_in, x.data(), z.data());
    matvec_acc(params.w_rec, h_prev.data(), z.data());

    LstmStepCache step;
    step.x = x;
    step.h_prev = h_prev;
    step.c_prev = c_prev;
    step.i.resize(h);
    step.f.resize(h);
    step.g.resize(h);
    step.o.resize(h);
    step.c.resize(h);
    step.tanh_c.resize(h);
    step.h.resize(h);
    for (int j = 0; j < h; ++j) {
      step.i[j] = sigmoid(z[j]);
      step.f[j] = sigmoid(z[h + j]);
      step.g[j] = std::tanh(z[2 * h + j]);
      step.o[j] = sigmoid(z[3 * h + j]);
      step.c[j] = step.f[j] * c_prev[j] + step.i[j] * step.g[j];
      step.tanh_c[j] = std::tanh(step.c[j]);
      step.h[j] = step.o[j] * step.tanh_c[j];
    }
    h_prev = step.h;
    c_prev = step.c;
    hiddens.push_back(step.h);
    if (cache) cache->push_back(std::move(step));
  }
  return hiddens;
}

void lstm_backward(const LstmParams& params, const LstmSequenceCache& cache,
                   const std::vector<std::vector<double>>& d_hidden,
                   LstmParams& grad, std::vector<std::vector<double>>* d_inputs) {
  const int h = params.hidden();
  const int d = params.input_dim();
  const std::size_t steps = cache.size();
  if (d_hidden.size() != steps) throw Error("lstm backward: gradient count mismatch");

  if (d_inputs) d_inputs->assign(steps, std::vector<double>(d, 0.0));
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0);
  std::vector<double> dz(4 * h);

  for (std::size_t t = steps; t-- > 0;) {
    const LstmStepCache& step = cache[t];
    for (int j = 0; j < h; ++j) {
      double dh = d_hidden[t][j] + dh_next[j];
      double dc = dc_next[j] + dh * step.o[j] * (1.0 - step.tanh_c[j] * step.tanh_c[j]);
      double d_o = dh * step.tanh_c[j];
      double d_i = dc * step.g[j];
      double d_g = dc * step.i[j];
      double d_f = dc * step.c_prev[j];
      dc_next[j] = dc * step.f[j];
      dz[j] = d_i * step.i[j] * (1.0 - step.i[j]);
      dz[h + j] = d_f * step.f[j] * (1.0 - step.f[j]);
      dz[2 * h + j] = d_g * (1.0 - step.g[j] * step.g[j]);
      dz[3 * h + j] = d_o * step.o[j] * (1.0 - step.o[j]);
    }
    outer_acc(grad.w_in, dz.data(), step.x.data());
    outer_acc(grad.w_rec, dz.data(), step.h_prev.data());
    for (int j = 0; j < 4 * h; ++j) grad.bias.at(0, j) += dz[j];
    if (d_inputs) matvec_t_acc(params.w_in, dz.data(), (*d_inputs)[t].data());
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    matvec_t_acc(params.w_rec, dz.data(), dh_next.data());
  }
}

}  // namespace gner

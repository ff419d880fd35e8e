#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vloc/errors.hpp"
#include "vloc/rng.hpp"

namespace vloc::nnet {

using Vec = std::vector<double>;

struct Matrix {
  int rows = 0;
  int cols = 0;
  Vec a;  // row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

// y (+)= M x
void gemv(const Matrix& m, const double* x, double* y, bool accumulate);
// y += M^T x
void gemv_t_acc(const Matrix& m, const double* x, double* y);
// g += u v^T
void outer_acc(Matrix& g, const double* u, const double* v);

void init_uniform(Matrix& m, Rng& rng, double bound);

// ---------------------------------------------------------------------------
// LSTM

struct LstmLayerParams {
  int d_in = 0;
  int d_out = 0;
  bool use_bias = false;
  Matrix W_i, W_f, W_o, W_c;  // d_out x d_in
  Matrix U_i, U_f, U_o, U_c;  // d_out x d_out
  Vec b_i, b_f, b_o, b_c;     // d_out; all-zero in bias-off mode
};

// Seeded init: every matrix uniform in +/- 1 / sqrt(its input width). In
// bias mode the forget bias starts at 1, the others at 0.
LstmLayerParams make_lstm_layer(int d_in, int d_out, bool use_bias, Rng& rng);

struct LstmGates {
  Vec i, f, o, g, c, tanh_c;  // one frame's gate/state values, each d_out
};

// One step of the cell recurrence; gates (when non-null) keep what the
// backward pass needs.
void lstm_cell_forward(const Vec& z, const Vec& h_prev, const Vec& c_prev,
                       const LstmLayerParams& p, Vec& h_out, Vec& c_out,
                       LstmGates* gates = nullptr);

struct LstmLayerGrads {
  Matrix W_i, W_f, W_o, W_c, U_i, U_f, U_o, U_c;
  Vec b_i, b_f, b_o, b_c;
};
LstmLayerGrads zero_grads_like(const LstmLayerParams& p);

// Gradient of one cell step. dh/dc flow in at frame t; dz, dh_prev and
// dc_prev flow out; parameter gradients accumulate into acc.
void lstm_cell_backward(const LstmLayerParams& p, const Vec& z, const Vec& h_prev,
                        const Vec& c_prev, const LstmGates& gates, const Vec& dh, const Vec& dc,
                        Vec& dz_out, Vec& dh_prev_out, Vec& dc_prev_out, LstmLayerGrads& acc);

struct LstmStackState {
  std::vector<Vec> h;  // per layer, d_out each
  std::vector<Vec> c;
};
LstmStackState zero_state(const std::vector<LstmLayerParams>& stack);

struct LstmStackCache {
  int frames = 0;
  LstmStackState init;
  std::vector<std::vector<LstmGates>> gates;  // [layer][frame]
  std::vector<std::vector<Vec>> h;            // [layer][frame]
};

// Runs the stack over the sequence and returns the top layer's h at the
// last frame. With a null cache only rolling per-layer state is kept.
Vec lstm_stack_forward(const std::vector<Vec>& seq, const std::vector<LstmLayerParams>& stack,
                       LstmStackCache* cache = nullptr, const LstmStackState* init = nullptr);

// Full backpropagation through time from the gradient on the top-layer
// final h. Accumulates into grads (one entry per layer).
void lstm_stack_backward(const std::vector<Vec>& seq, const std::vector<LstmLayerParams>& stack,
                         const LstmStackCache& cache, const Vec& dh_top_last,
                         std::vector<LstmLayerGrads>& grads);

// ---------------------------------------------------------------------------
// Fully connected head

enum class Activation { Rectifier, Identity };

struct FcLayerParams {
  Matrix W;
  Vec b;
  Activation act = Activation::Rectifier;
};
FcLayerParams make_fc_layer(int d_in, int d_out, Activation act, Rng& rng);

struct FcLayerGrads {
  Matrix W;
  Vec b;
};
FcLayerGrads zero_grads_like(const FcLayerParams& p);

struct FcCache {
  std::vector<Vec> inputs;                 // x entering each layer
  std::vector<Vec> preact;                 // W x + b per layer
  std::vector<std::vector<uint8_t>> keep;  // dropout keep masks (hidden layers)
  double rate = 0.0;
  bool training = false;
};

// Hidden layers: activation then (training only) inverted dropout. The
// final layer is affine with no dropout; inference applies no masks.
Vec fc_forward(const Vec& x, const std::vector<FcLayerParams>& layers, double dropout_rate,
               Rng* rng, bool training, FcCache* cache = nullptr);

// Returns the gradient with respect to the input.
Vec fc_backward(const std::vector<FcLayerParams>& layers, const FcCache& cache, const Vec& dy,
                std::vector<FcLayerGrads>& grads);

// ---------------------------------------------------------------------------
// Convolution (3x3, stride 1, same padding, rectifier)

struct Tensor3 {
  int ch = 0, h = 0, w = 0;
  Vec v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_) : ch(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, 0.0) {}
  double& at(int c_, int y, int x) { return v[(static_cast<size_t>(c_) * h + y) * w + x]; }
  double at(int c_, int y, int x) const { return v[(static_cast<size_t>(c_) * h + y) * w + x]; }
};

struct ConvLayerParams {
  int in_ch = 0;
  int out_ch = 0;
  Vec w;  // [out][in][3][3]
  Vec b;  // per filter
};
ConvLayerParams make_conv_layer(int in_ch, int out_ch, Rng& rng);

struct ConvLayerGrads {
  Vec w, b;
};
ConvLayerGrads zero_grads_like(const ConvLayerParams& p);

struct ConvCache {
  Tensor3 input;
  Tensor3 preact;
};

Tensor3 conv2d_forward(const Tensor3& x, const ConvLayerParams& p, ConvCache* cache = nullptr);
// Returns the gradient with respect to the input tensor.
Tensor3 conv2d_backward(const ConvLayerParams& p, const ConvCache& cache, const Tensor3& dy,
                        ConvLayerGrads& grads);

// ---------------------------------------------------------------------------
// Dropout on flat activations (inverted: kept units scale by 1/(1-rate))

std::vector<uint8_t> dropout_forward_inplace(Vec& a, double rate, Rng& rng);
void dropout_backward_inplace(Vec& da, const std::vector<uint8_t>& keep, double rate);

// ---------------------------------------------------------------------------
// Loss

double loss_mse(const Vec& pred, const Vec& target);
Vec loss_mse_grad(const Vec& pred, const Vec& target);
double loss_mae(const Vec& pred, const Vec& target);
Vec loss_mae_grad(const Vec& pred, const Vec& target);

// ---------------------------------------------------------------------------
// Optimizer

struct OptimizerState {
  enum class Method { Adam, Sgd };
  Method method = Method::Adam;
  double learning_rate = 8e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Vec> m, v;  // first/second moments, sized on first step
};

// In-place adaptive-moment update with bias correction (or plain SGD).
void adam_step(const std::vector<Vec*>& params, const std::vector<const Vec*>& grads,
               OptimizerState& st);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking

struct GradCheckConfig {
  double step = 1e-5;
  size_t max_coords = 0;  // 0 checks every coordinate
  uint64_t subsample_seed = 7;
};

// Central differences against the analytic gradient; returns the maximum
// relative error |a - n| / max(1e-8, |a| + |n|) over the checked
// coordinates. loss() must re-evaluate the objective at the parameters'
// current values; analytic() must return gradients aligned with params.
double grad_check(const std::function<double()>& loss,
                  const std::function<std::vector<Vec>()>& analytic,
                  const std::vector<Vec*>& params, const GradCheckConfig& cfg = {});

}  // namespace vloc::nnet

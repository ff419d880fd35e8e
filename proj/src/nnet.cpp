#include "vloc/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace vloc::nnet {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void gemv(const Matrix& m, const double* x, double* y, bool accumulate) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = &m.a[static_cast<size_t>(r) * m.cols];
    double s = accumulate ? y[r] : 0.0;
    for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
}

void gemv_t_acc(const Matrix& m, const double* x, double* y) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = &m.a[static_cast<size_t>(r) * m.cols];
    const double xr = x[r];
    for (int c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
  }
}

void outer_acc(Matrix& g, const double* u, const double* v) {
  for (int r = 0; r < g.rows; ++r) {
    double* row = &g.a[static_cast<size_t>(r) * g.cols];
    const double ur = u[r];
    for (int c = 0; c < g.cols; ++c) row[c] += ur * v[c];
  }
}

void init_uniform(Matrix& m, Rng& rng, double bound) {
  for (auto& v : m.a) v = rng.uniform(-bound, bound);
}

// ---------------------------------------------------------------------------
// LSTM

LstmLayerParams make_lstm_layer(int d_in, int d_out, bool use_bias, Rng& rng) {
  if (d_in <= 0 || d_out <= 0) throw BadConfig("lstm layer dims must be positive");
  LstmLayerParams p;
  p.d_in = d_in;
  p.d_out = d_out;
  p.use_bias = use_bias;
  double bw = 1.0 / std::sqrt(static_cast<double>(d_in));
  double bu = 1.0 / std::sqrt(static_cast<double>(d_out));
  for (Matrix* m : {&p.W_i, &p.W_f, &p.W_o, &p.W_c}) {
    *m = Matrix(d_out, d_in);
    init_uniform(*m, rng, bw);
  }
  for (Matrix* m : {&p.U_i, &p.U_f, &p.U_o, &p.U_c}) {
    *m = Matrix(d_out, d_out);
    init_uniform(*m, rng, bu);
  }
  p.b_i.assign(d_out, 0.0);
  p.b_f.assign(d_out, use_bias ? 1.0 : 0.0);  // forget bias opens the gate
  p.b_o.assign(d_out, 0.0);
  p.b_c.assign(d_out, 0.0);
  return p;
}

void lstm_cell_forward(const Vec& z, const Vec& h_prev, const Vec& c_prev,
                       const LstmLayerParams& p, Vec& h_out, Vec& c_out, LstmGates* gates) {
  const int d = p.d_out;
  if (static_cast<int>(z.size()) != p.d_in || static_cast<int>(h_prev.size()) != d ||
      static_cast<int>(c_prev.size()) != d)
    throw ShapeMismatch("lstm cell input shapes");

  LstmGates local;
  LstmGates& gt = gates ? *gates : local;
  gt.i = p.b_i;
  gt.f = p.b_f;
  gt.o = p.b_o;
  gt.g = p.b_c;
  gemv(p.W_i, z.data(), gt.i.data(), true);
  gemv(p.U_i, h_prev.data(), gt.i.data(), true);
  gemv(p.W_f, z.data(), gt.f.data(), true);
  gemv(p.U_f, h_prev.data(), gt.f.data(), true);
  gemv(p.W_o, z.data(), gt.o.data(), true);
  gemv(p.U_o, h_prev.data(), gt.o.data(), true);
  gemv(p.W_c, z.data(), gt.g.data(), true);
  gemv(p.U_c, h_prev.data(), gt.g.data(), true);

  gt.c.resize(d);
  gt.tanh_c.resize(d);
  h_out.resize(d);
  c_out.resize(d);
  for (int k = 0; k < d; ++k) {
    gt.i[k] = sigmoid(gt.i[k]);
    gt.f[k] = sigmoid(gt.f[k]);
    gt.o[k] = sigmoid(gt.o[k]);
    gt.g[k] = std::tanh(gt.g[k]);
    double c = gt.f[k] * c_prev[k] + gt.i[k] * gt.g[k];
    double tc = std::tanh(c);
    gt.c[k] = c;
    gt.tanh_c[k] = tc;
    c_out[k] = c;
    h_out[k] = gt.o[k] * tc;
  }
}

LstmLayerGrads zero_grads_like(const LstmLayerParams& p) {
  LstmLayerGrads g;
  for (Matrix* m : {&g.W_i, &g.W_f, &g.W_o, &g.W_c}) *m = Matrix(p.d_out, p.d_in);
  for (Matrix* m : {&g.U_i, &g.U_f, &g.U_o, &g.U_c}) *m = Matrix(p.d_out, p.d_out);
  for (Vec* v : {&g.b_i, &g.b_f, &g.b_o, &g.b_c}) v->assign(p.d_out, 0.0);
  return g;
}

void lstm_cell_backward(const LstmLayerParams& p, const Vec& z, const Vec& h_prev,
                        const Vec& c_prev, const LstmGates& gates, const Vec& dh, const Vec& dc,
                        Vec& dz_out, Vec& dh_prev_out, Vec& dc_prev_out, LstmLayerGrads& acc) {
  const int d = p.d_out;
  Vec da_i(d), da_f(d), da_o(d), da_g(d);
  dc_prev_out.assign(d, 0.0);
  for (int k = 0; k < d; ++k) {
    double i = gates.i[k], f = gates.f[k], o = gates.o[k], g = gates.g[k];
    double tc = gates.tanh_c[k];
    double d_o = dh[k] * tc;
    double d_c = dc[k] + dh[k] * o * (1.0 - tc * tc);
    da_o[k] = d_o * o * (1.0 - o);
    da_f[k] = d_c * c_prev[k] * f * (1.0 - f);
    da_i[k] = d_c * g * i * (1.0 - i);
    da_g[k] = d_c * i * (1.0 - g * g);
    dc_prev_out[k] = d_c * f;
  }

  outer_acc(acc.W_i, da_i.data(), z.data());
  outer_acc(acc.W_f, da_f.data(), z.data());
  outer_acc(acc.W_o, da_o.data(), z.data());
  outer_acc(acc.W_c, da_g.data(), z.data());
  outer_acc(acc.U_i, da_i.data(), h_prev.data());
  outer_acc(acc.U_f, da_f.data(), h_prev.data());
  outer_acc(acc.U_o, da_o.data(), h_prev.data());
  outer_acc(acc.U_c, da_g.data(), h_prev.data());
  if (p.use_bias) {
    for (int k = 0; k < d; ++k) {
      acc.b_i[k] += da_i[k];
      acc.b_f[k] += da_f[k];
      acc.b_o[k] += da_o[k];
      acc.b_c[k] += da_g[k];
    }
  }

  dz_out.assign(p.d_in, 0.0);
  gemv_t_acc(p.W_i, da_i.data(), dz_out.data());
  gemv_t_acc(p.W_f, da_f.data(), dz_out.data());
  gemv_t_acc(p.W_o, da_o.data(), dz_out.data());
  gemv_t_acc(p.W_c, da_g.data(), dz_out.data());

  dh_prev_out.assign(d, 0.0);
  gemv_t_acc(p.U_i, da_i.data(), dh_prev_out.data());
  gemv_t_acc(p.U_f, da_f.data(), dh_prev_out.data());
  gemv_t_acc(p.U_o, da_o.data(), dh_prev_out.data());
  gemv_t_acc(p.U_c, da_g.data(), dh_prev_out.data());
}

LstmStackState zero_state(const std::vector<LstmLayerParams>& stack) {
  LstmStackState st;
  for (const auto& p : stack) {
    st.h.emplace_back(p.d_out, 0.0);
    st.c.emplace_back(p.d_out, 0.0);
  }
  return st;
}

namespace {

void check_stack(const std::vector<Vec>& seq, const std::vector<LstmLayerParams>& stack) {
  if (seq.empty()) throw EmptySequence("lstm stack needs at least one frame");
  if (stack.empty()) throw ShapeMismatch("empty lstm stack");
  if (static_cast<int>(seq.front().size()) != stack.front().d_in)
    throw ShapeMismatch("sequence feature dim does not match layer 1");
  for (size_t l = 1; l < stack.size(); ++l)
    if (stack[l].d_in != stack[l - 1].d_out)
      throw ShapeMismatch("lstm layer input dims do not chain");
}

}  // namespace

Vec lstm_stack_forward(const std::vector<Vec>& seq, const std::vector<LstmLayerParams>& stack,
                       LstmStackCache* cache, const LstmStackState* init) {
  check_stack(seq, stack);
  const size_t L = stack.size();
  const size_t T = seq.size();

  LstmStackState state = init ? *init : zero_state(stack);
  if (state.h.size() != L || state.c.size() != L)
    throw ShapeMismatch("initial state layer count");
  for (size_t l = 0; l < L; ++l)
    if (static_cast<int>(state.h[l].size()) != stack[l].d_out ||
        static_cast<int>(state.c[l].size()) != stack[l].d_out)
      throw ShapeMismatch("initial state dims");

  if (cache) {
    cache->frames = static_cast<int>(T);
    cache->init = state;
    cache->gates.assign(L, std::vector<LstmGates>(T));
    cache->h.assign(L, std::vector<Vec>(T));
  }

  Vec carry;
  for (size_t t = 0; t < T; ++t) {
    const Vec* input = &seq[t];
    for (size_t l = 0; l < L; ++l) {
      Vec h_new, c_new;
      lstm_cell_forward(*input, state.h[l], state.c[l], stack[l], h_new, c_new,
                        cache ? &cache->gates[l][t] : nullptr);
      state.h[l] = std::move(h_new);
      state.c[l] = std::move(c_new);
      if (cache) cache->h[l][t] = state.h[l];
      input = &state.h[l];
    }
  }
  carry = state.h[L - 1];
  return carry;
}

void lstm_stack_backward(const std::vector<Vec>& seq, const std::vector<LstmLayerParams>& stack,
                         const LstmStackCache& cache, const Vec& dh_top_last,
                         std::vector<LstmLayerGrads>& grads) {
  check_stack(seq, stack);
  const size_t L = stack.size();
  const size_t T = seq.size();
  if (cache.frames != static_cast<int>(T) || cache.gates.size() != L || cache.h.size() != L)
    throw MissingCache("stack cache does not match the forward pass");
  if (static_cast<int>(dh_top_last.size()) != stack.back().d_out)
    throw ShapeMismatch("upstream gradient dim");
  if (grads.empty())
    for (const auto& p : stack) grads.push_back(zero_grads_like(p));
  if (grads.size() != L) throw ShapeMismatch("gradient accumulator layer count");

  // dh arriving from the layer above, per frame. The head only feeds the
  // top layer's last frame.
  std::vector<Vec> dh_above(T);
  for (size_t t = 0; t + 1 < T; ++t) dh_above[t].assign(stack[L - 1].d_out, 0.0);
  dh_above[T - 1] = dh_top_last;

  for (size_t li = L; li-- > 0;) {
    const LstmLayerParams& p = stack[li];
    const bool want_dz = li > 0;
    std::vector<Vec> dz_store;
    if (want_dz) dz_store.resize(T);

    Vec dh_carry(p.d_out, 0.0), dc_carry(p.d_out, 0.0);
    Vec dz, dh_prev, dc_prev;
    for (size_t t = T; t-- > 0;) {
      Vec dh_total = dh_above[t];
      for (int k = 0; k < p.d_out; ++k) dh_total[k] += dh_carry[k];
      const Vec& z = li == 0 ? seq[t] : cache.h[li - 1][t];
      const Vec& h_prev = t == 0 ? cache.init.h[li] : cache.h[li][t - 1];
      const Vec& c_prev = t == 0 ? cache.init.c[li] : cache.gates[li][t - 1].c;
      lstm_cell_backward(p, z, h_prev, c_prev, cache.gates[li][t], dh_total, dc_carry, dz,
                         dh_prev, dc_prev, grads[li]);
      dh_carry = std::move(dh_prev);
      dc_carry = std::move(dc_prev);
      if (want_dz) dz_store[t] = std::move(dz);
    }
    if (want_dz) dh_above = std::move(dz_store);
  }
}

// ---------------------------------------------------------------------------
// Fully connected

FcLayerParams make_fc_layer(int d_in, int d_out, Activation act, Rng& rng) {
  if (d_in <= 0 || d_out <= 0) throw BadConfig("fc layer dims must be positive");
  FcLayerParams p;
  p.W = Matrix(d_out, d_in);
  init_uniform(p.W, rng, 1.0 / std::sqrt(static_cast<double>(d_in)));
  p.b.assign(d_out, 0.0);
  p.act = act;
  return p;
}

FcLayerGrads zero_grads_like(const FcLayerParams& p) {
  FcLayerGrads g;
  g.W = Matrix(p.W.rows, p.W.cols);
  g.b.assign(p.b.size(), 0.0);
  return g;
}

Vec fc_forward(const Vec& x, const std::vector<FcLayerParams>& layers, double dropout_rate,
               Rng* rng, bool training, FcCache* cache) {
  if (layers.empty()) throw ShapeMismatch("empty fc head");
  if (!(dropout_rate >= 0.0) || dropout_rate >= 1.0)
    throw BadConfig("dropout rate must be in [0, 1)");
  if (static_cast<int>(x.size()) != layers.front().W.cols)
    throw ShapeMismatch("fc input dim");
  if (training && dropout_rate > 0.0 && rng == nullptr)
    throw BadInput("training-mode dropout needs a generator");

  if (cache) {
    cache->inputs.clear();
    cache->preact.clear();
    cache->keep.assign(layers.size(), {});
    cache->rate = dropout_rate;
    cache->training = training;
  }

  Vec a = x;
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    if (static_cast<int>(a.size()) != p.W.cols) throw ShapeMismatch("fc layer dims do not chain");
    if (cache) cache->inputs.push_back(a);
    Vec u = p.b;
    gemv(p.W, a.data(), u.data(), true);
    if (cache) cache->preact.push_back(u);
    if (p.act == Activation::Rectifier)
      for (auto& v : u) v = v > 0.0 ? v : 0.0;
    const bool hidden = l + 1 < layers.size();
    if (hidden && training && dropout_rate > 0.0) {
      auto keep = dropout_forward_inplace(u, dropout_rate, *rng);
      if (cache) cache->keep[l] = std::move(keep);
    }
    a = std::move(u);
  }
  return a;
}

Vec fc_backward(const std::vector<FcLayerParams>& layers, const FcCache& cache, const Vec& dy,
                std::vector<FcLayerGrads>& grads) {
  if (cache.inputs.size() != layers.size() || cache.preact.size() != layers.size())
    throw MissingCache("fc cache does not match the forward pass");
  if (grads.empty())
    for (const auto& p : layers) grads.push_back(zero_grads_like(p));
  if (grads.size() != layers.size()) throw ShapeMismatch("fc gradient accumulator count");

  Vec d = dy;
  for (size_t li = layers.size(); li-- > 0;) {
    const auto& p = layers[li];
    if (static_cast<int>(d.size()) != p.W.rows) throw ShapeMismatch("fc upstream gradient dim");
    const bool hidden = li + 1 < layers.size();
    if (hidden && cache.training && cache.rate > 0.0)
      dropout_backward_inplace(d, cache.keep[li], cache.rate);
    if (p.act == Activation::Rectifier) {
      const Vec& u = cache.preact[li];
      for (size_t k = 0; k < d.size(); ++k)
        if (u[k] <= 0.0) d[k] = 0.0;
    }
    outer_acc(grads[li].W, d.data(), cache.inputs[li].data());
    for (size_t k = 0; k < d.size(); ++k) grads[li].b[k] += d[k];
    Vec dx(p.W.cols, 0.0);
    gemv_t_acc(p.W, d.data(), dx.data());
    d = std::move(dx);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Convolution

ConvLayerParams make_conv_layer(int in_ch, int out_ch, Rng& rng) {
  if (in_ch <= 0 || out_ch <= 0) throw BadConfig("conv layer channels must be positive");
  ConvLayerParams p;
  p.in_ch = in_ch;
  p.out_ch = out_ch;
  p.w.resize(static_cast<size_t>(out_ch) * in_ch * 9);
  double bound = 1.0 / std::sqrt(static_cast<double>(in_ch) * 9.0);
  for (auto& v : p.w) v = rng.uniform(-bound, bound);
  p.b.assign(out_ch, 0.0);
  return p;
}

ConvLayerGrads zero_grads_like(const ConvLayerParams& p) {
  ConvLayerGrads g;
  g.w.assign(p.w.size(), 0.0);
  g.b.assign(p.b.size(), 0.0);
  return g;
}

Tensor3 conv2d_forward(const Tensor3& x, const ConvLayerParams& p, ConvCache* cache) {
  if (x.ch != p.in_ch) throw ShapeMismatch("conv input channel count");
  if (x.h <= 0 || x.w <= 0) throw ShapeMismatch("conv input is empty");

  Tensor3 pre(p.out_ch, x.h, x.w);
  for (int oc = 0; oc < p.out_ch; ++oc) {
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) pre.at(oc, y, xx) = p.b[oc];
    for (int ic = 0; ic < p.in_ch; ++ic) {
      for (int ky = -1; ky <= 1; ++ky) {
        for (int kx = -1; kx <= 1; ++kx) {
          double wv = p.w[((static_cast<size_t>(oc) * p.in_ch + ic) * 3 + (ky + 1)) * 3 + (kx + 1)];
          int y0 = std::max(0, -ky), y1 = std::min(x.h, x.h - ky);
          int x0 = std::max(0, -kx), x1 = std::min(x.w, x.w - kx);
          for (int y = y0; y < y1; ++y) {
            const double* src = &x.v[(static_cast<size_t>(ic) * x.h + (y + ky)) * x.w + (x0 + kx)];
            double* dst = &pre.v[(static_cast<size_t>(oc) * x.h + y) * x.w + x0];
            for (int xx = 0; xx < x1 - x0; ++xx) dst[xx] += wv * src[xx];
          }
        }
      }
    }
  }
  if (cache) {
    cache->input = x;
    cache->preact = pre;
  }
  Tensor3 out = pre;
  for (auto& v : out.v) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor3 conv2d_backward(const ConvLayerParams& p, const ConvCache& cache, const Tensor3& dy,
                        ConvLayerGrads& grads) {
  const Tensor3& x = cache.input;
  const Tensor3& pre = cache.preact;
  if (pre.ch != p.out_ch || dy.ch != p.out_ch || dy.h != x.h || dy.w != x.w)
    throw MissingCache("conv cache does not match the upstream gradient");
  if (grads.w.size() != p.w.size()) grads = zero_grads_like(p);

  Tensor3 du = dy;
  for (size_t k = 0; k < du.v.size(); ++k)
    if (pre.v[k] <= 0.0) du.v[k] = 0.0;

  Tensor3 dx(x.ch, x.h, x.w);
  for (int oc = 0; oc < p.out_ch; ++oc) {
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) grads.b[oc] += du.at(oc, y, xx);
    for (int ic = 0; ic < p.in_ch; ++ic) {
      for (int ky = -1; ky <= 1; ++ky) {
        for (int kx = -1; kx <= 1; ++kx) {
          size_t wi = ((static_cast<size_t>(oc) * p.in_ch + ic) * 3 + (ky + 1)) * 3 + (kx + 1);
          double wv = p.w[wi];
          double gw = 0.0;
          int y0 = std::max(0, -ky), y1 = std::min(x.h, x.h - ky);
          int x0 = std::max(0, -kx), x1 = std::min(x.w, x.w - kx);
          for (int y = y0; y < y1; ++y) {
            const double* src = &x.v[(static_cast<size_t>(ic) * x.h + (y + ky)) * x.w + (x0 + kx)];
            double* dsrc = &dx.v[(static_cast<size_t>(ic) * x.h + (y + ky)) * x.w + (x0 + kx)];
            const double* dup = &du.v[(static_cast<size_t>(oc) * x.h + y) * x.w + x0];
            for (int xx = 0; xx < x1 - x0; ++xx) {
              gw += dup[xx] * src[xx];
              dsrc[xx] += wv * dup[xx];
            }
          }
          grads.w[wi] += gw;
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Dropout

std::vector<uint8_t> dropout_forward_inplace(Vec& a, double rate, Rng& rng) {
  if (!(rate >= 0.0) || rate >= 1.0) throw BadConfig("dropout rate must be in [0, 1)");
  std::vector<uint8_t> keep(a.size(), 1);
  if (rate == 0.0) return keep;
  double scale = 1.0 / (1.0 - rate);
  for (size_t k = 0; k < a.size(); ++k) {
    if (rng.uniform01() < rate) {
      keep[k] = 0;
      a[k] = 0.0;
    } else {
      a[k] *= scale;
    }
  }
  return keep;
}

void dropout_backward_inplace(Vec& da, const std::vector<uint8_t>& keep, double rate) {
  if (keep.size() != da.size()) throw ShapeMismatch("dropout mask size");
  double scale = 1.0 / (1.0 - rate);
  for (size_t k = 0; k < da.size(); ++k) da[k] = keep[k] ? da[k] * scale : 0.0;
}

// ---------------------------------------------------------------------------
// Loss

namespace {
void check_pair(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.empty()) throw ShapeMismatch("loss operand sizes");
  for (size_t k = 0; k < a.size(); ++k)
    if (!std::isfinite(a[k]) || !std::isfinite(b[k])) throw BadInput("non-finite loss operand");
}
}  // namespace

double loss_mse(const Vec& pred, const Vec& target) {
  check_pair(pred, target);
  double s = 0.0;
  for (size_t k = 0; k < pred.size(); ++k) {
    double d = pred[k] - target[k];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

Vec loss_mse_grad(const Vec& pred, const Vec& target) {
  check_pair(pred, target);
  Vec g(pred.size());
  double scale = 2.0 / static_cast<double>(pred.size());
  for (size_t k = 0; k < pred.size(); ++k) g[k] = scale * (pred[k] - target[k]);
  return g;
}

double loss_mae(const Vec& pred, const Vec& target) {
  check_pair(pred, target);
  double s = 0.0;
  for (size_t k = 0; k < pred.size(); ++k) s += std::abs(pred[k] - target[k]);
  return s / static_cast<double>(pred.size());
}

Vec loss_mae_grad(const Vec& pred, const Vec& target) {
  check_pair(pred, target);
  Vec g(pred.size());
  double scale = 1.0 / static_cast<double>(pred.size());
  for (size_t k = 0; k < pred.size(); ++k) {
    double d = pred[k] - target[k];
    g[k] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Optimizer

void adam_step(const std::vector<Vec*>& params, const std::vector<const Vec*>& grads,
               OptimizerState& st) {
  if (params.size() != grads.size()) throw ShapeMismatch("parameter/gradient array counts");
  if (st.m.empty()) {
    for (const Vec* p : params) {
      st.m.emplace_back(p->size(), 0.0);
      st.v.emplace_back(p->size(), 0.0);
    }
  }
  if (st.m.size() != params.size()) throw ShapeMismatch("optimizer state array count");

  ++st.step_count;
  if (st.method == OptimizerState::Method::Sgd) {
    for (size_t a = 0; a < params.size(); ++a) {
      Vec& p = *params[a];
      const Vec& g = *grads[a];
      if (p.size() != g.size()) throw ShapeMismatch("parameter/gradient sizes");
      for (size_t k = 0; k < p.size(); ++k) p[k] -= st.learning_rate * g[k];
    }
    return;
  }

  double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  for (size_t a = 0; a < params.size(); ++a) {
    Vec& p = *params[a];
    const Vec& g = *grads[a];
    Vec& m = st.m[a];
    Vec& v = st.v[a];
    if (p.size() != g.size() || p.size() != m.size())
      throw ShapeMismatch("parameter/gradient sizes");
    for (size_t k = 0; k < p.size(); ++k) {
      m[k] = st.beta1 * m[k] + (1.0 - st.beta1) * g[k];
      v[k] = st.beta2 * v[k] + (1.0 - st.beta2) * g[k] * g[k];
      double mhat = m[k] / bc1;
      double vhat = v[k] / bc2;
      p[k] -= st.learning_rate * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Gradient checking

double grad_check(const std::function<double()>& loss,
                  const std::function<std::vector<Vec>()>& analytic,
                  const std::vector<Vec*>& params, const GradCheckConfig& cfg) {
  if (!(cfg.step > 0.0)) throw BadConfig("finite-difference step must be positive");
  std::vector<Vec> a = analytic();
  if (a.size() != params.size()) throw ShapeMismatch("analytic gradient array count");

  size_t total = 0;
  for (const Vec* p : params) total += p->size();

  std::vector<size_t> coords;
  if (cfg.max_coords > 0 && total > cfg.max_coords) {
    Rng rng(cfg.subsample_seed);
    std::set<size_t> chosen;
    while (chosen.size() < cfg.max_coords) chosen.insert(rng.below(total));
    coords.assign(chosen.begin(), chosen.end());
  } else {
    coords.resize(total);
    for (size_t k = 0; k < total; ++k) coords[k] = k;
  }

  double max_rel = 0.0;
  for (size_t flat : coords) {
    size_t ai = 0, off = flat;
    while (off >= params[ai]->size()) {
      off -= params[ai]->size();
      ++ai;
    }
    double& x = (*params[ai])[off];
    double saved = x;
    x = saved + cfg.step;
    double lp = loss();
    x = saved - cfg.step;
    double lm = loss();
    x = saved;
    double numeric = (lp - lm) / (2.0 * cfg.step);
    double analytic_v = a[ai][off];
    double rel = std::abs(analytic_v - numeric) /
                 std::max(1e-8, std::abs(analytic_v) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace vloc::nnet

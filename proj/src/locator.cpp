#include "vloc/locator.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vloc/detail/bytes.hpp"

namespace vloc::loc {

using nnet::Vec;

LocatorConfig preset_config(const std::string& name, ModelKind kind) {
  LocatorConfig cfg;
  cfg.model_kind = kind;
  if (name == "paper") {
    cfg.lstm_layers = 4;
    cfg.lstm_dim = 256;
    cfg.fc_layers = 2;
    cfg.dropout_rate = kind == ModelKind::Cnn ? 0.30 : 0.10;
    cfg.conv_filters = 256;
  } else if (name == "desk") {
    cfg.lstm_layers = 2;
    cfg.lstm_dim = 64;
    cfg.fc_layers = 2;
    cfg.dropout_rate = kind == ModelKind::Cnn ? 0.30 : 0.10;
    cfg.conv_filters = 16;
  } else {
    throw BadConfig("unknown preset: " + name);
  }
  return cfg;
}

void validate(const LocatorConfig& cfg) {
  if (cfg.lstm_layers < 1 || cfg.lstm_layers > 6)
    throw BadConfig("lstm_layers must lie in [1, 6]");
  // The tuned search ranged over 32..512; smaller dims stay legal for
  // desk-scale and test models.
  if (cfg.lstm_dim < 1 || cfg.lstm_dim > 512)
    throw BadConfig("lstm_dim must lie in [1, 512]");
  if (cfg.fc_layers < 1 || cfg.fc_layers > 3)
    throw BadConfig("fc_layers must lie in [1, 3]");
  if (!(cfg.dropout_rate >= 0.0) || cfg.dropout_rate >= 1.0)
    throw BadConfig("dropout_rate must lie in [0, 1)");
  if (cfg.model_kind == ModelKind::Cnn && cfg.conv_filters < 1)
    throw BadConfig("conv_filters must be positive");
}

namespace {

constexpr int kConvLayers = 4;
constexpr int kCnnFcWidth = 64;

int input_dim(const LocatorConfig& cfg) {
  int per_station = signal::kNumFeatures;
  return cfg.input_mode == InputMode::Concat3 ? 3 * per_station : per_station;
}

int input_channels(const LocatorConfig& cfg) {
  return cfg.input_mode == InputMode::Concat3 ? 3 : 1;
}

void check_event_features(const EventFeatures& ev) {
  for (const auto& m : ev.station_feats) {
    if (m.frames != signal::kNumFrames || m.features != signal::kNumFeatures)
      throw BadInput("station feature matrix is not 39x31");
    if (!m.normalized) throw BadInput("station feature matrix is not normalized");
  }
}

}  // namespace

std::vector<NetInput> assemble_input(const EventFeatures& ev, const LocatorConfig& cfg) {
  check_event_features(ev);
  const int T = signal::kNumFrames;
  const int N = signal::kNumFeatures;
  std::vector<NetInput> inputs;

  if (cfg.input_mode == InputMode::Concat3) {
    NetInput in;
    if (cfg.model_kind == ModelKind::Lstm) {
      in.seq.assign(T, Vec(3 * N));
      for (int t = 0; t < T; ++t)
        for (int s = 0; s < 3; ++s)
          for (int j = 0; j < N; ++j) in.seq[t][s * N + j] = ev.station_feats[s].at(t, j);
    } else {
      in.image = nnet::Tensor3(3, T, N);
      for (int s = 0; s < 3; ++s)
        for (int t = 0; t < T; ++t)
          for (int j = 0; j < N; ++j) in.image.at(s, t, j) = ev.station_feats[s].at(t, j);
    }
    inputs.push_back(std::move(in));
  } else {
    for (int s = 0; s < 3; ++s) {
      NetInput in;
      if (cfg.model_kind == ModelKind::Lstm) {
        in.seq.assign(T, Vec(N));
        for (int t = 0; t < T; ++t)
          for (int j = 0; j < N; ++j) in.seq[t][j] = ev.station_feats[s].at(t, j);
      } else {
        in.image = nnet::Tensor3(1, T, N);
        for (int t = 0; t < T; ++t)
          for (int j = 0; j < N; ++j) in.image.at(0, t, j) = ev.station_feats[s].at(t, j);
      }
      inputs.push_back(std::move(in));
    }
  }
  return inputs;
}

LocatorModel build_locator(const LocatorConfig& cfg, uint64_t seed) {
  validate(cfg);
  LocatorModel m;
  m.cfg = cfg;
  m.seed = seed;
  Rng rng(seed);

  if (cfg.model_kind == ModelKind::Lstm) {
    int d_in = input_dim(cfg);
    for (int l = 0; l < cfg.lstm_layers; ++l) {
      m.lstm.push_back(nnet::make_lstm_layer(l == 0 ? d_in : cfg.lstm_dim, cfg.lstm_dim,
                                             cfg.bias_mode, rng));
    }
    // First fc layer width equals the LSTM output dimension; the last is
    // the two-coordinate output.
    int width = cfg.lstm_dim;
    for (int l = 0; l + 1 < cfg.fc_layers; ++l)
      m.fc.push_back(nnet::make_fc_layer(width, cfg.lstm_dim, nnet::Activation::Rectifier, rng));
    m.fc.push_back(nnet::make_fc_layer(cfg.fc_layers > 1 ? cfg.lstm_dim : width, 2,
                                       nnet::Activation::Identity, rng));
  } else {
    int ch = input_channels(cfg);
    for (int l = 0; l < kConvLayers; ++l) {
      m.conv.push_back(nnet::make_conv_layer(l == 0 ? ch : cfg.conv_filters, cfg.conv_filters, rng));
    }
    int flat = cfg.conv_filters * signal::kNumFrames * signal::kNumFeatures;
    m.fc.push_back(nnet::make_fc_layer(flat, kCnnFcWidth, nnet::Activation::Rectifier, rng));
    m.fc.push_back(nnet::make_fc_layer(kCnnFcWidth, kCnnFcWidth, nnet::Activation::Rectifier, rng));
    m.fc.push_back(nnet::make_fc_layer(kCnnFcWidth, 2, nnet::Activation::Identity, rng));
  }
  return m;
}

long parameter_count(const LocatorModel& m) {
  long n = 0;
  for (const Vec* v : param_arrays(m)) n += static_cast<long>(v->size());
  return n;
}

nnet::Vec model_forward(const LocatorModel& m, const NetInput& in, bool training, Rng* rng,
                        ModelCache* cache) {
  if (m.cfg.model_kind == ModelKind::Lstm) {
    if (in.seq.empty()) throw BadInput("lstm input has no frames");
    Vec h = nnet::lstm_stack_forward(in.seq, m.lstm, cache ? &cache->lstm : nullptr);
    return nnet::fc_forward(h, m.fc, m.cfg.dropout_rate, rng, training,
                            cache ? &cache->fc : nullptr);
  }

  if (in.image.v.empty()) throw BadInput("cnn input image is empty");
  if (cache) {
    cache->conv.assign(m.conv.size(), {});
    cache->conv_keep.assign(m.conv.size(), {});
  }
  nnet::Tensor3 x = in.image;
  for (size_t l = 0; l < m.conv.size(); ++l) {
    x = nnet::conv2d_forward(x, m.conv[l], cache ? &cache->conv[l] : nullptr);
    // The tuned CNN applies its dropout after every layer.
    if (training && m.cfg.dropout_rate > 0.0) {
      if (!rng) throw BadInput("training-mode dropout needs a generator");
      auto keep = nnet::dropout_forward_inplace(x.v, m.cfg.dropout_rate, *rng);
      if (cache) cache->conv_keep[l] = std::move(keep);
    }
  }
  return nnet::fc_forward(x.v, m.fc, m.cfg.dropout_rate, rng, training,
                          cache ? &cache->fc : nullptr);
}

GradientSet zero_grads(const LocatorModel& m) {
  GradientSet g;
  for (const auto& p : m.lstm) g.lstm.push_back(nnet::zero_grads_like(p));
  for (const auto& p : m.fc) g.fc.push_back(nnet::zero_grads_like(p));
  for (const auto& p : m.conv) g.conv.push_back(nnet::zero_grads_like(p));
  return g;
}

void model_backward(const LocatorModel& m, const NetInput& in, const ModelCache& cache,
                    const nnet::Vec& dy, GradientSet& grads) {
  if (grads.lstm.size() != m.lstm.size() || grads.fc.size() != m.fc.size() ||
      grads.conv.size() != m.conv.size())
    throw ShapeMismatch("gradient set does not match the model");

  Vec d_in = nnet::fc_backward(m.fc, cache.fc, dy, grads.fc);

  if (m.cfg.model_kind == ModelKind::Lstm) {
    nnet::lstm_stack_backward(in.seq, m.lstm, cache.lstm, d_in, grads.lstm);
    return;
  }

  if (cache.conv.size() != m.conv.size())
    throw MissingCache("conv caches missing for the backward pass");
  nnet::Tensor3 d = cache.conv.back().preact;  // shape carrier
  if (d.v.size() != d_in.size()) throw ShapeMismatch("flattened conv gradient size");
  d.v = d_in;
  for (size_t l = m.conv.size(); l-- > 0;) {
    if (cache.conv_keep[l].size() == d.v.size())
      nnet::dropout_backward_inplace(d.v, cache.conv_keep[l], m.cfg.dropout_rate);
    d = nnet::conv2d_backward(m.conv[l], cache.conv[l], d, grads.conv[l]);
  }
}

namespace {

template <class ModelT, class VecPtr>
std::vector<VecPtr> collect_params(ModelT& m) {
  std::vector<VecPtr> out;
  for (auto& p : m.lstm) {
    out.push_back(&p.W_i.a);
    out.push_back(&p.W_f.a);
    out.push_back(&p.W_o.a);
    out.push_back(&p.W_c.a);
    out.push_back(&p.U_i.a);
    out.push_back(&p.U_f.a);
    out.push_back(&p.U_o.a);
    out.push_back(&p.U_c.a);
    out.push_back(&p.b_i);
    out.push_back(&p.b_f);
    out.push_back(&p.b_o);
    out.push_back(&p.b_c);
  }
  for (auto& p : m.fc) {
    out.push_back(&p.W.a);
    out.push_back(&p.b);
  }
  for (auto& p : m.conv) {
    out.push_back(&p.w);
    out.push_back(&p.b);
  }
  return out;
}

template <class GradsT, class VecPtr>
std::vector<VecPtr> collect_grads(GradsT& g) {
  std::vector<VecPtr> out;
  for (auto& p : g.lstm) {
    out.push_back(&p.W_i.a);
    out.push_back(&p.W_f.a);
    out.push_back(&p.W_o.a);
    out.push_back(&p.W_c.a);
    out.push_back(&p.U_i.a);
    out.push_back(&p.U_f.a);
    out.push_back(&p.U_o.a);
    out.push_back(&p.U_c.a);
    out.push_back(&p.b_i);
    out.push_back(&p.b_f);
    out.push_back(&p.b_o);
    out.push_back(&p.b_c);
  }
  for (auto& p : g.fc) {
    out.push_back(&p.W.a);
    out.push_back(&p.b);
  }
  for (auto& p : g.conv) {
    out.push_back(&p.w);
    out.push_back(&p.b);
  }
  return out;
}

}  // namespace

std::vector<Vec*> param_arrays(LocatorModel& m) { return collect_params<LocatorModel, Vec*>(m); }
std::vector<const Vec*> param_arrays(const LocatorModel& m) {
  return collect_params<const LocatorModel, const Vec*>(m);
}
std::vector<Vec*> grad_arrays(GradientSet& g) { return collect_grads<GradientSet, Vec*>(g); }
std::vector<const Vec*> grad_arrays(const GradientSet& g) {
  return collect_grads<const GradientSet, const Vec*>(g);
}

void accumulate_grads(GradientSet& dst, const GradientSet& src) {
  auto d = grad_arrays(dst);
  auto s = grad_arrays(src);
  if (d.size() != s.size()) throw ShapeMismatch("gradient set array counts");
  for (size_t a = 0; a < d.size(); ++a) {
    if (d[a]->size() != s[a]->size()) throw ShapeMismatch("gradient array sizes");
    for (size_t k = 0; k < d[a]->size(); ++k) (*d[a])[k] += (*s[a])[k];
  }
}

void scale_grads(GradientSet& g, double factor) {
  for (Vec* v : grad_arrays(g))
    for (double& x : *v) x *= factor;
}

geo::GeoPoint predict_epicenter(const LocatorModel& m, const std::vector<NetInput>& inputs,
                                const TargetStandardizer& std_) {
  if (inputs.empty()) throw BadInput("no network inputs");
  double lat = 0.0, lon = 0.0;
  for (const auto& in : inputs) {
    Vec y = model_forward(m, in, /*training=*/false, nullptr, nullptr);
    if (y.size() != 2) throw ShapeMismatch("model output is not two-dimensional");
    geo::GeoPoint p = std_.destandardize(y[0], y[1]);
    lat += p.lat_deg;
    lon += p.lon_deg;
  }
  return {lat / inputs.size(), lon / inputs.size()};
}

size_t inference_state_doubles(const LocatorModel& m) {
  size_t n = 0;
  for (const auto& p : m.lstm) n += 2 * static_cast<size_t>(p.d_out);  // rolling h, c
  if (!m.lstm.empty()) n += 8 * static_cast<size_t>(m.lstm.back().d_out);  // one frame's gates
  for (const auto& p : m.fc) n += static_cast<size_t>(p.W.rows);  // activations
  return n;
}

// ---------------------------------------------------------------------------
// Checkpoint io

namespace {

using detail::get_f64;
using detail::get_u32;
using detail::put_f64;
using detail::put_u32;

std::string kind_name(ModelKind k) { return k == ModelKind::Lstm ? "lstm" : "cnn"; }
std::string mode_name(InputMode m) {
  return m == InputMode::Concat3 ? "concat3" : "per_station_ensemble";
}

}  // namespace

void save_checkpoint(const std::string& path, const LocatorModel& m) {
  nlohmann::json hdr;
  hdr["model_kind"] = kind_name(m.cfg.model_kind);
  hdr["lstm_layers"] = m.cfg.lstm_layers;
  hdr["lstm_dim"] = m.cfg.lstm_dim;
  hdr["fc_layers"] = m.cfg.fc_layers;
  hdr["dropout_rate"] = m.cfg.dropout_rate;
  hdr["input_mode"] = mode_name(m.cfg.input_mode);
  hdr["bias_mode"] = m.cfg.bias_mode;
  hdr["conv_filters"] = m.cfg.conv_filters;
  hdr["seed"] = m.seed;
  hdr["standardizer"] = {{"mean_lat", m.standardizer.mean_lat},
                         {"mean_lon", m.standardizer.mean_lon},
                         {"std_lat", m.standardizer.std_lat},
                         {"std_lon", m.standardizer.std_lon}};
  std::string blob = hdr.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw BadFile("cannot open for write: " + path);
  os.write("VLOC", 4);
  put_u32(os, 1);
  put_u32(os, static_cast<uint32_t>(blob.size()));
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  for (const Vec* v : param_arrays(m))
    for (double x : *v) put_f64(os, x);
  if (!os) throw BadFile("short write: " + path);
}

LocatorModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw BadFile("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "VLOC", 4) != 0) throw BadFile("bad checkpoint magic in " + path);
  uint32_t version = get_u32(is);
  if (version != 1) throw BadFile("unsupported checkpoint version in " + path);
  uint32_t hdr_len = get_u32(is);
  std::string blob(hdr_len, '\0');
  is.read(blob.data(), hdr_len);
  if (!is) throw BadFile("truncated checkpoint header in " + path);

  nlohmann::json hdr = nlohmann::json::parse(blob, nullptr, false);
  if (hdr.is_discarded()) throw BadFile("unparseable checkpoint header in " + path);

  LocatorConfig cfg;
  cfg.model_kind = hdr.at("model_kind").get<std::string>() == "cnn" ? ModelKind::Cnn : ModelKind::Lstm;
  cfg.lstm_layers = hdr.at("lstm_layers").get<int>();
  cfg.lstm_dim = hdr.at("lstm_dim").get<int>();
  cfg.fc_layers = hdr.at("fc_layers").get<int>();
  cfg.dropout_rate = hdr.at("dropout_rate").get<double>();
  cfg.input_mode = hdr.at("input_mode").get<std::string>() == "per_station_ensemble"
                       ? InputMode::PerStationEnsemble
                       : InputMode::Concat3;
  cfg.bias_mode = hdr.at("bias_mode").get<bool>();
  cfg.conv_filters = hdr.at("conv_filters").get<int>();

  LocatorModel m = build_locator(cfg, hdr.at("seed").get<uint64_t>());
  const auto& st = hdr.at("standardizer");
  m.standardizer.mean_lat = st.at("mean_lat").get<double>();
  m.standardizer.mean_lon = st.at("mean_lon").get<double>();
  m.standardizer.std_lat = st.at("std_lat").get<double>();
  m.standardizer.std_lon = st.at("std_lon").get<double>();

  for (Vec* v : param_arrays(m))
    for (double& x : *v) x = get_f64(is);
  if (!is) throw BadFile("truncated checkpoint parameters in " + path);
  return m;
}

}  // namespace vloc::loc

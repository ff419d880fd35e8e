#include "vloc/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vloc/detail/bytes.hpp"

namespace vloc::signal {

using detail::get_f64;
using detail::get_u32;
using detail::get_u64;
using detail::put_f64;
using detail::put_u32;
using detail::put_u64;

void save_wfm(const std::string& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw BadFile("cannot open for write: " + path);
  os.write("WVF1", 4);
  put_u32(os, w.sample_rate_hz);
  put_u64(os, w.samples.size());
  for (double s : w.samples) put_f64(os, s);
  if (!os) throw BadFile("short write: " + path);
}

Waveform load_wfm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw BadFile("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "WVF1", 4) != 0)
    throw BadFile("bad waveform magic in " + path);
  Waveform w;
  w.sample_rate_hz = get_u32(is);
  uint64_t n = get_u64(is);
  if (w.sample_rate_hz == 0 || n == 0) throw BadFile("empty waveform in " + path);
  w.samples.resize(n);
  for (uint64_t i = 0; i < n; ++i) w.samples[i] = get_f64(is);
  if (!is) throw BadFile("truncated waveform in " + path);
  for (double s : w.samples)
    if (!std::isfinite(s)) throw BadFile("non-finite sample in " + path);
  return w;
}

Segment segment_event(const Waveform& w, double t_p_s) {
  if (w.samples.empty()) throw BadInput("empty waveform");
  double start_s = t_p_s - kPrePSeconds;
  double end_s = t_p_s + (kSegmentSeconds - kPrePSeconds);
  // Half-sample slack so exact boundaries survive rounding.
  double half = 0.5 / w.sample_rate_hz;
  if (start_s < w.t0_s - half || end_s > w.end_s() + half)
    throw OutOfRange("7 s window around P is not inside the record");
  size_t n = static_cast<size_t>(std::llround(kSegmentSeconds * w.sample_rate_hz));
  long start_idx = std::lround((start_s - w.t0_s) * w.sample_rate_hz);
  start_idx = std::clamp<long>(start_idx, 0, static_cast<long>(w.samples.size()) - static_cast<long>(n));
  Segment seg;
  seg.samples.assign(w.samples.begin() + start_idx, w.samples.begin() + start_idx + n);
  seg.p_offset_s = kPrePSeconds;
  return seg;
}

std::vector<std::vector<double>> frame_segment(const Segment& s) {
  if (s.samples.size() != static_cast<size_t>(kSegmentSamples))
    throw BadLength("segment must hold exactly 700 samples");
  std::vector<std::vector<double>> frames(kNumFrames);
  for (int k = 0; k < kNumFrames; ++k) {
    size_t start = static_cast<size_t>(k) * kFrameHop;
    frames[k].assign(s.samples.begin() + start, s.samples.begin() + start + kFrameLen);
  }
  return frames;
}

std::array<std::complex<double>, kFftLen> fft64(const std::vector<double>& frame) {
  if (frame.size() > kFftLen) throw BadLength("frame longer than the 64-point FFT");
  for (double v : frame)
    if (!std::isfinite(v)) throw BadInput("non-finite sample in frame");

  std::array<std::complex<double>, kFftLen> a{};
  // Bit-reversal permutation for 6 bits while zero-padding.
  for (size_t i = 0; i < frame.size(); ++i) {
    size_t r = 0;
    for (int b = 0; b < 6; ++b) r |= ((i >> b) & 1u) << (5 - b);
    a[r] = frame[i];
  }
  for (int len = 2; len <= kFftLen; len <<= 1) {
    double ang = -2.0 * M_PI / len;
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < kFftLen; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  return a;
}

std::vector<double> dft64(const std::vector<double>& frame) {
  if (frame.size() != kFrameLen) throw BadLength("dft64 expects 50-sample frames");
  auto spec = fft64(frame);
  std::vector<double> mags(kNumBins);
  for (int k = 0; k < kNumBins; ++k) mags[k] = std::abs(spec[k]);
  return mags;
}

std::vector<double> log_features(const std::vector<double>& mags) {
  if (mags.size() != kNumBins) throw BadLength("log_features expects 33 magnitudes");
  std::vector<double> out(kNumFeatures);
  for (int k = 0; k < kNumFeatures; ++k)
    out[k] = std::log(mags[k + kDroppedBins] + kLogFloor);
  return out;
}

FeatureMatrix extract_features(const Segment& s) {
  auto frames = frame_segment(s);
  FeatureMatrix m;
  m.frames = kNumFrames;
  m.features = kNumFeatures;
  m.values.resize(static_cast<size_t>(kNumFrames) * kNumFeatures);
  for (int t = 0; t < kNumFrames; ++t) {
    auto feats = log_features(dft64(frames[t]));
    std::copy(feats.begin(), feats.end(), m.values.begin() + static_cast<size_t>(t) * kNumFeatures);
  }
  return m;
}

FeatureMatrix normalize_features(const FeatureMatrix& m) {
  if (m.normalized) throw BadInput("feature matrix already normalized");
  if (m.frames <= 0 || m.features <= 0) throw BadInput("empty feature matrix");
  FeatureMatrix out = m;
  out.normalized = true;
  for (int j = 0; j < m.features; ++j) {
    double mean = 0.0;
    for (int t = 0; t < m.frames; ++t) mean += m.at(t, j);
    mean /= m.frames;
    double var = 0.0;
    for (int t = 0; t < m.frames; ++t) {
      double d = m.at(t, j) - mean;
      var += d * d;
    }
    var /= m.frames;  // population variance
    double sd = std::sqrt(var);
    if (sd < 1e-12) {
      for (int t = 0; t < m.frames; ++t) out.at(t, j) = 0.0;
    } else {
      for (int t = 0; t < m.frames; ++t) out.at(t, j) = (m.at(t, j) - mean) / sd;
    }
  }
  return out;
}

FeatureStats column_stats(const std::vector<const FeatureMatrix*>& mats) {
  if (mats.empty()) throw EmptyList("column_stats over no matrices");
  int n_feat = mats.front()->features;
  FeatureStats st;
  st.mean.assign(n_feat, 0.0);
  st.stddev.assign(n_feat, 0.0);
  long n_rows = 0;
  for (const auto* m : mats) {
    if (m->features != n_feat) throw ShapeMismatch("feature counts differ across matrices");
    for (int t = 0; t < m->frames; ++t)
      for (int j = 0; j < n_feat; ++j) st.mean[j] += m->at(t, j);
    n_rows += m->frames;
  }
  for (int j = 0; j < n_feat; ++j) st.mean[j] /= n_rows;
  for (const auto* m : mats)
    for (int t = 0; t < m->frames; ++t)
      for (int j = 0; j < n_feat; ++j) {
        double d = m->at(t, j) - st.mean[j];
        st.stddev[j] += d * d;
      }
  for (int j = 0; j < n_feat; ++j) st.stddev[j] = std::sqrt(st.stddev[j] / n_rows);
  return st;
}

FeatureMatrix normalize_with(const FeatureMatrix& m, const FeatureStats& stats) {
  if (m.normalized) throw BadInput("feature matrix already normalized");
  if (static_cast<int>(stats.mean.size()) != m.features)
    throw ShapeMismatch("stats size does not match feature count");
  FeatureMatrix out = m;
  out.normalized = true;
  for (int j = 0; j < m.features; ++j) {
    double sd = stats.stddev[j];
    for (int t = 0; t < m.frames; ++t)
      out.at(t, j) = sd < 1e-12 ? 0.0 : (m.at(t, j) - stats.mean[j]) / sd;
  }
  return out;
}

namespace {

struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0;  // numerator
  double a1 = 0, a2 = 0;          // denominator (a0 normalized to 1)

  void apply(std::vector<double>& x) const {
    double w1 = 0.0, w2 = 0.0;  // direct form II transposed state
    for (double& v : x) {
      double y = b0 * v + w1;
      w1 = b1 * v - a1 * y + w2;
      w2 = b2 * v - a2 * y;
      v = y;
    }
  }

  std::complex<double> response(double theta) const {
    std::complex<double> z1 = std::polar(1.0, -theta);
    std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
};

// Butterworth band-pass of overall order four (second-order low-pass
// prototype through the band transform and the bilinear map), returned as
// two biquad sections with unit gain at the warped center frequency.
std::array<Biquad, 2> design_bandpass(double lo_hz, double hi_hz, double fs) {
  using C = std::complex<double>;
  double w_lo = 2.0 * fs * std::tan(M_PI * lo_hz / fs);
  double w_hi = 2.0 * fs * std::tan(M_PI * hi_hz / fs);
  double bw = w_hi - w_lo;
  double w0sq = w_lo * w_hi;

  // One prototype pole per conjugate pair; the band transform splits it in two.
  C proto = std::polar(1.0, 3.0 * M_PI / 4.0);
  C bp = bw * proto;
  C disc = std::sqrt(bp * bp - 4.0 * w0sq);
  C s_a = (bp + disc) / 2.0;
  C s_b = (bp - disc) / 2.0;

  auto bilinear = [fs](C s) { return (2.0 * fs + s) / (2.0 * fs - s); };
  C z_a = bilinear(s_a);
  C z_b = bilinear(s_b);
  // Zeros at z=1 (from s=0) pair with the pole pair nearer DC, zeros at
  // z=-1 (from s=inf) with the other pair.
  if (std::abs(std::arg(z_a)) > std::abs(std::arg(z_b))) std::swap(z_a, z_b);

  std::array<Biquad, 2> sos;
  sos[0].b0 = 1.0; sos[0].b1 = -2.0; sos[0].b2 = 1.0;
  sos[0].a1 = -2.0 * z_a.real(); sos[0].a2 = std::norm(z_a);
  sos[1].b0 = 1.0; sos[1].b1 = 2.0; sos[1].b2 = 1.0;
  sos[1].a1 = -2.0 * z_b.real(); sos[1].a2 = std::norm(z_b);

  double theta_c = 2.0 * std::atan(std::sqrt(w0sq) / (2.0 * fs));
  double gain = std::abs(sos[0].response(theta_c) * sos[1].response(theta_c));
  sos[0].b0 /= gain; sos[0].b1 /= gain; sos[0].b2 /= gain;
  return sos;
}

}  // namespace

Waveform bandpass(const Waveform& w, double lo_hz, double hi_hz) {
  double nyquist = w.sample_rate_hz / 2.0;
  if (!(lo_hz > 0.0) || !(lo_hz < hi_hz) || !(hi_hz < nyquist))
    throw BadBand("band edges must satisfy 0 < lo < hi < rate/2");
  if (w.samples.empty()) throw BadInput("empty waveform");

  auto sos = design_bandpass(lo_hz, hi_hz, static_cast<double>(w.sample_rate_hz));
  Waveform out = w;
  for (const auto& bq : sos) bq.apply(out.samples);
  std::reverse(out.samples.begin(), out.samples.end());
  for (const auto& bq : sos) bq.apply(out.samples);
  std::reverse(out.samples.begin(), out.samples.end());
  return out;
}

}  // namespace vloc::signal

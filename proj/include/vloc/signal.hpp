#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "vloc/errors.hpp"

namespace vloc::signal {

// Framing and spectral constants for the 7 s / 100 Hz feature layout:
// 0.5 s windows, 66% overlap (integer hop 17), 64-point FFT, two lowest
// bins dropped.
inline constexpr double kSegmentSeconds = 7.0;
inline constexpr double kPrePSeconds = 2.0;
inline constexpr int kSegmentSamples = 700;  // 7 s at the 100 Hz paper rate
inline constexpr int kFrameLen = 50;
inline constexpr int kFrameHop = 17;
inline constexpr int kNumFrames = 39;
inline constexpr int kFftLen = 64;
inline constexpr int kNumBins = 33;   // non-negative frequencies of a 64-point DFT
inline constexpr int kDroppedBins = 2;
inline constexpr int kNumFeatures = kNumBins - kDroppedBins;  // 31
inline constexpr double kLogFloor = 1e-10;

struct Waveform {
  std::vector<double> samples;
  uint32_t sample_rate_hz = 100;
  std::string station_id;
  std::string event_id;
  double t0_s = 0.0;  // absolute time of samples[0]

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  double end_s() const { return t0_s + duration_s(); }
};

// ".wfm" container: magic "WVF1", u32 LE sample rate, u64 LE count, f64 LE samples.
void save_wfm(const std::string& path, const Waveform& w);
Waveform load_wfm(const std::string& path);

struct Segment {
  std::vector<double> samples;       // kSegmentSeconds * rate samples
  double p_offset_s = kPrePSeconds;  // P arrival position inside the segment
};

struct FeatureMatrix {
  int frames = 0;    // T
  int features = 0;  // N
  bool normalized = false;
  std::vector<double> values;  // frame-major, frames * features

  double at(int t, int j) const { return values[static_cast<size_t>(t) * features + j]; }
  double& at(int t, int j) { return values[static_cast<size_t>(t) * features + j]; }
};

// Seven-second cut starting two seconds before the P arrival.
Segment segment_event(const Waveform& w, double t_p_s);

// 39 frames of 50 samples on a hop of 17.
std::vector<std::vector<double>> frame_segment(const Segment& s);

// Zero-padded 64-point FFT of a frame (up to 64 samples); all 64 bins.
std::array<std::complex<double>, kFftLen> fft64(const std::vector<double>& frame);

// Magnitudes of the 33 non-negative-frequency bins of a 50-sample frame.
std::vector<double> dft64(const std::vector<double>& frame);

// Drops the two lowest bins, returns ln(m + 1e-10) of the remaining 31.
std::vector<double> log_features(const std::vector<double>& mags);

// frame_segment -> dft64 -> log_features, 39 x 31, not yet normalized.
FeatureMatrix extract_features(const Segment& s);

// Per-feature mean/variance normalization across the matrix's own frames.
// Columns with standard deviation below 1e-12 become all zeros.
FeatureMatrix normalize_features(const FeatureMatrix& m);

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Pooled per-feature statistics over a set of matrices (corpus-level mode).
FeatureStats column_stats(const std::vector<const FeatureMatrix*>& mats);

// Normalization against externally supplied statistics.
FeatureMatrix normalize_with(const FeatureMatrix& m, const FeatureStats& stats);

// Zero-phase band-pass: fourth-order recursive filter run forward then
// backward. Output length equals input length.
Waveform bandpass(const Waveform& w, double lo_hz, double hi_hz);

}  // namespace vloc::signal

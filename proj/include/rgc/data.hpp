#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rgc/model.hpp"
#include "rgc/tensor.hpp"

namespace rgc {

// Half-open index ranges into the recording timeline.
struct SplitRanges {
  int64_t train_begin = 0, train_end = 0;
  int64_t val_begin = 0, val_end = 0;
  int64_t test_begin = 0, test_end = 0;
};

struct RecordingSet {
  int64_t T = 0;
  int64_t height = 50;
  int64_t width = 50;
  int64_t n = 0;                   // response channels
  std::vector<uint8_t> frames;     // T * height * width
  std::vector<float> responses;    // T * n, non-negative
  SplitRanges splits;

  double response(int64_t t, int64_t ch) const {
    return static_cast<double>(responses[static_cast<size_t>(t * n + ch)]);
  }
  void validate() const;
};

// `.rgcd` container: 32-byte header (magic "RGCD", u32 version, u64 T,
// u32 height, u32 width, u32 n, u32 reserved), raw u8 frames, raw
// little-endian f32 responses, JSON footer with the split ranges.
void save_recording(const RecordingSet& rec, const std::string& path);
RecordingSet load_recording(const std::string& path);

void responses_to_csv(const RecordingSet& rec, const std::string& path);

// Per-channel min-max over a training range; degenerate ranges floored at ε
// so constant channels normalize to 0.
struct ChannelNormalizer {
  static constexpr double eps = 1e-8;
  std::vector<double> lo, hi;  // per channel

  static ChannelNormalizer fit(const RecordingSet& rec, int64_t begin,
                               int64_t end);
  int64_t channels() const { return static_cast<int64_t>(lo.size()); }
  double normalize(double v, int64_t ch) const {
    return (v - lo[ch]) / std::max(hi[ch] - lo[ch], eps);
  }
  double denormalize(double v, int64_t ch) const {
    return v * std::max(hi[ch] - lo[ch], eps) + lo[ch];
  }
};

// Sliding windows (stride 1) over [begin, end): sample i consumes frames
// [begin+i, begin+i+F) and targets responses[begin+i+F].
struct WindowSet {
  int64_t begin = 0;
  int64_t count = 0;
  int64_t frames_per_sample = 0;

  int64_t window_start(int64_t i) const { return begin + i; }
  int64_t target_index(int64_t i) const { return begin + i + frames_per_sample; }
};

WindowSet make_windows(const RecordingSet& rec, const SequencePlan& plan,
                       int64_t begin, int64_t end);

// Frame windows as [B, F, H, W] float64 in [0, 1] (u8 / 255).
Tensor frames_to_tensor(const RecordingSet& rec,
                        std::span<const int64_t> window_starts, int64_t F);
// Targets as [B, n]; normalized when a normalizer is given.
Tensor targets_to_tensor(const RecordingSet& rec,
                         std::span<const int64_t> window_starts, int64_t F,
                         const ChannelNormalizer* norm);

struct SynthConfig {
  int64_t T = 20000;
  int64_t n = 9;
  uint64_t seed = 1;
  int64_t lag_min = 8;
  int64_t lag_max = 12;
  double sparsity = 0.8;   // target zero fraction of responses
  int64_t height = 50;
  int64_t width = 50;
  int64_t saccade_period = 100;  // frames; 1 s at 10 ms bins
  double jitter_sigma = 0.5;     // random-walk step, pixels/frame
};

// Texture random-walk stimulus with periodic saccades, responses from a
// per-channel linear-nonlinear model: spatial filter drive, channel lag,
// softplus rectification thresholded at the sparsity quantile.
RecordingSet generate_synthetic(const SynthConfig& cfg);

// Per-channel drive/lag diagnostics of the generator, for tests.
struct SynthChannelInfo {
  int64_t lag = 0;
  std::vector<double> drive;  // [T], pre-lag filter response
};
RecordingSet generate_synthetic(const SynthConfig& cfg,
                                std::vector<SynthChannelInfo>* info);

// Additive pixel-wise N(0, σ²), rounded and clipped to [0, 255].
std::vector<uint8_t> perturb_noise(const std::vector<uint8_t>& frames,
                                   double sigma, uint64_t seed);

}  // namespace rgc

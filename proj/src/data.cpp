#include "rgc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rgc/rng.hpp"

namespace rgc {

namespace {

constexpr char kMagic[4] = {'R', 'G', 'C', 'D'};
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderBytes = 32;

template <typename T>
void put(std::string& buf, T v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const std::string& buf, size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

}  // namespace

void RecordingSet::validate() const {
  if (static_cast<int64_t>(frames.size()) != T * height * width) {
    throw std::runtime_error("RecordingSet: frame buffer does not match T");
  }
  if (static_cast<int64_t>(responses.size()) != T * n) {
    throw std::runtime_error("RecordingSet: response buffer does not match T");
  }
  for (const float r : responses) {
    if (!(r >= 0.0f)) {
      throw std::runtime_error("RecordingSet: responses must be >= 0");
    }
  }
  auto range_ok = [this](int64_t b, int64_t e) {
    return 0 <= b && b <= e && e <= T;
  };
  if (!range_ok(splits.train_begin, splits.train_end) ||
      !range_ok(splits.val_begin, splits.val_end) ||
      !range_ok(splits.test_begin, splits.test_end)) {
    throw std::runtime_error("RecordingSet: split ranges outside [0, T]");
  }
}

void save_recording(const RecordingSet& rec, const std::string& path) {
  rec.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_recording: cannot open " + path);
  std::string header;
  header.append(kMagic, 4);
  put(header, kVersion);
  put(header, static_cast<uint64_t>(rec.T));
  put(header, static_cast<uint32_t>(rec.height));
  put(header, static_cast<uint32_t>(rec.width));
  put(header, static_cast<uint32_t>(rec.n));
  put(header, static_cast<uint32_t>(0));  // reserved
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  os.write(reinterpret_cast<const char*>(rec.frames.data()),
           static_cast<std::streamsize>(rec.frames.size()));
  os.write(reinterpret_cast<const char*>(rec.responses.data()),
           static_cast<std::streamsize>(rec.responses.size() * sizeof(float)));
  nlohmann::json footer;
  footer["splits"] = {
      {"train", {rec.splits.train_begin, rec.splits.train_end}},
      {"val", {rec.splits.val_begin, rec.splits.val_end}},
      {"test", {rec.splits.test_begin, rec.splits.test_end}},
  };
  const std::string f = footer.dump();
  os.write(f.data(), static_cast<std::streamsize>(f.size()));
  if (!os) throw std::runtime_error("save_recording: write failed for " + path);
}

RecordingSet load_recording(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_recording: cannot open " + path);
  std::string header(kHeaderBytes, '\0');
  is.read(header.data(), kHeaderBytes);
  if (static_cast<size_t>(is.gcount()) != kHeaderBytes) {
    throw std::runtime_error(
        "load_recording: unexpected end of stream in header at byte " +
        std::to_string(is.gcount()));
  }
  if (std::memcmp(header.data(), kMagic, 4) != 0) {
    throw std::runtime_error("load_recording: bad magic at byte 0");
  }
  const uint32_t version = take<uint32_t>(header, 4);
  if (version != kVersion) {
    throw std::runtime_error("load_recording: unsupported version " +
                             std::to_string(version) + " at byte 4");
  }
  RecordingSet rec;
  rec.T = static_cast<int64_t>(take<uint64_t>(header, 8));
  rec.height = take<uint32_t>(header, 16);
  rec.width = take<uint32_t>(header, 20);
  rec.n = take<uint32_t>(header, 24);
  if (rec.T <= 0 || rec.height <= 0 || rec.width <= 0 || rec.n <= 0) {
    throw std::runtime_error("load_recording: degenerate header dimensions");
  }
  const size_t frame_bytes =
      static_cast<size_t>(rec.T * rec.height * rec.width);
  rec.frames.resize(frame_bytes);
  is.read(reinterpret_cast<char*>(rec.frames.data()),
          static_cast<std::streamsize>(frame_bytes));
  if (static_cast<size_t>(is.gcount()) != frame_bytes) {
    throw std::runtime_error(
        "load_recording: unexpected end of stream in frames at byte " +
        std::to_string(kHeaderBytes + static_cast<size_t>(is.gcount())));
  }
  const size_t resp_count = static_cast<size_t>(rec.T * rec.n);
  rec.responses.resize(resp_count);
  is.read(reinterpret_cast<char*>(rec.responses.data()),
          static_cast<std::streamsize>(resp_count * sizeof(float)));
  if (static_cast<size_t>(is.gcount()) != resp_count * sizeof(float)) {
    throw std::runtime_error(
        "load_recording: unexpected end of stream in responses at byte " +
        std::to_string(kHeaderBytes + frame_bytes +
                       static_cast<size_t>(is.gcount())));
  }
  std::stringstream fs;
  fs << is.rdbuf();
  const std::string ftext = fs.str();
  if (ftext.empty()) {
    throw std::runtime_error(
        "load_recording: unexpected end of stream, missing footer at byte " +
        std::to_string(kHeaderBytes + frame_bytes + resp_count * sizeof(float)));
  }
  nlohmann::json footer;
  try {
    footer = nlohmann::json::parse(ftext);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("load_recording: bad footer JSON: ") +
                             e.what());
  }
  const auto& s = footer.at("splits");
  rec.splits.train_begin = s.at("train")[0];
  rec.splits.train_end = s.at("train")[1];
  rec.splits.val_begin = s.at("val")[0];
  rec.splits.val_end = s.at("val")[1];
  rec.splits.test_begin = s.at("test")[0];
  rec.splits.test_end = s.at("test")[1];
  rec.validate();
  return rec;
}

void responses_to_csv(const RecordingSet& rec, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("responses_to_csv: cannot open " + path);
  os << "t";
  for (int64_t c = 0; c < rec.n; ++c) os << ",ch" << c;
  os << "\n";
  for (int64_t t = 0; t < rec.T; ++t) {
    os << t;
    for (int64_t c = 0; c < rec.n; ++c) os << "," << rec.response(t, c);
    os << "\n";
  }
}

ChannelNormalizer ChannelNormalizer::fit(const RecordingSet& rec,
                                         int64_t begin, int64_t end) {
  if (begin >= end || begin < 0 || end > rec.T) {
    throw std::invalid_argument("ChannelNormalizer: empty train range");
  }
  ChannelNormalizer nz;
  nz.lo.assign(static_cast<size_t>(rec.n), std::numeric_limits<double>::max());
  nz.hi.assign(static_cast<size_t>(rec.n),
               std::numeric_limits<double>::lowest());
  for (int64_t t = begin; t < end; ++t) {
    for (int64_t c = 0; c < rec.n; ++c) {
      const double v = rec.response(t, c);
      nz.lo[c] = std::min(nz.lo[c], v);
      nz.hi[c] = std::max(nz.hi[c], v);
    }
  }
  return nz;
}

WindowSet make_windows(const RecordingSet& rec, const SequencePlan& plan,
                       int64_t begin, int64_t end) {
  plan.validate();
  const int64_t F = plan.total_frames();
  if (begin < 0 || end > rec.T || begin >= end) {
    throw std::invalid_argument("make_windows: bad range [" +
                                std::to_string(begin) + ", " +
                                std::to_string(end) + ")");
  }
  if (end - begin < F + 1) {
    throw std::invalid_argument(
        "make_windows: range of " + std::to_string(end - begin) +
        " frames too short for a " + std::to_string(F) +
        "-frame window plus its target");
  }
  return WindowSet{begin, end - begin - F, F};
}

Tensor frames_to_tensor(const RecordingSet& rec,
                        std::span<const int64_t> window_starts, int64_t F) {
  const int64_t B = static_cast<int64_t>(window_starts.size());
  const int64_t HW = rec.height * rec.width;
  std::vector<double> out(static_cast<size_t>(B * F * HW));
  constexpr double inv = 1.0 / 255.0;
  for (int64_t b = 0; b < B; ++b) {
    const int64_t t0 = window_starts[static_cast<size_t>(b)];
    if (t0 < 0 || t0 + F > rec.T) {
      throw std::invalid_argument("frames_to_tensor: window outside recording");
    }
    const uint8_t* src = &rec.frames[static_cast<size_t>(t0 * HW)];
    double* dst = &out[static_cast<size_t>(b * F * HW)];
    for (int64_t i = 0; i < F * HW; ++i) {
      dst[i] = static_cast<double>(src[i]) * inv;
    }
  }
  return Tensor::from_vector({B, F, rec.height, rec.width}, std::move(out));
}

Tensor targets_to_tensor(const RecordingSet& rec,
                         std::span<const int64_t> window_starts, int64_t F,
                         const ChannelNormalizer* norm) {
  const int64_t B = static_cast<int64_t>(window_starts.size());
  std::vector<double> out(static_cast<size_t>(B * rec.n));
  for (int64_t b = 0; b < B; ++b) {
    const int64_t t = window_starts[static_cast<size_t>(b)] + F;
    if (t >= rec.T) {
      throw std::invalid_argument("targets_to_tensor: target outside recording");
    }
    for (int64_t c = 0; c < rec.n; ++c) {
      const double v = rec.response(t, c);
      out[static_cast<size_t>(b * rec.n + c)] =
          norm ? norm->normalize(v, c) : v;
    }
  }
  return Tensor::from_vector({B, rec.n}, std::move(out));
}

namespace {

constexpr int64_t kTextureSize = 128;
constexpr int64_t kTextureCount = 8;

// Toroidal separable box blur, radius 2.
void blur_pass(std::vector<double>& img, int64_t s) {
  std::vector<double> tmp(img.size());
  for (int64_t y = 0; y < s; ++y) {
    for (int64_t x = 0; x < s; ++x) {
      double acc = 0.0;
      for (int64_t d = -2; d <= 2; ++d) acc += img[y * s + (x + d + s) % s];
      tmp[y * s + x] = acc / 5.0;
    }
  }
  for (int64_t y = 0; y < s; ++y) {
    for (int64_t x = 0; x < s; ++x) {
      double acc = 0.0;
      for (int64_t d = -2; d <= 2; ++d) acc += tmp[((y + d + s) % s) * s + x];
      img[y * s + x] = acc / 5.0;
    }
  }
}

std::vector<std::vector<double>> make_textures(Rng& rng) {
  std::vector<std::vector<double>> bank;
  for (int64_t k = 0; k < kTextureCount; ++k) {
    std::vector<double> img(static_cast<size_t>(kTextureSize * kTextureSize));
    for (double& v : img) v = rng.uniform();
    for (int pass = 0; pass < 3; ++pass) blur_pass(img, kTextureSize);
    const auto [mn, mx] = std::minmax_element(img.begin(), img.end());
    const double range = std::max(*mx - *mn, 1e-12);
    for (double& v : img) v = (v - *mn) / range;
    bank.push_back(std::move(img));
  }
  return bank;
}

double bilinear_torus(const std::vector<double>& img, double y, double x) {
  const int64_t s = kTextureSize;
  double fy = std::floor(y), fx = std::floor(x);
  const double wy = y - fy, wx = x - fx;
  const int64_t y0 = ((static_cast<int64_t>(fy) % s) + s) % s;
  const int64_t x0 = ((static_cast<int64_t>(fx) % s) + s) % s;
  const int64_t y1 = (y0 + 1) % s, x1 = (x0 + 1) % s;
  return img[y0 * s + x0] * (1 - wy) * (1 - wx) +
         img[y0 * s + x1] * (1 - wy) * wx + img[y1 * s + x0] * wy * (1 - wx) +
         img[y1 * s + x1] * wy * wx;
}

}  // namespace

RecordingSet generate_synthetic(const SynthConfig& cfg) {
  return generate_synthetic(cfg, nullptr);
}

RecordingSet generate_synthetic(const SynthConfig& cfg,
                                std::vector<SynthChannelInfo>* info) {
  if (cfg.T <= 60 || cfg.n < 1) {
    throw std::invalid_argument("generate_synthetic: need T > 60 and n >= 1");
  }
  if (cfg.lag_min < 0 || cfg.lag_max < cfg.lag_min || cfg.lag_max >= cfg.T) {
    throw std::invalid_argument("generate_synthetic: invalid lag_range [" +
                                std::to_string(cfg.lag_min) + ", " +
                                std::to_string(cfg.lag_max) + "]");
  }
  if (cfg.sparsity <= 0.0 || cfg.sparsity >= 1.0) {
    throw std::invalid_argument("generate_synthetic: sparsity must be in (0,1)");
  }
  Rng root(cfg.seed);
  Rng tex_rng = root.derive("textures");
  Rng walk_rng = root.derive("walk");
  Rng filt_rng = root.derive("filters");

  const auto bank = make_textures(tex_rng);
  const int64_t H = cfg.height, W = cfg.width, HW = H * W;

  RecordingSet rec;
  rec.T = cfg.T;
  rec.height = H;
  rec.width = W;
  rec.n = cfg.n;
  rec.frames.resize(static_cast<size_t>(cfg.T * HW));

  // Stimulus: bilinear window into the current texture, jittered per frame,
  // with a texture switch and position jump at every saccade.
  size_t tex = walk_rng.below(kTextureCount);
  double oy = walk_rng.uniform(0.0, kTextureSize);
  double ox = walk_rng.uniform(0.0, kTextureSize);
  for (int64_t t = 0; t < cfg.T; ++t) {
    if (t > 0 && cfg.saccade_period > 0 && t % cfg.saccade_period == 0) {
      tex = walk_rng.below(kTextureCount);
      oy = walk_rng.uniform(0.0, kTextureSize);
      ox = walk_rng.uniform(0.0, kTextureSize);
    } else if (t > 0) {
      oy += walk_rng.normal(0.0, cfg.jitter_sigma);
      ox += walk_rng.normal(0.0, cfg.jitter_sigma);
    }
    uint8_t* fr = &rec.frames[static_cast<size_t>(t * HW)];
    for (int64_t y = 0; y < H; ++y) {
      for (int64_t x = 0; x < W; ++x) {
        const double v = bilinear_torus(bank[tex], oy + y, ox + x);
        fr[y * W + x] = static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }

  // Per-channel zero-mean Gaussian-blob filters, a fixed lag, and a
  // softplus nonlinearity thresholded at the sparsity quantile of the drive.
  std::vector<std::vector<double>> filters;
  std::vector<int64_t> lags;
  std::vector<double> amps;
  for (int64_t c = 0; c < cfg.n; ++c) {
    const double cy = filt_rng.uniform(10.0, static_cast<double>(H) - 10.0);
    const double cx = filt_rng.uniform(10.0, static_cast<double>(W) - 10.0);
    const double sg = filt_rng.uniform(4.0, 9.0);
    std::vector<double> f(static_cast<size_t>(HW));
    double mean = 0.0;
    for (int64_t y = 0; y < H; ++y) {
      for (int64_t x = 0; x < W; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        f[y * W + x] = std::exp(-d2 / (2.0 * sg * sg));
        mean += f[y * W + x];
      }
    }
    mean /= static_cast<double>(HW);
    for (double& v : f) v -= mean;
    filters.push_back(std::move(f));
    lags.push_back(filt_rng.range(cfg.lag_min, cfg.lag_max));
    amps.push_back(filt_rng.uniform(20.0, 40.0));
  }

  std::vector<std::vector<double>> drives(
      static_cast<size_t>(cfg.n), std::vector<double>(static_cast<size_t>(cfg.T)));
  std::vector<double> fbuf(static_cast<size_t>(HW));
  for (int64_t t = 0; t < cfg.T; ++t) {
    const uint8_t* fr = &rec.frames[static_cast<size_t>(t * HW)];
    for (int64_t i = 0; i < HW; ++i) {
      fbuf[i] = static_cast<double>(fr[i]) / 255.0;
    }
    for (int64_t c = 0; c < cfg.n; ++c) {
      const auto& f = filters[static_cast<size_t>(c)];
      double acc = 0.0;
      for (int64_t i = 0; i < HW; ++i) acc += f[i] * fbuf[i];
      drives[static_cast<size_t>(c)][static_cast<size_t>(t)] = acc;
    }
  }

  rec.responses.assign(static_cast<size_t>(cfg.T * cfg.n), 0.0f);
  const double ln2 = std::log(2.0);
  for (int64_t c = 0; c < cfg.n; ++c) {
    const auto& d = drives[static_cast<size_t>(c)];
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const double theta =
        sorted[static_cast<size_t>(cfg.sparsity * (cfg.T - 1))];
    double sd = 0.0, m = 0.0;
    for (const double v : d) m += v;
    m /= static_cast<double>(cfg.T);
    for (const double v : d) sd += (v - m) * (v - m);
    sd = std::sqrt(sd / static_cast<double>(cfg.T));
    const double k = 3.0 / std::max(sd, 1e-9);
    const int64_t lag = lags[static_cast<size_t>(c)];
    for (int64_t t = lag; t < cfg.T; ++t) {
      const double x = d[static_cast<size_t>(t - lag)];
      if (x <= theta) continue;
      const double r =
          amps[static_cast<size_t>(c)] * (std::log1p(std::exp(k * (x - theta))) - ln2);
      rec.responses[static_cast<size_t>(t * cfg.n + c)] =
          static_cast<float>(std::max(r, 0.0));
    }
  }

  const int64_t train_end = (cfg.T * 64) / 100;
  const int64_t val_end = (cfg.T * 80) / 100;
  rec.splits = SplitRanges{0, train_end, train_end, val_end, val_end, cfg.T};

  if (info) {
    info->clear();
    for (int64_t c = 0; c < cfg.n; ++c) {
      info->push_back(SynthChannelInfo{lags[static_cast<size_t>(c)],
                                       drives[static_cast<size_t>(c)]});
    }
  }
  rec.validate();
  return rec;
}

std::vector<uint8_t> perturb_noise(const std::vector<uint8_t>& frames,
                                   double sigma, uint64_t seed) {
  if (sigma < 0.0) {
    throw std::invalid_argument("perturb_noise: sigma must be >= 0");
  }
  if (sigma == 0.0) return frames;
  std::vector<uint8_t> out(frames.size());
  Rng rng = Rng(seed).derive("pixel-noise");
  for (size_t i = 0; i < frames.size(); ++i) {
    const double v =
        static_cast<double>(frames[i]) + rng.normal(0.0, sigma);
    out[i] = static_cast<uint8_t>(std::clamp(std::lround(v), 0l, 255l));
  }
  return out;
}

}  // namespace rgc

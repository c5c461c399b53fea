#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rgc/rng.hpp"
#include "rgc/tensor.hpp"

namespace rgc {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// Xavier/Glorot uniform over [-sqrt(6/(fan_in+fan_out)), +...].
Tensor xavier_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng);
// Random square orthogonal matrix: ||Q^T Q - I||_max at machine precision.
Tensor orthogonal(int64_t n, Rng& rng);

enum class Activation { none, relu, tanh };
Activation activation_from_string(const std::string& s);

struct DenseLayer {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
  Activation activation = Activation::none;

  DenseLayer() = default;
  DenseLayer(int64_t in, int64_t out, Activation act, Rng& rng);

  Tensor forward(const Tensor& x) const;  // [B, in] -> [B, out]
  int64_t in_features() const { return weight.dim(0); }
  int64_t out_features() const { return weight.dim(1); }
  int64_t param_count() const { return weight.size() + bias.size(); }
  void collect(const std::string& prefix, NamedParams& out) const;
};

// Cross-correlation (no kernel flip), zero padding.
// x [B, inC, H, W], kernels [outC, inC, kH, kW], bias [outC].
Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias,
              int stride, int padding);

struct Conv2dLayer {
  Tensor kernels;  // [outC, inC, kH, kW]
  Tensor bias;     // [outC]
  int stride = 1;
  int padding = 0;

  Conv2dLayer() = default;
  Conv2dLayer(int64_t in_c, int64_t out_c, int64_t kh, int64_t kw, int stride,
              int padding, Rng& rng);

  Tensor forward(const Tensor& x) const {
    return conv2d(x, kernels, bias, stride, padding);
  }
  int64_t param_count() const { return kernels.size() + bias.size(); }
  void collect(const std::string& prefix, NamedParams& out) const;
};

// Per-sample normalization over (C, H, W) with per-channel affine.
// x [B, C, H, W], gamma [C], beta [C].
Tensor layer_norm_chw(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      double eps = 1e-5);

// 2x2 max pooling, stride 2, floor semantics on odd sizes.
Tensor max_pool2x2(const Tensor& x);

struct EncoderConfig {
  int64_t frames = 40;  // input channels N
  int64_t height = 50;
  int64_t width = 50;
  std::vector<int64_t> channels = {16, 32, 48, 64};
  int64_t latent = 32;
};

struct EncodingBlock {
  Conv2dLayer conv;
  Tensor gamma;  // [C]
  Tensor beta;   // [C]
  bool pool = false;
};

// Four conv/norm/relu blocks (2x2 max pool after the first three) and a
// dense head to the latent size.
struct Encoder {
  EncoderConfig cfg;
  std::vector<EncodingBlock> blocks;
  DenseLayer head;

  Encoder() = default;
  Encoder(EncoderConfig cfg, Rng& rng);

  Tensor forward(const Tensor& frames) const;  // [B, N, 50, 50] -> [B, L]
  int64_t param_count() const;
  void collect(const std::string& prefix, NamedParams& out) const;
};

// Gate weights act on [input ⊕ hidden]; the hidden block of each gate matrix
// is orthogonal-initialized, the input block Xavier, biases zero.
struct LstmCell {
  Tensor wi, wf, wg, wo;  // [L+H, H]
  Tensor bi, bf, bg, bo;  // [H]
  int64_t input_size = 0;
  int64_t hidden_size = 0;

  LstmCell() = default;
  LstmCell(int64_t input, int64_t hidden, Rng& rng);

  // (h', c') from x [B, L], h [B, H], c [B, H].
  std::pair<Tensor, Tensor> step(const Tensor& x, const Tensor& h,
                                 const Tensor& c) const;
  int64_t param_count() const;
  void collect(const std::string& prefix, NamedParams& out) const;
};

}  // namespace rgc

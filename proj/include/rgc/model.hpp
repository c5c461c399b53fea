#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rgc/cells.hpp"
#include "rgc/nn.hpp"
#include "rgc/tensor.hpp"

namespace rgc {

enum class ModelKind { convnet, lstm, ltc, cfc };
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

// M subsequences of N frames, adjacent ones sharing W frames.
struct SequencePlan {
  int64_t m = 1;
  int64_t n = 40;
  int64_t w = 0;

  int64_t total_frames() const { return m * n - (m - 1) * w; }
  void validate() const;
};

struct ModelConfig {
  ModelKind kind = ModelKind::ltc;
  SequencePlan plan;
  int64_t outputs = 9;
  int64_t latent = 32;
  int64_t hidden = 16;  // recurrent size; LTC/CfC split it inter+command
  std::vector<int64_t> encoder_channels = {16, 32, 48, 64};
  int64_t height = 50;
  int64_t width = 50;
  int64_t unfold_steps = 6;
  double dt = 1.0;
  double cfc_time = 1.0;
};

class Model {
 public:
  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {}
  virtual ~Model() = default;

  // frames [B, T, H, W] with T == plan.total_frames().  Inference mode
  // applies ReLU to the prediction; training mode does not.
  virtual Tensor forward(const Tensor& frames, bool inference) = 0;
  virtual NamedParams named_params() const = 0;
  virtual std::vector<Tensor> encoder_group() const = 0;
  virtual std::vector<Tensor> predictor_group() const = 0;
  virtual int64_t param_count() const = 0;

  const ModelConfig& config() const { return cfg_; }
  bool recurrent() const { return cfg_.kind != ModelKind::convnet; }

 protected:
  ModelConfig cfg_;
};

std::unique_ptr<Model> make_model(const ModelConfig& cfg, uint64_t seed);

// Copies one frame window out of a data tensor (no gradient flows into raw
// frames).  frames [B, T, H, W] -> [B, n, H, W] starting at `start`.
Tensor extract_subsequence(const Tensor& frames, int64_t start, int64_t n);

}  // namespace rgc

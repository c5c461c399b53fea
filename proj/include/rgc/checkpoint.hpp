#pragma once

#include <memory>
#include <string>

#include "rgc/data.hpp"
#include "rgc/model.hpp"
#include "rgc/optim.hpp"

namespace rgc {

struct CheckpointMeta {
  ModelConfig model;
  uint64_t seed = 0;
  std::string tag = "last";  // "best" or "last"
  double epoch = 0.0;
  double val_rho = 0.0;
  bool has_normalizer = false;
  ChannelNormalizer normalizer;
  bool has_optimizer = false;
};

// Single binary file: fixed header, serialized parameter tensors, optional
// optimizer state, JSON metadata footer.  Loading rebuilds the model from
// the stored config and overwrites its parameters, so forward outputs are
// bit-identical to the saved model's.
void save_checkpoint(const std::string& path, const Model& model,
                     const CheckpointMeta& meta, const Adam* opt = nullptr);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::unique_ptr<Model> model;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Restores Adam moment buffers saved alongside the model.  The optimizer
// must have been built from the loaded model's parameter groups.
void load_optimizer_state(const std::string& path, Adam& opt);

}  // namespace rgc

#pragma once

#include <string>
#include <vector>

#include "rgc/data.hpp"
#include "rgc/losses.hpp"
#include "rgc/model.hpp"

namespace rgc {

struct TrainConfig {
  ModelConfig model;
  LossKind loss = LossKind::mse;
  int64_t batch_size = 4096;
  // Batches larger than this are split into gradient-accumulation chunks so
  // activation memory stays bounded; the update is mathematically the same.
  int64_t micro_batch = 256;
  int64_t max_epochs = 50;
  int64_t patience = 7;          // early stop, in validations
  double encoder_lr = 0.001;
  double predictor_lr = 0.002;
  // 0 validates once per epoch; otherwise additionally every this many
  // training samples.
  int64_t validate_every = 0;
  double scheduler_factor = 0.5;
  int64_t scheduler_patience = 3;
  double scheduler_min_delta = 1e-4;
  double scheduler_min_lr = 1e-6;
  double grad_clip = 5.0;  // global norm, recurrent models only; 0 disables
  uint64_t seed = 1;
  std::string dataset;  // .rgcd path, used by the CLI
  std::string run_id = "run";

  void validate() const;
};

struct CurveRow {
  double epoch = 0.0;  // fractional for mid-epoch validations
  std::string split;   // "train" or "val"
  double loss = 0.0;
  double rho = 0.0;  // NaN on train rows
};

void write_curves_csv(const std::vector<CurveRow>& rows,
                      const std::string& path);

struct TrainResult {
  std::string best_path;  // empty if no validation completed
  std::string last_path;
  std::vector<CurveRow> curves;
  double best_val_rho = 0.0;
  double best_val_epoch = 0.0;
  double last_val_rho = 0.0;
  int64_t epochs_run = 0;
  double train_seconds = 0.0;
  bool aborted_nan = false;
};

// Trains on data.splits.train, validating on data.splits.val with the
// Pearson rho of denormalized predictions.  Saves best and last checkpoints
// plus curves.csv under out_dir.  Deterministic given config + seed.
TrainResult train(const TrainConfig& cfg, const RecordingSet& data,
                  const std::string& out_dir);

}  // namespace rgc

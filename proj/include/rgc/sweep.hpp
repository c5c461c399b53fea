#pragma once

#include <string>
#include <vector>

#include "rgc/train.hpp"

namespace rgc {

// Random-search space over encoder/predictor hyperparameters.  Categorical
// axes are sampled uniformly from the listed values, learning rates from
// the uniform intervals.  `base` supplies everything not searched (loss,
// epoch budget, dataset shape, ...).
struct SweepSpec {
  std::vector<int64_t> subsequence = {20, 30, 40};
  std::vector<int64_t> batch_size = {2048, 4096, 8192};
  std::vector<int64_t> latent = {16, 32, 64};
  std::vector<int64_t> hidden = {12, 14, 16, 20};
  std::vector<ModelKind> rnn = {ModelKind::ltc, ModelKind::cfc};
  double encoder_lr_lo = 1e-5;
  double encoder_lr_hi = 0.1;
  double predictor_lr_lo = 1e-4;
  double predictor_lr_hi = 0.3;
  int64_t max_runs = 0;      // 0 = no run-count budget
  double max_seconds = 0.0;  // 0 = no wall-clock budget
  TrainConfig base;
  uint64_t seed = 1;

  void validate() const;  // needs at least one budget and non-empty axes
};

// Deterministic draw of trial `index` from the space.
TrainConfig sample_trial(const SweepSpec& spec, int64_t index);

struct SweepRow {
  int64_t run = 0;
  std::string rnn;
  int64_t subsequence = 0;
  int64_t batch_size = 0;
  int64_t latent = 0;
  int64_t hidden = 0;
  double encoder_lr = 0.0;
  double predictor_lr = 0.0;
  double val_rho = 0.0;  // best validation rho of the trial, NaN on abort
  double seconds = 0.0;
  bool aborted_nan = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ranked by val_rho, best first
  TrainConfig best;
  std::string table_path;
  std::string best_config_path;
};

// Trains sampled configs until the budget runs out (a run in progress when
// the wall-clock budget expires still finishes), ranks them by validation
// rho, and writes sweep.csv plus the best configuration as a config file.
SweepResult run_sweep(const SweepSpec& spec, const RecordingSet& data,
                      const std::string& out_dir);

}  // namespace rgc

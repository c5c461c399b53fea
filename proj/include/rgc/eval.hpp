#pragma once

#include <string>
#include <vector>

#include "rgc/data.hpp"
#include "rgc/losses.hpp"
#include "rgc/model.hpp"

namespace rgc {

enum class Split { train, val, test };
Split split_from_string(const std::string& s);
std::string to_string(Split s);

// Display names and the report-row labels derived from them:
// "LTC_MSE-40" (loss and frames per sample), "CfC_2x20" (sequence plan).
std::string display_name(ModelKind k);
std::string loss_label(ModelKind k, LossKind loss, int64_t frames);
std::string scale_label(ModelKind k, const SequencePlan& plan);

struct ChannelMetrics {
  double rho = 0.0;
  double mae = 0.0;
  bool constant_series = false;
};

struct EvalReport {
  std::string run_id;
  std::string model;    // display label
  std::string dataset;
  std::string split;
  double sigma = 0.0;   // input noise level, 0 when unperturbed
  std::vector<ChannelMetrics> channels;
  double rho = 0.0;     // unweighted mean over channels
  double mae = 0.0;
  int64_t samples = 0;
  int64_t params = 0;
  double train_seconds = 0.0;  // NaN when unknown
};

// Inference-mode predictions (rectified, denormalized) scored per channel
// against the raw responses of the chosen split.
EvalReport evaluate(Model& model, const RecordingSet& data,
                    const ChannelNormalizer& norm, Split split,
                    int64_t chunk_size = 256);

// Same, with pixel-wise Gaussian noise added to every frame first.
EvalReport evaluate_noisy(Model& model, const RecordingSet& data,
                          const ChannelNormalizer& norm, Split split,
                          double sigma, uint64_t noise_seed,
                          int64_t chunk_size = 256);

void write_eval_json(const EvalReport& report, const std::string& path);
void write_eval_csv(const EvalReport& report, const std::string& path);

// One model over a list of noise levels (0 = clean, which must come first);
// columns follow the robustness table: clean rho, then per-sigma rho and
// percent relative difference.
struct NoiseStudy {
  std::string model;
  std::vector<double> sigmas;  // including the leading 0
  std::vector<double> rhos;    // parallel to sigmas
  std::vector<double> rel_diffs;  // parallel to sigmas[1..], percent
};

NoiseStudy noise_study(Model& model, const RecordingSet& data,
                       const ChannelNormalizer& norm, Split split,
                       const std::vector<double>& sigmas, uint64_t noise_seed,
                       int64_t chunk_size = 256);

void write_noise_csv(const std::vector<NoiseStudy>& rows,
                     const std::string& path);
void write_noise_json(const std::vector<NoiseStudy>& rows,
                      const std::string& path);

// Per-sample inference latency over a split, warm-up excluded, forward
// computation only.  batch_size 1 measures each sample individually.
struct BenchRow {
  std::string model;
  std::string split;
  int64_t samples = 0;
  int64_t batch_size = 1;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
};

BenchRow bench_inference(Model& model, const RecordingSet& data, Split split,
                         int64_t batch_size, int64_t limit = 0,
                         int64_t warmup = 3);

void write_bench_csv(const std::vector<BenchRow>& rows,
                     const std::string& path);
void write_bench_json(const std::vector<BenchRow>& rows,
                      const std::string& path);

// Flat result rows shared by the loss-variant and multi-scale reports.
struct ResultRow {
  std::string dataset;
  std::string model;  // label with loss/plan suffix
  double rho = 0.0;
  double mae = 0.0;
  int64_t params = 0;
  double train_seconds = 0.0;
};

void write_results_csv(const std::vector<ResultRow>& rows,
                       const std::string& path);

// Aggregate-table row: per-model mean rho with a 95% CI across repeated
// runs, plus the shared one-way ANOVA p over all groups.
struct SummaryRow {
  std::string dataset;
  std::string model;
  double rho = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double mae = 0.0;
  int64_t params = 0;
  double train_seconds = 0.0;
  double anova_p = 0.0;
};

// groups[i] = aggregate rho of each repeated run of model i.
std::vector<SummaryRow> summarize_run_groups(
    const std::vector<std::string>& models,
    const std::vector<std::vector<double>>& rho_groups,
    const std::vector<std::vector<double>>& mae_groups,
    const std::vector<int64_t>& params,
    const std::vector<std::vector<double>>& train_seconds,
    const std::string& dataset);

void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::string& path);

}  // namespace rgc

#include "rgc/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "rgc/config.hpp"
#include "rgc/rng.hpp"

namespace rgc {

void SweepSpec::validate() const {
  if (max_runs <= 0 && max_seconds <= 0.0) {
    throw std::invalid_argument("sweep needs a run-count or wall-clock budget");
  }
  if (subsequence.empty() || batch_size.empty() || latent.empty() ||
      hidden.empty() || rnn.empty()) {
    throw std::invalid_argument("sweep axes must be non-empty");
  }
  if (encoder_lr_lo <= 0.0 || encoder_lr_hi <= encoder_lr_lo ||
      predictor_lr_lo <= 0.0 || predictor_lr_hi <= predictor_lr_lo) {
    throw std::invalid_argument("sweep learning-rate bounds must satisfy "
                                "0 < lo < hi");
  }
  for (const ModelKind k : rnn) {
    if (k != ModelKind::ltc && k != ModelKind::cfc) {
      throw std::invalid_argument("sweep rnn axis accepts ltc and cfc only");
    }
  }
}

TrainConfig sample_trial(const SweepSpec& spec, int64_t index) {
  Rng rng = Rng(spec.seed).derive("trial-" + std::to_string(index));
  TrainConfig cfg = spec.base;
  cfg.model.kind = spec.rnn[rng.below(spec.rnn.size())];
  cfg.model.plan.n = spec.subsequence[rng.below(spec.subsequence.size())];
  cfg.batch_size = spec.batch_size[rng.below(spec.batch_size.size())];
  cfg.model.latent = spec.latent[rng.below(spec.latent.size())];
  cfg.model.hidden = spec.hidden[rng.below(spec.hidden.size())];
  cfg.encoder_lr = rng.uniform(spec.encoder_lr_lo, spec.encoder_lr_hi);
  cfg.predictor_lr = rng.uniform(spec.predictor_lr_lo, spec.predictor_lr_hi);
  cfg.seed = rng.derive("train").state();
  cfg.run_id = "trial-" + std::to_string(index);
  return cfg;
}

namespace {

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << std::setprecision(12);
  os << "rank,run,rnn,subsequence,batch_size,latent,hidden,encoder_lr,"
        "predictor_lr,val_rho,seconds,aborted\n";
  for (size_t rank = 0; rank < rows.size(); ++rank) {
    const SweepRow& r = rows[rank];
    os << rank + 1 << ',' << r.run << ',' << r.rnn << ',' << r.subsequence
       << ',' << r.batch_size << ',' << r.latent << ',' << r.hidden << ','
       << r.encoder_lr << ',' << r.predictor_lr << ',';
    if (std::isnan(r.val_rho)) {
      os << "nan";
    } else {
      os << r.val_rho;
    }
    os << ',' << r.seconds << ',' << (r.aborted_nan ? 1 : 0) << '\n';
  }
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const RecordingSet& data,
                      const std::string& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);

  SweepResult result;
  std::vector<TrainConfig> configs;
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  };

  for (int64_t run = 0;; ++run) {
    if (spec.max_runs > 0 && run >= spec.max_runs) break;
    if (spec.max_seconds > 0.0 && run > 0 && elapsed() >= spec.max_seconds) {
      break;
    }
    const TrainConfig cfg = sample_trial(spec, run);
    const TrainResult tr =
        train(cfg, data, out_dir + "/" + cfg.run_id);

    SweepRow row;
    row.run = run;
    row.rnn = to_string(cfg.model.kind);
    row.subsequence = cfg.model.plan.n;
    row.batch_size = cfg.batch_size;
    row.latent = cfg.model.latent;
    row.hidden = cfg.model.hidden;
    row.encoder_lr = cfg.encoder_lr;
    row.predictor_lr = cfg.predictor_lr;
    row.val_rho = tr.best_val_rho;
    row.seconds = tr.train_seconds;
    row.aborted_nan = tr.aborted_nan;
    result.rows.push_back(row);
    configs.push_back(cfg);
  }

  std::vector<size_t> order(result.rows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const double ra = result.rows[a].val_rho;
    const double rb = result.rows[b].val_rho;
    if (std::isnan(ra)) return false;
    if (std::isnan(rb)) return true;
    return ra > rb;
  });
  std::vector<SweepRow> ranked;
  for (const size_t i : order) ranked.push_back(result.rows[i]);
  result.rows = std::move(ranked);

  result.table_path = out_dir + "/sweep.csv";
  write_sweep_csv(result.rows, result.table_path);

  result.best = configs[order[0]];
  result.best_config_path = out_dir + "/best_config.conf";
  save_train_config(result.best, result.best_config_path);
  return result;
}

}  // namespace rgc

#include "rgc/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rgc/checkpoint.hpp"
#include "rgc/optim.hpp"
#include "rgc/rng.hpp"
#include "rgc/stats.hpp"

namespace rgc {

void TrainConfig::validate() const {
  model.plan.validate();
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (micro_batch < 0) throw std::invalid_argument("micro_batch must be >= 0");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (encoder_lr <= 0.0 || predictor_lr <= 0.0) {
    throw std::invalid_argument("learning rates must be positive");
  }
  if (validate_every < 0) {
    throw std::invalid_argument("validate_every must be >= 0");
  }
  if (scheduler_factor <= 0.0 || scheduler_factor > 1.0) {
    throw std::invalid_argument("scheduler_factor must be in (0, 1]");
  }
  if (scheduler_patience < 1) {
    throw std::invalid_argument("scheduler_patience must be >= 1");
  }
  if (scheduler_min_lr <= 0.0) {
    throw std::invalid_argument("scheduler_min_lr must be positive");
  }
  if (grad_clip < 0.0) throw std::invalid_argument("grad_clip must be >= 0");
}

void write_curves_csv(const std::vector<CurveRow>& rows,
                      const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "epoch,split,loss,rho\n";
  os << std::setprecision(12);
  for (const CurveRow& r : rows) {
    os << r.epoch << ',' << r.split << ',' << r.loss << ',';
    if (std::isnan(r.rho)) {
      os << "nan";
    } else {
      os << r.rho;
    }
    os << '\n';
  }
}

namespace {

struct ValMetrics {
  double loss = 0.0;
  double rho = 0.0;
};

// One pass over a split: loss in normalized space plus the Pearson rho of
// denormalized rectified predictions against raw responses, averaged over
// channels.
ValMetrics run_validation(Model& model, const RecordingSet& data,
                          const WindowSet& windows,
                          const ChannelNormalizer& norm, LossKind loss_kind,
                          int64_t chunk_size) {
  NoGradGuard ng;
  const int64_t n = data.n;
  const int64_t F = windows.frames_per_sample;
  std::vector<std::vector<double>> pred_ch(n), target_ch(n);
  double loss_sum = 0.0;

  std::vector<int64_t> starts;
  for (int64_t done = 0; done < windows.count; done += chunk_size) {
    const int64_t b = std::min(chunk_size, windows.count - done);
    starts.resize(static_cast<size_t>(b));
    for (int64_t i = 0; i < b; ++i) {
      starts[static_cast<size_t>(i)] = windows.window_start(done + i);
    }
    const Tensor frames = frames_to_tensor(data, starts, F);
    const Tensor targets = targets_to_tensor(data, starts, F, &norm);
    const Tensor pred = model.forward(frames, false);
    loss_sum +=
        compute_loss(loss_kind, pred, targets).item() * static_cast<double>(b);
    const auto pv = pred.data();
    for (int64_t i = 0; i < b; ++i) {
      const int64_t t = windows.target_index(done + i);
      for (int64_t ch = 0; ch < n; ++ch) {
        const double raw = pv[static_cast<size_t>(i * n + ch)];
        const double rect = std::max(raw, 0.0);  // inference-mode ReLU
        pred_ch[static_cast<size_t>(ch)].push_back(norm.denormalize(rect, ch));
        target_ch[static_cast<size_t>(ch)].push_back(data.response(t, ch));
      }
    }
  }

  ValMetrics out;
  out.loss = loss_sum / static_cast<double>(windows.count);
  double rho_sum = 0.0;
  for (int64_t ch = 0; ch < n; ++ch) {
    rho_sum += pearson(pred_ch[static_cast<size_t>(ch)],
                       target_ch[static_cast<size_t>(ch)])
                   .rho;
  }
  out.rho = rho_sum / static_cast<double>(n);
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const RecordingSet& data,
                  const std::string& out_dir) {
  cfg.validate();
  data.validate();

  ModelConfig mcfg = cfg.model;
  mcfg.outputs = data.n;
  mcfg.height = data.height;
  mcfg.width = data.width;

  std::unique_ptr<Model> model = make_model(mcfg, cfg.seed);
  const ChannelNormalizer norm = ChannelNormalizer::fit(
      data, data.splits.train_begin, data.splits.train_end);
  const WindowSet train_windows = make_windows(
      data, mcfg.plan, data.splits.train_begin, data.splits.train_end);
  const WindowSet val_windows = make_windows(data, mcfg.plan,
                                             data.splits.val_begin,
                                             data.splits.val_end);

  std::vector<ParamGroup> groups;
  if (!model->encoder_group().empty()) {
    groups.push_back({model->encoder_group(), cfg.encoder_lr});
  }
  if (!model->predictor_group().empty()) {
    groups.push_back({model->predictor_group(), cfg.predictor_lr});
  }
  Adam opt(groups);

  std::vector<Tensor> all_params;
  for (const auto& [name, t] : model->named_params()) all_params.push_back(t);

  PlateauScheduler sched;
  sched.factor = cfg.scheduler_factor;
  sched.patience = cfg.scheduler_patience;
  sched.min_delta = cfg.scheduler_min_delta;
  sched.min_lr = cfg.scheduler_min_lr;
  EarlyStopper stopper;
  stopper.patience = cfg.patience;

  std::filesystem::create_directories(out_dir);
  const std::string best_path = out_dir + "/best.ckpt";
  const std::string last_path = out_dir + "/last.ckpt";
  const std::string curves_path = out_dir + "/curves.csv";

  TrainResult result;
  result.best_val_rho = std::nan("");
  result.last_val_rho = std::nan("");

  const int64_t F = train_windows.frames_per_sample;
  const int64_t chunk_size = cfg.micro_batch == 0
                                 ? cfg.batch_size
                                 : std::min(cfg.micro_batch, cfg.batch_size);
  const Rng root(cfg.seed);
  const auto t0 = std::chrono::steady_clock::now();
  bool stop = false;

  const auto save_meta = [&](const std::string& tag, double epoch,
                             double val_rho) {
    CheckpointMeta meta;
    meta.model = mcfg;
    meta.seed = cfg.seed;
    meta.tag = tag;
    meta.epoch = epoch;
    meta.val_rho = val_rho;
    meta.has_normalizer = true;
    meta.normalizer = norm;
    return meta;
  };

  const auto handle_validation = [&](double epoch_f) {
    const ValMetrics vm = run_validation(*model, data, val_windows, norm,
                                         cfg.loss, chunk_size);
    result.curves.push_back({epoch_f, "val", vm.loss, vm.rho});
    result.last_val_rho = vm.rho;
    if (std::isnan(result.best_val_rho) || vm.rho > result.best_val_rho) {
      result.best_val_rho = vm.rho;
      result.best_val_epoch = epoch_f;
      save_checkpoint(best_path, *model, save_meta("best", epoch_f, vm.rho),
                      &opt);
      result.best_path = best_path;
    }
    sched.observe(vm.rho, opt);
    if (stopper.should_stop(vm.rho)) stop = true;
  };

  std::vector<int64_t> order(static_cast<size_t>(train_windows.count));
  std::iota(order.begin(), order.end(), int64_t{0});
  std::vector<int64_t> starts;

  for (int64_t epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
    Rng shuffle_rng =
        root.derive("shuffle-epoch-" + std::to_string(epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    int64_t done = 0;
    int64_t since_val = 0;
    while (done < train_windows.count) {
      const int64_t batch =
          std::min(cfg.batch_size, train_windows.count - done);
      opt.zero_grad();
      double batch_loss = 0.0;
      for (int64_t coff = 0; coff < batch; coff += chunk_size) {
        const int64_t b = std::min(chunk_size, batch - coff);
        starts.resize(static_cast<size_t>(b));
        for (int64_t i = 0; i < b; ++i) {
          starts[static_cast<size_t>(i)] = train_windows.window_start(
              order[static_cast<size_t>(done + coff + i)]);
        }
        const Tensor frames = frames_to_tensor(data, starts, F);
        const Tensor targets = targets_to_tensor(data, starts, F, &norm);
        Tensor pred = model->forward(frames, false);
        Tensor loss = compute_loss(cfg.loss, pred, targets);
        const double lv = loss.item();
        if (!std::isfinite(lv)) {
          write_curves_csv(result.curves, curves_path);
          result.aborted_nan = true;
          result.epochs_run = epoch;
          result.train_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
          return result;
        }
        batch_loss += lv * static_cast<double>(b);
        if (b != batch) {
          loss = scale(loss, static_cast<double>(b) /
                                 static_cast<double>(batch));
        }
        backward(loss);
      }
      if (model->recurrent() && cfg.grad_clip > 0.0) {
        clip_global_norm(all_params, cfg.grad_clip);
      }
      opt.step();

      epoch_loss += batch_loss;
      done += batch;
      since_val += batch;
      if (cfg.validate_every > 0 && since_val >= cfg.validate_every &&
          done < train_windows.count) {
        const double epoch_f =
            static_cast<double>(epoch) +
            static_cast<double>(done) /
                static_cast<double>(train_windows.count);
        handle_validation(epoch_f);
        since_val = 0;
        if (stop) break;
      }
    }

    result.epochs_run = epoch + 1;
    const double epoch_f =
        static_cast<double>(epoch) +
        static_cast<double>(done) / static_cast<double>(train_windows.count);
    result.curves.push_back(
        {epoch_f, "train", epoch_loss / static_cast<double>(done),
         std::nan("")});
    if (!stop) handle_validation(epoch_f);
  }

  result.train_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
  save_checkpoint(last_path, *model,
                  save_meta("last", static_cast<double>(result.epochs_run),
                            result.last_val_rho),
                  &opt);
  result.last_path = last_path;
  write_curves_csv(result.curves, curves_path);
  return result;
}

}  // namespace rgc

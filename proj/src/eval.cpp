#include "rgc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rgc/rng.hpp"
#include "rgc/stats.hpp"

namespace rgc {

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split: " + s);
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw std::invalid_argument("bad split");
}

std::string display_name(ModelKind k) {
  switch (k) {
    case ModelKind::convnet: return "ConvNet";
    case ModelKind::lstm: return "LSTM";
    case ModelKind::ltc: return "LTC";
    case ModelKind::cfc: return "CfC";
  }
  throw std::invalid_argument("bad model kind");
}

std::string loss_label(ModelKind k, LossKind loss, int64_t frames) {
  std::string tag = to_string(loss);
  std::transform(tag.begin(), tag.end(), tag.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return display_name(k) + "_" + tag + "-" + std::to_string(frames);
}

std::string scale_label(ModelKind k, const SequencePlan& plan) {
  return display_name(k) + "_" + std::to_string(plan.m) + "x" +
         std::to_string(plan.n);
}

namespace {

std::pair<int64_t, int64_t> split_range(const RecordingSet& data, Split s) {
  switch (s) {
    case Split::train: return {data.splits.train_begin, data.splits.train_end};
    case Split::val: return {data.splits.val_begin, data.splits.val_end};
    case Split::test: return {data.splits.test_begin, data.splits.test_end};
  }
  throw std::invalid_argument("bad split");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << std::setprecision(12);
  return os;
}

std::string fmt_sigma(double sigma) {
  if (sigma == std::floor(sigma)) {
    return std::to_string(static_cast<int64_t>(sigma));
  }
  std::ostringstream ss;
  ss << sigma;
  return ss.str();
}

}  // namespace

EvalReport evaluate(Model& model, const RecordingSet& data,
                    const ChannelNormalizer& norm, Split split,
                    int64_t chunk_size) {
  if (chunk_size < 1) throw std::invalid_argument("chunk_size must be >= 1");
  const auto [begin, end] = split_range(data, split);
  const WindowSet windows = make_windows(data, model.config().plan, begin, end);
  const int64_t n = data.n;
  const int64_t F = windows.frames_per_sample;

  NoGradGuard ng;
  std::vector<std::vector<double>> pred_ch(n), target_ch(n);
  std::vector<int64_t> starts;
  for (int64_t done = 0; done < windows.count; done += chunk_size) {
    const int64_t b = std::min(chunk_size, windows.count - done);
    starts.resize(static_cast<size_t>(b));
    for (int64_t i = 0; i < b; ++i) {
      starts[static_cast<size_t>(i)] = windows.window_start(done + i);
    }
    const Tensor frames = frames_to_tensor(data, starts, F);
    const Tensor pred = model.forward(frames, true);
    const auto pv = pred.data();
    for (int64_t i = 0; i < b; ++i) {
      const int64_t t = windows.target_index(done + i);
      for (int64_t ch = 0; ch < n; ++ch) {
        pred_ch[static_cast<size_t>(ch)].push_back(
            norm.denormalize(pv[static_cast<size_t>(i * n + ch)], ch));
        target_ch[static_cast<size_t>(ch)].push_back(data.response(t, ch));
      }
    }
  }

  EvalReport report;
  report.model = display_name(model.config().kind);
  report.split = to_string(split);
  report.samples = windows.count;
  report.params = model.param_count();
  report.train_seconds = std::nan("");
  double rho_sum = 0.0, mae_sum = 0.0;
  for (int64_t ch = 0; ch < n; ++ch) {
    const auto& p = pred_ch[static_cast<size_t>(ch)];
    const auto& t = target_ch[static_cast<size_t>(ch)];
    ChannelMetrics cm;
    const PearsonResult pr = pearson(p, t);
    cm.rho = pr.rho;
    cm.constant_series = pr.constant_series;
    cm.mae = mae(p, t);
    report.channels.push_back(cm);
    rho_sum += cm.rho;
    mae_sum += cm.mae;
  }
  report.rho = rho_sum / static_cast<double>(n);
  report.mae = mae_sum / static_cast<double>(n);
  return report;
}

EvalReport evaluate_noisy(Model& model, const RecordingSet& data,
                          const ChannelNormalizer& norm, Split split,
                          double sigma, uint64_t noise_seed,
                          int64_t chunk_size) {
  if (sigma == 0.0) {
    EvalReport report = evaluate(model, data, norm, split, chunk_size);
    report.sigma = 0.0;
    return report;
  }
  RecordingSet noisy = data;
  noisy.frames = perturb_noise(data.frames, sigma, noise_seed);
  EvalReport report = evaluate(model, noisy, norm, split, chunk_size);
  report.sigma = sigma;
  return report;
}

NoiseStudy noise_study(Model& model, const RecordingSet& data,
                       const ChannelNormalizer& norm, Split split,
                       const std::vector<double>& sigmas, uint64_t noise_seed,
                       int64_t chunk_size) {
  if (sigmas.empty() || sigmas.front() != 0.0) {
    throw std::invalid_argument(
        "noise study needs a leading sigma 0 baseline");
  }
  NoiseStudy study;
  study.model = display_name(model.config().kind);
  study.sigmas = sigmas;
  const Rng root(noise_seed);
  for (const double sigma : sigmas) {
    const uint64_t seed = root.derive("sigma-" + fmt_sigma(sigma)).state();
    const EvalReport r =
        evaluate_noisy(model, data, norm, split, sigma, seed, chunk_size);
    study.rhos.push_back(r.rho);
  }
  for (size_t i = 1; i < study.rhos.size(); ++i) {
    study.rel_diffs.push_back(relative_diff(study.rhos[0], study.rhos[i]));
  }
  return study;
}

BenchRow bench_inference(Model& model, const RecordingSet& data, Split split,
                         int64_t batch_size, int64_t limit, int64_t warmup) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const auto [begin, end] = split_range(data, split);
  const WindowSet windows = make_windows(data, model.config().plan, begin, end);
  int64_t count = windows.count;
  if (limit > 0) count = std::min(count, limit);
  const int64_t F = windows.frames_per_sample;

  NoGradGuard ng;
  std::vector<int64_t> starts;
  const auto prepare = [&](int64_t done, int64_t b) {
    starts.resize(static_cast<size_t>(b));
    for (int64_t i = 0; i < b; ++i) {
      starts[static_cast<size_t>(i)] = windows.window_start(done + i);
    }
    return frames_to_tensor(data, starts, F);
  };

  for (int64_t i = 0; i < std::min(warmup, count); ++i) {
    const Tensor frames = prepare(i, 1);
    model.forward(frames, true);
  }

  std::vector<double> per_sample;
  for (int64_t done = 0; done < count; done += batch_size) {
    const int64_t b = std::min(batch_size, count - done);
    const Tensor frames = prepare(done, b);
    const auto t0 = std::chrono::steady_clock::now();
    model.forward(frames, true);
    const auto t1 = std::chrono::steady_clock::now();
    per_sample.push_back(std::chrono::duration<double>(t1 - t0).count() /
                         static_cast<double>(b));
  }

  BenchRow row;
  row.model = display_name(model.config().kind);
  row.split = to_string(split);
  row.samples = count;
  row.batch_size = batch_size;
  double sum = 0.0;
  for (const double v : per_sample) sum += v;
  row.mean_seconds = sum / static_cast<double>(per_sample.size());
  double sq = 0.0;
  for (const double v : per_sample) {
    sq += (v - row.mean_seconds) * (v - row.mean_seconds);
  }
  row.std_seconds = per_sample.size() > 1
                        ? std::sqrt(sq / static_cast<double>(
                                             per_sample.size() - 1))
                        : 0.0;
  return row;
}

namespace {

nlohmann::json eval_to_json(const EvalReport& r) {
  nlohmann::json channels = nlohmann::json::array();
  for (const ChannelMetrics& cm : r.channels) {
    channels.push_back({{"rho", cm.rho},
                        {"mae", cm.mae},
                        {"constant_series", cm.constant_series}});
  }
  return {{"run_id", r.run_id},
          {"model", r.model},
          {"dataset", r.dataset},
          {"split", r.split},
          {"sigma", r.sigma},
          {"rho", r.rho},
          {"mae", r.mae},
          {"samples", r.samples},
          {"params", r.params},
          {"train_seconds",
           std::isnan(r.train_seconds) ? nlohmann::json(nullptr)
                                       : nlohmann::json(r.train_seconds)},
          {"channels", channels}};
}

}  // namespace

void write_eval_json(const EvalReport& report, const std::string& path) {
  auto os = open_out(path);
  os << eval_to_json(report).dump(2) << '\n';
}

void write_eval_csv(const EvalReport& report, const std::string& path) {
  auto os = open_out(path);
  os << "run_id,model,dataset,split,sigma,channel,rho,mae,constant_series\n";
  const auto prefix = [&]() -> std::ostream& {
    os << report.run_id << ',' << report.model << ',' << report.dataset << ','
       << report.split << ',' << report.sigma << ',';
    return os;
  };
  for (size_t ch = 0; ch < report.channels.size(); ++ch) {
    const ChannelMetrics& cm = report.channels[ch];
    prefix() << ch << ',' << cm.rho << ',' << cm.mae << ','
             << (cm.constant_series ? 1 : 0) << '\n';
  }
  prefix() << "all," << report.rho << ',' << report.mae << ",0\n";
}

void write_noise_csv(const std::vector<NoiseStudy>& rows,
                     const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("no noise rows to write");
  auto os = open_out(path);
  os << "model,non_perturbed";
  for (size_t i = 1; i < rows[0].sigmas.size(); ++i) {
    const std::string s = fmt_sigma(rows[0].sigmas[i]);
    os << ",rho_sigma_" << s << ",rel_diff_sigma_" << s;
  }
  os << '\n';
  for (const NoiseStudy& row : rows) {
    if (row.sigmas != rows[0].sigmas) {
      throw std::invalid_argument("noise rows disagree on sigma list");
    }
    os << row.model << ',' << row.rhos[0];
    for (size_t i = 1; i < row.sigmas.size(); ++i) {
      os << ',' << row.rhos[i] << ',' << row.rel_diffs[i - 1];
    }
    os << '\n';
  }
}

void write_noise_json(const std::vector<NoiseStudy>& rows,
                      const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const NoiseStudy& row : rows) {
    arr.push_back({{"model", row.model},
                   {"sigmas", row.sigmas},
                   {"rhos", row.rhos},
                   {"rel_diffs_percent", row.rel_diffs}});
  }
  auto os = open_out(path);
  os << arr.dump(2) << '\n';
}

void write_bench_csv(const std::vector<BenchRow>& rows,
                     const std::string& path) {
  auto os = open_out(path);
  os << "model,split,samples,batch_size,mean_seconds_per_sample,"
        "std_seconds_per_sample\n";
  for (const BenchRow& r : rows) {
    os << r.model << ',' << r.split << ',' << r.samples << ',' << r.batch_size
       << ',' << r.mean_seconds << ',' << r.std_seconds << '\n';
  }
}

void write_bench_json(const std::vector<BenchRow>& rows,
                      const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const BenchRow& r : rows) {
    arr.push_back({{"model", r.model},
                   {"split", r.split},
                   {"samples", r.samples},
                   {"batch_size", r.batch_size},
                   {"mean_seconds_per_sample", r.mean_seconds},
                   {"std_seconds_per_sample", r.std_seconds}});
  }
  auto os = open_out(path);
  os << arr.dump(2) << '\n';
}

void write_results_csv(const std::vector<ResultRow>& rows,
                       const std::string& path) {
  auto os = open_out(path);
  os << "dataset,model,rho,mae,params,train_seconds\n";
  for (const ResultRow& r : rows) {
    os << r.dataset << ',' << r.model << ',' << r.rho << ',' << r.mae << ','
       << r.params << ',' << r.train_seconds << '\n';
  }
}

std::vector<SummaryRow> summarize_run_groups(
    const std::vector<std::string>& models,
    const std::vector<std::vector<double>>& rho_groups,
    const std::vector<std::vector<double>>& mae_groups,
    const std::vector<int64_t>& params,
    const std::vector<std::vector<double>>& train_seconds,
    const std::string& dataset) {
  const size_t k = models.size();
  if (rho_groups.size() != k || mae_groups.size() != k ||
      params.size() != k || train_seconds.size() != k) {
    throw std::invalid_argument("summary inputs disagree on model count");
  }
  const TestResult anova = anova_oneway(rho_groups);
  std::vector<SummaryRow> rows;
  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  for (size_t i = 0; i < k; ++i) {
    SummaryRow row;
    row.dataset = dataset;
    row.model = models[i];
    row.rho = mean_of(rho_groups[i]);
    const auto [lo, hi] = ci95(rho_groups[i]);
    row.ci_low = lo;
    row.ci_high = hi;
    row.mae = mean_of(mae_groups[i]);
    row.params = params[i];
    row.train_seconds = mean_of(train_seconds[i]);
    row.anova_p = anova.p;
    rows.push_back(row);
  }
  return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::string& path) {
  auto os = open_out(path);
  os << "dataset,model,rho,ci_low,ci_high,mae,params,train_seconds,anova_p\n";
  for (const SummaryRow& r : rows) {
    os << r.dataset << ',' << r.model << ',' << r.rho << ',' << r.ci_low
       << ',' << r.ci_high << ',' << r.mae << ',' << r.params << ','
       << r.train_seconds << ',' << r.anova_p << '\n';
  }
}

}  // namespace rgc

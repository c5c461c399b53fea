#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rgc/checkpoint.hpp"
#include "rgc/config.hpp"
#include "rgc/data.hpp"
#include "rgc/eval.hpp"
#include "rgc/sweep.hpp"
#include "rgc/train.hpp"

namespace {

struct GlobalArgs {
  std::string config;
  std::string out_dir = "out";
  uint64_t seed = 0;
  bool seed_set = false;
};

// Builds the model + normalizer either from a checkpoint or, for fresh-init
// evaluation, from a config file.
struct LoadedModel {
  std::unique_ptr<rgc::Model> model;
  rgc::ChannelNormalizer norm;
  double train_seconds = 0.0;
};

LoadedModel resolve_model(const std::string& checkpoint,
                          const std::string& config,
                          const rgc::RecordingSet& data, uint64_t seed) {
  LoadedModel out;
  out.train_seconds = std::nan("");
  if (!checkpoint.empty()) {
    rgc::LoadedCheckpoint ck = rgc::load_checkpoint(checkpoint);
    out.model = std::move(ck.model);
    if (ck.meta.has_normalizer) {
      out.norm = ck.meta.normalizer;
    } else {
      out.norm = rgc::ChannelNormalizer::fit(data, data.splits.train_begin,
                                             data.splits.train_end);
    }
    return out;
  }
  if (config.empty()) {
    throw std::runtime_error("need --checkpoint or --config to build a model");
  }
  rgc::TrainConfig cfg = rgc::load_train_config(config);
  cfg.model.outputs = data.n;
  cfg.model.height = data.height;
  cfg.model.width = data.width;
  out.model = rgc::make_model(cfg.model, seed != 0 ? seed : cfg.seed);
  out.norm = rgc::ChannelNormalizer::fit(data, data.splits.train_begin,
                                         data.splits.train_end);
  return out;
}

std::string dataset_id(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time RNNs predicting retinal responses to video"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config, "Config file (key = value)");
  app.add_option("--out-dir", g.out_dir, "Artifact directory");
  app.add_option("--seed", g.seed, "Seed override")
      ->each([&](const std::string&) { g.seed_set = true; });

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic recording");
  synth->fallthrough();
  rgc::SynthConfig sc;
  std::string synth_out;
  bool synth_csv = false;
  synth->add_option("--t", sc.T, "Total frames");
  synth->add_option("--n", sc.n, "Response channels");
  synth->add_option("--lag-min", sc.lag_min, "Minimum response lag, frames");
  synth->add_option("--lag-max", sc.lag_max, "Maximum response lag, frames");
  synth->add_option("--sparsity", sc.sparsity, "Target zero fraction");
  synth->add_option("--height", sc.height, "Frame height");
  synth->add_option("--width", sc.width, "Frame width");
  synth->add_option("--out", synth_out, "Output .rgcd path");
  synth->add_flag("--responses-csv", synth_csv,
                  "Also write responses as CSV");
  synth->callback([&] {
    if (g.seed_set) sc.seed = g.seed;
    std::filesystem::create_directories(g.out_dir);
    const std::string path =
        synth_out.empty() ? g.out_dir + "/synthetic.rgcd" : synth_out;
    const rgc::RecordingSet rec = rgc::generate_synthetic(sc);
    rgc::save_recording(rec, path);
    std::cout << "wrote " << path << "\n";
    if (synth_csv) {
      const std::string csv = path + ".responses.csv";
      rgc::responses_to_csv(rec, csv);
      std::cout << "wrote " << csv << "\n";
    }
  });

  // train
  auto* tr = app.add_subcommand("train", "Train a model from a config");
  tr->fallthrough();
  std::string train_dataset;
  tr->add_option("--dataset", train_dataset, "Dataset .rgcd override");
  tr->callback([&] {
    if (g.config.empty()) throw std::runtime_error("train needs --config");
    rgc::TrainConfig cfg = rgc::load_train_config(g.config);
    if (!train_dataset.empty()) cfg.dataset = train_dataset;
    if (g.seed_set) cfg.seed = g.seed;
    if (cfg.dataset.empty()) {
      throw std::runtime_error("no dataset: set `dataset` or --dataset");
    }
    const rgc::RecordingSet data = rgc::load_recording(cfg.dataset);
    const std::string run_dir = g.out_dir + "/" + cfg.run_id;
    const rgc::TrainResult res = rgc::train(cfg, data, run_dir);

    nlohmann::json j = {
        {"run_id", cfg.run_id},
        {"best_checkpoint", res.best_path},
        {"last_checkpoint", res.last_path},
        {"best_val_rho", res.best_val_rho},
        {"best_val_epoch", res.best_val_epoch},
        {"last_val_rho", res.last_val_rho},
        {"epochs_run", res.epochs_run},
        {"train_seconds", res.train_seconds},
        {"aborted_nan", res.aborted_nan},
    };
    const std::string result_path = run_dir + "/result.json";
    std::ofstream os(result_path);
    os << j.dump(2) << '\n';
    std::cout << "wrote " << run_dir << "/curves.csv\n";
    if (!res.best_path.empty()) std::cout << "wrote " << res.best_path << "\n";
    std::cout << "wrote " << res.last_path << "\n";
    std::cout << "wrote " << result_path << "\n";
    if (res.aborted_nan) {
      std::cout << "training aborted on non-finite loss\n";
    }
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Score a model on a split");
  ev->fallthrough();
  std::string eval_ckpt, eval_dataset, eval_split = "test", eval_run_id;
  ev->add_option("--checkpoint", eval_ckpt, "Checkpoint path");
  ev->add_option("--dataset", eval_dataset, "Dataset .rgcd")->required();
  ev->add_option("--split", eval_split, "train|val|test");
  ev->add_option("--run-id", eval_run_id, "Run id recorded in the report");
  ev->callback([&] {
    const rgc::RecordingSet data = rgc::load_recording(eval_dataset);
    LoadedModel lm = resolve_model(eval_ckpt, g.config, data, g.seed);
    rgc::EvalReport report =
        rgc::evaluate(*lm.model, data, lm.norm,
                      rgc::split_from_string(eval_split));
    report.run_id = eval_run_id;
    report.dataset = dataset_id(eval_dataset);
    report.train_seconds = lm.train_seconds;
    std::filesystem::create_directories(g.out_dir);
    rgc::write_eval_csv(report, g.out_dir + "/eval.csv");
    rgc::write_eval_json(report, g.out_dir + "/eval.json");
    std::cout << "wrote " << g.out_dir << "/eval.csv\n";
    std::cout << "wrote " << g.out_dir << "/eval.json\n";
    std::cout << report.model << " " << report.split
              << " rho=" << report.rho << " mae=" << report.mae << "\n";
  });

  // noise-eval
  auto* ne = app.add_subcommand(
      "noise-eval", "Evaluate under additive Gaussian pixel noise");
  ne->fallthrough();
  std::vector<std::string> noise_ckpts;
  std::string noise_dataset, noise_split = "test";
  std::vector<double> noise_sigmas = {0.0, 25.0, 50.0};
  ne->add_option("--checkpoint", noise_ckpts, "Checkpoint(s), one row each")
      ->required();
  ne->add_option("--dataset", noise_dataset, "Dataset .rgcd")->required();
  ne->add_option("--split", noise_split, "train|val|test");
  ne->add_option("--sigmas", noise_sigmas,
                 "Noise levels, first must be 0 (clean)");
  ne->callback([&] {
    const rgc::RecordingSet data = rgc::load_recording(noise_dataset);
    const uint64_t seed = g.seed_set ? g.seed : 7;
    std::vector<rgc::NoiseStudy> rows;
    for (const std::string& ck : noise_ckpts) {
      LoadedModel lm = resolve_model(ck, "", data, 0);
      rows.push_back(rgc::noise_study(*lm.model, data, lm.norm,
                                      rgc::split_from_string(noise_split),
                                      noise_sigmas, seed));
    }
    std::filesystem::create_directories(g.out_dir);
    rgc::write_noise_csv(rows, g.out_dir + "/noise.csv");
    rgc::write_noise_json(rows, g.out_dir + "/noise.json");
    std::cout << "wrote " << g.out_dir << "/noise.csv\n";
    std::cout << "wrote " << g.out_dir << "/noise.json\n";
  });

  // bench
  auto* be = app.add_subcommand("bench", "Per-sample inference latency");
  be->fallthrough();
  std::vector<std::string> bench_ckpts;
  std::string bench_dataset;
  std::vector<std::string> bench_splits = {"test", "train"};
  int64_t bench_batch = 256;
  int64_t bench_limit = 0;
  be->add_option("--checkpoint", bench_ckpts, "Checkpoint(s)")->required();
  be->add_option("--dataset", bench_dataset, "Dataset .rgcd")->required();
  be->add_option("--splits", bench_splits, "Splits to time");
  be->add_option("--batch-size", bench_batch,
                 "Batched timing in addition to batch 1");
  be->add_option("--limit", bench_limit, "Cap samples per split, 0 = all");
  be->callback([&] {
    const rgc::RecordingSet data = rgc::load_recording(bench_dataset);
    std::vector<rgc::BenchRow> rows;
    for (const std::string& ck : bench_ckpts) {
      LoadedModel lm = resolve_model(ck, "", data, 0);
      for (const std::string& split : bench_splits) {
        const rgc::Split s = rgc::split_from_string(split);
        rows.push_back(
            rgc::bench_inference(*lm.model, data, s, 1, bench_limit));
        if (bench_batch > 1) {
          rows.push_back(rgc::bench_inference(*lm.model, data, s, bench_batch,
                                              bench_limit));
        }
      }
    }
    std::filesystem::create_directories(g.out_dir);
    rgc::write_bench_csv(rows, g.out_dir + "/bench.csv");
    rgc::write_bench_json(rows, g.out_dir + "/bench.json");
    std::cout << "wrote " << g.out_dir << "/bench.csv\n";
    std::cout << "wrote " << g.out_dir << "/bench.json\n";
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "Random hyperparameter search");
  sw->fallthrough();
  std::string sweep_dataset;
  int64_t sweep_runs = 0;
  double sweep_seconds = 0.0;
  sw->add_option("--dataset", sweep_dataset, "Dataset .rgcd override");
  sw->add_option("--runs", sweep_runs, "Run-count budget");
  sw->add_option("--seconds", sweep_seconds, "Wall-clock budget");
  sw->callback([&] {
    rgc::SweepSpec spec;
    if (!g.config.empty()) spec.base = rgc::load_train_config(g.config);
    if (!sweep_dataset.empty()) spec.base.dataset = sweep_dataset;
    if (g.seed_set) spec.seed = g.seed;
    spec.max_runs = sweep_runs;
    spec.max_seconds = sweep_seconds;
    if (spec.base.dataset.empty()) {
      throw std::runtime_error("no dataset: set `dataset` or --dataset");
    }
    const rgc::RecordingSet data = rgc::load_recording(spec.base.dataset);
    const rgc::SweepResult res = rgc::run_sweep(spec, data, g.out_dir);
    std::cout << "wrote " << res.table_path << "\n";
    std::cout << "wrote " << res.best_config_path << "\n";
    if (!res.rows.empty()) {
      std::cout << "best val rho " << res.rows.front().val_rho << " (run "
                << res.rows.front().run << ")\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

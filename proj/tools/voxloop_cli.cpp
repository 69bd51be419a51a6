// voxloop command line: dataset synthesis, pipeline runs, offline evaluation
// and the loop-detection benchmark.
//
// Exit codes: 0 success, 2 config error, 3 dataset error, 4 pipeline abort.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

#include "voxloop/engine.hpp"
#include "voxloop/synth.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;
constexpr int kExitPipeline = 4;

int cmd_synth(const std::string& spec_path, const std::string& out_dir, int threads) {
  voxloop::SequenceSpec spec;
  try {
    spec = voxloop::parse_sequence_spec(voxloop::Config::parse_file(spec_path));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "synth: %s\n", e.what());
    return kExitConfig;
  }
  try {
    voxloop::generate_sequence(spec, out_dir, threads);
    const voxloop::DatasetManifest m = voxloop::read_manifest(out_dir);
    std::printf("dataset written to %s\n", out_dir.c_str());
    std::printf("frames=%d %dx%d classes=%d fx=%.1f\n", m.frame_count, m.width, m.height,
                m.num_classes, m.fx);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "synth: %s\n", e.what());
    return kExitDataset;
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& dataset_override,
            const std::string& out_override, int threads_override) {
  voxloop::RunConfig cfg;
  try {
    cfg = voxloop::RunConfig::from_config(voxloop::Config::parse_file(config_path));
    if (!dataset_override.empty()) cfg.dataset_dir = dataset_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (threads_override > 0) cfg.threads = threads_override;
    if (cfg.dataset_dir.empty()) throw voxloop::ConfigError("dataset.dir is required");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run: %s\n", e.what());
    return kExitConfig;
  }
  if (!std::filesystem::exists(cfg.dataset_dir + "/manifest.txt")) {
    std::fprintf(stderr, "run: dataset not found at %s\n", cfg.dataset_dir.c_str());
    return kExitDataset;
  }
  try {
    const voxloop::RunResult result = voxloop::run_pipeline(cfg);
    std::printf("frames=%d loops_closed=%d place_frames=%zu covisible=%zu\n", result.frames,
                result.loops_closed, result.kset.place.size(), result.kset.covisible.size());
    if (result.ate_vs_gt >= 0) {
      std::printf("ate_rmse=%.4f m", result.ate_vs_gt);
      if (result.ate_odometry >= 0) std::printf(" (odometry baseline %.4f m)", result.ate_odometry);
      std::printf("\n");
    }
    std::printf("artifacts in %s\n", cfg.out_dir.c_str());
  } catch (const voxloop::DatasetError& e) {
    std::fprintf(stderr, "run: %s\n", e.what());
    return kExitDataset;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run: pipeline aborted: %s\n", e.what());
    return kExitPipeline;
  }
  return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& dataset_dir) {
  voxloop::EvalConfig cfg;
  cfg.run_dir = run_dir;
  cfg.dataset_dir = dataset_dir;
  try {
    const voxloop::MetricsReport report = voxloop::evaluate_run(cfg);
    std::printf("ate_rmse=%.4f m\n", report.ate_rmse_m);
    std::printf("loop precision=%.3f recall@1=%.3f f1=%.3f (raw: %.3f/%.3f/%.3f)\n",
                report.loop.precision, report.loop.recall_at_1, report.loop.f1,
                report.loop.raw_precision, report.loop.raw_recall, report.loop.raw_f1);
    if (report.has_recon) {
      std::printf("recon acc=%.2f cm comp=%.2f cm comp_ratio=%.2f%%\n", report.recon.acc_cm,
                  report.recon.comp_cm, report.recon.comp_ratio_pct);
    }
    if (report.has_miou) std::printf("miou=%.4f\n", report.miou_value);
    std::printf("report + plots in %s\n", run_dir.c_str());
  } catch (const voxloop::DatasetError& e) {
    std::fprintf(stderr, "eval: %s\n", e.what());
    return kExitDataset;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "eval: %s\n", e.what());
    return kExitPipeline;
  }
  return 0;
}

int cmd_loopbench(const std::string& out_csv, int places, int queries, int m_samples, int k,
                  int seeds) {
  voxloop::LoopbenchConfig cfg;
  cfg.num_places = places;
  cfg.queries_per_place = queries;
  cfg.samples_per_frame = m_samples;
  cfg.codebook_k = k;
  cfg.seeds.clear();
  for (int s = 1; s <= seeds; ++s) cfg.seeds.push_back(static_cast<uint64_t>(s));
  try {
    const auto rows = voxloop::run_loopbench(cfg);
    voxloop::write_loopbench_csv(out_csv, rows);
    std::printf("%-10s %6s %10s %10s %10s\n", "mode", "seed", "precision", "recall@1", "f1");
    for (const auto& r : rows) {
      std::printf("%-10s %6llu %10.3f %10.3f %10.3f\n", r.mode.c_str(),
                  static_cast<unsigned long long>(r.seed), r.precision, r.recall, r.f1);
    }
    std::printf("rows written to %s\n", out_csv.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "loopbench: %s\n", e.what());
    return kExitPipeline;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voxloop: latent-code voxel SLAM with semantic loop closure"};
  app.require_subcommand(1);

  std::string spec_path, out_dir = "dataset_out";
  int threads = 1;
  auto* synth = app.add_subcommand("synth", "generate a synthetic RGB-D-semantic dataset");
  synth->add_option("spec", spec_path, "scene spec file")->required();
  synth->add_option("--out", out_dir, "output dataset directory");
  synth->add_option("--threads", threads, "render threads");

  std::string run_config, run_dataset, run_out;
  int run_threads = 0;
  auto* run = app.add_subcommand("run", "run the full pipeline on a dataset");
  run->add_option("config", run_config, "run config file")->required();
  run->add_option("--dataset", run_dataset, "override dataset.dir");
  run->add_option("--out", run_out, "override output directory");
  run->add_option("--threads", run_threads, "bound internal parallelism");

  std::string eval_run, eval_dataset;
  auto* eval = app.add_subcommand("eval", "evaluate a finished run against ground truth");
  eval->add_option("--run", eval_run, "run output directory")->required();
  eval->add_option("--dataset", eval_dataset, "dataset directory")->required();

  std::string bench_csv = "loopbench.csv";
  int bench_places = 10, bench_queries = 3, bench_m = 64, bench_k = 8, bench_seeds = 5;
  auto* bench = app.add_subcommand("loopbench", "detection-only benchmark, semantic vs random");
  bench->add_option("--out", bench_csv, "output csv");
  bench->add_option("--places", bench_places, "number of place frames");
  bench->add_option("--queries", bench_queries, "queries per place");
  bench->add_option("--samples", bench_m, "samples per frame (M)");
  bench->add_option("--centroids", bench_k, "codebook size (K)");
  bench->add_option("--seeds", bench_seeds, "number of sampling seeds");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) return cmd_synth(spec_path, out_dir, threads);
  if (run->parsed()) return cmd_run(run_config, run_dataset, run_out, run_threads);
  if (eval->parsed()) return cmd_eval(eval_run, eval_dataset);
  if (bench->parsed()) return cmd_loopbench(bench_csv, bench_places, bench_queries, bench_m,
                                            bench_k, bench_seeds);
  return 0;
}

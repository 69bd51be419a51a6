#include "voxloop/engine.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "voxloop/svg.hpp"
#include "voxloop/synth.hpp"

namespace voxloop {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  return x;
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct EventLog {
  std::FILE* f = nullptr;
  explicit EventLog(const std::string& path) { f = std::fopen(path.c_str(), "w"); }
  ~EventLog() {
    if (f) std::fclose(f);
  }
  void emit(const char* stage, int frame_id, double wall_ms) {
    if (!f) return;
    std::fprintf(f, "{\"stage\":\"%s\",\"frame_id\":%d,\"wall_ms\":%.3f}\n", stage, frame_id,
                 wall_ms);
  }
};

}  // namespace

RunConfig RunConfig::from_config(const Config& c) {
  RunConfig r;
  r.dataset_dir = c.get_string("dataset.dir", "");
  r.out_dir = c.get_string("dataset.out", "run_out");

  r.hierarchy.tau_place = c.get_double("thresholds.tau_place", 0.3);
  r.hierarchy.tau_covis = c.get_double("thresholds.tau_covis", 0.45);
  r.hierarchy.overlap_radius = c.get_double("thresholds.overlap_radius", 0.1);
  r.hierarchy.downsample_voxel = c.get_double("thresholds.downsample_voxel", 0.05);
  r.theta_geo = c.get_double("thresholds.theta_geo", 0.5);
  r.theta_sem = c.get_double("thresholds.theta_sem", 0.6);

  const std::string mode = c.get_string("sampling.mode", "semantic");
  if (mode == "semantic") r.sampling = SamplingMode::Semantic;
  else if (mode == "random") r.sampling = SamplingMode::Random;
  else throw ConfigError("sampling.mode must be semantic or random, got " + mode);
  r.samples_per_frame = c.get_int("sampling.m", 256);
  r.codebook_k = c.get_int("sampling.k", 16);
  r.min_place_frames = c.get_int("sampling.min_place_frames", 3);
  r.recent_exclusion_frames = c.get_int("sampling.recent_exclusion_frames", 50);

  r.field.grid.levels = c.get_int("map.levels", 2);
  r.field.grid.code_dim = c.get_int("map.code_dim", 8);
  r.field.grid.voxel_sizes = {c.get_double("map.voxel_coarse", 0.10),
                              c.get_double("map.voxel_fine", 0.05)};
  if (r.field.grid.levels != 2) {
    r.field.grid.voxel_sizes.resize(static_cast<size_t>(r.field.grid.levels),
                                    r.field.grid.voxel_sizes.back());
  }
  r.field.grid.hash_capacity = c.get_int("map.hash_capacity", 1 << 17);
  r.field.encoding.bins_per_axis = c.get_int("map.encoding_bins", 16);
  r.field.encoding.bounds_min =
      Eigen::Vector3d(c.get_double("map.bounds_min_x", -5.0), c.get_double("map.bounds_min_y", -5.0),
                      c.get_double("map.bounds_min_z", -5.0));
  r.field.encoding.bounds_max =
      Eigen::Vector3d(c.get_double("map.bounds_max_x", 5.0), c.get_double("map.bounds_max_y", 5.0),
                      c.get_double("map.bounds_max_z", 5.0));
  r.field.hidden = c.get_int("map.hidden", 32);
  r.truncation_factor = c.get_double("map.truncation_factor", 5.0);
  r.field.truncation = r.truncation_factor * r.field.grid.voxel_sizes.back();
  r.field.seed = c.get_u64("run.seed", 1);

  r.weights.rgb = c.get_double("loss.lambda_rgb", 5.0);
  r.weights.depth = c.get_double("loss.lambda_d", 1.0);
  r.weights.sdf = c.get_double("loss.lambda_sdf", 200.0);
  r.weights.fs = c.get_double("loss.lambda_fs", 2.0);
  r.weights.sem = c.get_double("loss.lambda_sem", 10.0);
  r.weights.smooth = c.get_double("loss.lambda_smooth", 0.01);

  r.optimizer.lr_codes = c.get_double("optim.lr_codes", 0.05);
  r.optimizer.lr_decoder = c.get_double("optim.lr_decoder", 0.01);
  r.optimizer.lr_sem = c.get_double("optim.lr_sem", 0.05);
  r.optimizer.momentum = c.get_double("optim.momentum", 0.9);
  r.optimizer.batch_rays = c.get_int("optim.batch_rays", 1024);
  r.optimizer.sampling.near_samples = c.get_int("optim.near_samples", 6);
  r.optimizer.sampling.free_samples = c.get_int("optim.free_samples", 3);
  r.map_iters_per_keyframe = c.get_int("optim.map_iters_per_keyframe", 10);

  const std::string tracking = c.get_string("tracking.mode", "odometry");
  if (tracking == "odometry") r.tracking = TrackingMode::Odometry;
  else if (tracking == "sdf") r.tracking = TrackingMode::Sdf;
  else throw ConfigError("tracking.mode must be odometry or sdf, got " + tracking);

  r.loop_closure = c.get_bool("loop.enabled", true);
  r.closing.ba_iters = c.get_int("loop.ba_iters", 10);
  r.closing.ba_pose_lr = c.get_double("loop.ba_pose_lr", 1e-4);
  r.closing.ba_batch_rays = c.get_int("loop.ba_batch_rays", 1024);
  r.closing.odom_edge_weight = c.get_double("loop.odom_edge_weight", 1.0);
  r.closing.loop_edge_weight = c.get_double("loop.loop_edge_weight", 2.0);
  r.icp.max_corr_dist = c.get_double("loop.icp_max_corr_dist", 0.2);
  r.icp.max_iterations = c.get_int("loop.icp_max_iterations", 30);

  r.seed = c.get_u64("run.seed", 1);
  r.threads = c.get_int("run.threads", 1);
  return r;
}

Config RunConfig::to_config() const {
  Config c;
  c.set("dataset.dir", dataset_dir);
  c.set("dataset.out", out_dir);
  c.set_double("thresholds.tau_place", hierarchy.tau_place);
  c.set_double("thresholds.tau_covis", hierarchy.tau_covis);
  c.set_double("thresholds.overlap_radius", hierarchy.overlap_radius);
  c.set_double("thresholds.downsample_voxel", hierarchy.downsample_voxel);
  c.set_double("thresholds.theta_geo", theta_geo);
  c.set_double("thresholds.theta_sem", theta_sem);
  c.set("sampling.mode", sampling == SamplingMode::Semantic ? "semantic" : "random");
  c.set_int("sampling.m", samples_per_frame);
  c.set_int("sampling.k", codebook_k);
  c.set_int("sampling.min_place_frames", min_place_frames);
  c.set_int("sampling.recent_exclusion_frames", recent_exclusion_frames);
  c.set_int("map.levels", field.grid.levels);
  c.set_int("map.code_dim", field.grid.code_dim);
  c.set_double("map.voxel_coarse", field.grid.voxel_sizes.front());
  c.set_double("map.voxel_fine", field.grid.voxel_sizes.back());
  c.set_int("map.hash_capacity", field.grid.hash_capacity);
  c.set_int("map.encoding_bins", field.encoding.bins_per_axis);
  c.set_double("map.bounds_min_x", field.encoding.bounds_min.x());
  c.set_double("map.bounds_min_y", field.encoding.bounds_min.y());
  c.set_double("map.bounds_min_z", field.encoding.bounds_min.z());
  c.set_double("map.bounds_max_x", field.encoding.bounds_max.x());
  c.set_double("map.bounds_max_y", field.encoding.bounds_max.y());
  c.set_double("map.bounds_max_z", field.encoding.bounds_max.z());
  c.set_int("map.hidden", field.hidden);
  c.set_int("map.sem_layers", 4);
  c.set_int("map.sem_hidden", 32);
  c.set_double("map.truncation_factor", truncation_factor);
  c.set_double("loss.lambda_rgb", weights.rgb);
  c.set_double("loss.lambda_d", weights.depth);
  c.set_double("loss.lambda_sdf", weights.sdf);
  c.set_double("loss.lambda_fs", weights.fs);
  c.set_double("loss.lambda_sem", weights.sem);
  c.set_double("loss.lambda_smooth", weights.smooth);
  c.set_double("optim.lr_codes", optimizer.lr_codes);
  c.set_double("optim.lr_decoder", optimizer.lr_decoder);
  c.set_double("optim.lr_sem", optimizer.lr_sem);
  c.set_double("optim.momentum", optimizer.momentum);
  c.set_int("optim.batch_rays", optimizer.batch_rays);
  c.set_int("optim.near_samples", optimizer.sampling.near_samples);
  c.set_int("optim.free_samples", optimizer.sampling.free_samples);
  c.set_int("optim.map_iters_per_keyframe", map_iters_per_keyframe);
  c.set("tracking.mode", tracking == TrackingMode::Odometry ? "odometry" : "sdf");
  c.set_bool("loop.enabled", loop_closure);
  c.set_int("loop.ba_iters", closing.ba_iters);
  c.set_double("loop.ba_pose_lr", closing.ba_pose_lr);
  c.set_int("loop.ba_batch_rays", closing.ba_batch_rays);
  c.set_double("loop.odom_edge_weight", closing.odom_edge_weight);
  c.set_double("loop.loop_edge_weight", closing.loop_edge_weight);
  c.set_double("loop.icp_max_corr_dist", icp.max_corr_dist);
  c.set_int("loop.icp_max_iterations", icp.max_iterations);
  c.set_int("run.seed", static_cast<long long>(seed));
  c.set_int("run.threads", threads);
  return c;
}

namespace {

SampleSet sample_frame(const Frame& frame, const SceneField& field, const RunConfig& cfg,
                       uint64_t seed) {
  if (cfg.sampling == SamplingMode::Semantic) {
    return stratified_sample(frame, field, cfg.samples_per_frame, seed);
  }
  return random_sample(frame, field, cfg.samples_per_frame, seed);
}

}  // namespace

RunResult run_pipeline(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const DatasetManifest manifest = read_manifest(cfg.dataset_dir);
  fs::create_directories(cfg.out_dir);

  RunConfig effective = cfg;
  effective.field.classes = manifest.num_classes;  // dataset property, not hard-coded
  {
    std::ofstream out(cfg.out_dir + "/effective_config.txt");
    Config dump = effective.to_config();
    dump.set_int("map.classes", manifest.num_classes);
    out << dump.dump();
  }

  Trajectory odom_traj;
  const std::string odom_path = cfg.dataset_dir + "/odom_traj.txt";
  if (fs::exists(odom_path)) odom_traj = read_tum_trajectory(odom_path);
  if (cfg.tracking == TrackingMode::Odometry &&
      static_cast<int>(odom_traj.size()) < manifest.frame_count) {
    throw DatasetError("tracking.mode=odometry requires odom_traj.txt covering every frame");
  }

  SceneField field(effective.field);
  MapOptimizer optimizer(field, effective.optimizer);
  std::mt19937_64 map_rng(mix_seed(cfg.seed, 0xA11));

  EventLog events(cfg.out_dir + "/events.jsonl");

  RunResult result;
  result.frames = manifest.frame_count;
  std::vector<Pose> est(static_cast<size_t>(manifest.frame_count));
  std::map<int, Frame> keyframes;
  KeyframeSet kset;
  Codebook codebook;
  std::vector<int> graph_dumps;
  bool map_ready = false;

  CloseLoopConfig closing = effective.closing;
  closing.weights = effective.weights;
  closing.ba_sampling = effective.optimizer.sampling;

  for (int id = 0; id < manifest.frame_count; ++id) {
    const double t_frame = now_ms();
    Frame frame = load_frame(cfg.dataset_dir, manifest, id);

    // pose propagation
    {
      const double t0 = now_ms();
      Pose pose;
      if (id == 0) {
        pose = odom_traj.empty() ? Pose::identity() : odom_traj[0].pose;
      } else if (cfg.tracking == TrackingMode::Odometry) {
        const Pose delta = between(odom_traj[static_cast<size_t>(id - 1)].pose,
                                   odom_traj[static_cast<size_t>(id)].pose);
        pose = compose(est[static_cast<size_t>(id - 1)], delta);
      } else {
        Pose init = est[static_cast<size_t>(id - 1)];
        if (id >= 2) {
          init = compose(init, between(est[static_cast<size_t>(id - 2)],
                                       est[static_cast<size_t>(id - 1)]));
        }
        if (map_ready) {
          const TrackResult tracked = track(frame, field, init, cfg.tracking_cfg);
          pose = tracked.status == TrackStatus::Ok ? tracked.pose : init;
        } else {
          pose = init;
        }
      }
      est[static_cast<size_t>(id)] = pose;
      frame.pose = pose;
      events.emit("track", id, now_ms() - t0);
    }

    if (!maybe_keyframe(id)) continue;

    frame.roles.keyframe = true;
    keyframes.emplace(id, frame);
    Frame& kf = keyframes.at(id);

    {
      const double t0 = now_ms();
      update_hierarchy(kf, kset, [&](int fid) { return est[static_cast<size_t>(fid)]; },
                       cfg.hierarchy);
      events.emit("hierarchy", id, now_ms() - t0);
    }

    {
      const double t0 = now_ms();
      std::vector<const Frame*> ptrs;
      for (const auto& [kid, f] : keyframes) ptrs.push_back(&f);
      optimize_map(field, optimizer, ptrs, cfg.map_iters_per_keyframe, effective.weights,
                   map_rng);
      map_ready = true;
      events.emit("map", id, now_ms() - t0);
    }

    if (!cfg.loop_closure) continue;

    // train the codebook once enough place frames exist
    if (!codebook.trained && static_cast<int>(kset.place.size()) >= cfg.min_place_frames) {
      std::vector<Eigen::MatrixXd> blocks;
      Eigen::Index total = 0;
      for (int pid : kset.place) {
        const SampleSet s =
            sample_frame(keyframes.at(pid), field, cfg, mix_seed(cfg.seed, static_cast<uint64_t>(pid)));
        if (!s.empty()) {
          blocks.push_back(s.codes);
          total += s.codes.cols();
        }
      }
      if (total >= cfg.codebook_k) {
        Eigen::MatrixXd all(field.grid().latent_dim(), total);
        Eigen::Index at = 0;
        for (const auto& b : blocks) {
          all.middleCols(at, b.cols()) = b;
          at += b.cols();
        }
        codebook = train_codebook(all, cfg.codebook_k, mix_seed(cfg.seed, 0xC0DE));
      }
    }
    if (!codebook.trained) continue;

    // loop detection against sufficiently old place frames
    std::vector<int> eligible;
    for (int pid : kset.place) {
      if (id - pid >= cfg.recent_exclusion_frames) eligible.push_back(pid);
    }
    if (eligible.empty()) continue;

    const double t_detect = now_ms();
    std::vector<std::pair<int, Eigen::VectorXd>> db;
    for (int pid : eligible) {
      const SampleSet s =
          sample_frame(keyframes.at(pid), field, cfg, mix_seed(cfg.seed, static_cast<uint64_t>(pid)));
      db.emplace_back(pid, aggregate_vlad(s, codebook));
    }
    const SampleSet query_set =
        sample_frame(kf, field, cfg, mix_seed(cfg.seed, static_cast<uint64_t>(id)));
    const Eigen::VectorXd query_desc = aggregate_vlad(query_set, codebook);
    const RetrievalResult retrieved = retrieve(query_desc, db);
    events.emit("detect", id, now_ms() - t_detect);

    // ICP between the query keyframe cloud and the matched place cloud
    const double t_icp = now_ms();
    const PointCloud query_cloud = voxel_downsample(
        back_project_cloud(kf, cfg.hierarchy.cloud_stride), cfg.hierarchy.downsample_voxel);
    const PointCloud& place_cloud = kset.place_clouds.at(retrieved.place_id);

    LoopCandidate cand;
    cand.query_id = id;
    cand.place_id = retrieved.place_id;
    cand.similarity = retrieved.similarity;

    bool icp_ok = false;
    if (query_cloud.size() >= 100 && place_cloud.size() >= 100) {
      const Pose init = between(est[static_cast<size_t>(retrieved.place_id)],
                                est[static_cast<size_t>(id)]);
      const IcpResult icp = icp_point_to_plane(query_cloud, place_cloud, init, cfg.icp);
      cand.relative = icp.relative;
      icp_ok = icp.status == IcpStatus::Ok;
    }
    events.emit("icp", id, now_ms() - t_icp);

    const ValidationResult valid = validate_candidate(
        query_cloud, place_cloud, cand.relative, cfg.theta_geo, cfg.theta_sem,
        cfg.hierarchy.overlap_radius);
    cand.geo_overlap = valid.geo_overlap;
    cand.sem_agreement = valid.sem_agreement;
    const bool accepted = icp_ok && valid.accepted;
    result.loop_log.push_back({id, cand.place_id, cand.similarity, cand.geo_overlap,
                               cand.sem_agreement, accepted});

    if (accepted) {
      const double t_close = now_ms();
      std::mt19937_64 ba_rng(mix_seed(cfg.seed, 0xBA00 + static_cast<uint64_t>(id)));
      const CloseLoopReport closed =
          close_loop(cand, kset, keyframes, est, field, optimizer, closing, ba_rng);
      if (closed.applied) {
        ++result.loops_closed;
        save_g2o(cfg.out_dir + "/pose_graph_" + std::to_string(id) + ".g2o",
                 closed.final_graph);
        graph_dumps.push_back(id);
      }
      events.emit("close", id, now_ms() - t_close);
    }
    events.emit("frame", id, now_ms() - t_frame);
  }

  // artifacts
  for (int id = 0; id < manifest.frame_count; ++id) {
    result.estimated.push_back({static_cast<double>(id), est[static_cast<size_t>(id)]});
  }
  write_tum_trajectory(cfg.out_dir + "/traj_est.txt", result.estimated);
  write_loop_log_csv(cfg.out_dir + "/loop_log.csv", result.loop_log);
  save_checkpoint(cfg.out_dir + "/checkpoint.bin", field);
  result.kset = kset;

  {
    std::vector<std::pair<int, Eigen::VectorXd>> final_db;
    if (codebook.trained) {
      for (int pid : kset.place) {
        const SampleSet s = sample_frame(keyframes.at(pid), field, cfg,
                                         mix_seed(cfg.seed, static_cast<uint64_t>(pid)));
        final_db.emplace_back(pid, aggregate_vlad(s, codebook));
      }
    }
    write_descriptor_db_csv(cfg.out_dir + "/descriptors.csv", final_db);
  }

  // metrics against bundled ground truth, when present
  const std::string gt_path = cfg.dataset_dir + "/gt_traj.txt";
  if (fs::exists(gt_path)) {
    const Trajectory gt = read_tum_trajectory(gt_path);
    if (gt.size() == result.estimated.size()) {
      result.ate_vs_gt = ate_rmse(poses_of(result.estimated), poses_of(gt));
      if (!odom_traj.empty() && odom_traj.size() == gt.size()) {
        result.ate_odometry = ate_rmse(poses_of(odom_traj), poses_of(gt));
      }
      result.report.ate_rmse_m = result.ate_vs_gt;

      std::map<int, Pose> gt_poses;
      for (const auto& tp : gt) gt_poses[static_cast<int>(tp.timestamp)] = tp.pose;
      std::vector<int> query_ids;
      for (const auto& e : result.loop_log) query_ids.push_back(e.query_id);
      const LoopGroundTruth loop_gt =
          build_loop_ground_truth(query_ids, kset.place, gt_poses);
      if (!result.loop_log.empty()) {
        result.report.loop = loop_metrics(result.loop_log, loop_gt);
      }
    }
    write_metrics_csv(cfg.out_dir + "/metrics.csv", result.report);
    write_metrics_txt(cfg.out_dir + "/metrics.txt", result.report);
  }
  return result;
}

// --- loopbench ------------------------------------------------------------------

std::vector<LoopbenchRow> run_loopbench(const LoopbenchConfig& cfg) {
  const Scene scene = marker_wall(cfg.num_places);

  // place poses along the wall, queries jittered around them
  std::vector<Pose> place_poses, query_poses;
  std::vector<int> place_ids, query_ids;
  std::map<int, Pose> gt_poses;
  for (int i = 0; i < cfg.num_places; ++i) {
    const double y = -6.0 + 12.0 * i / std::max(1, cfg.num_places - 1);
    const Pose pose = look_at({0.6, y, 1.4}, {3.0, y, 1.4});
    place_poses.push_back(pose);
    place_ids.push_back(i);
    gt_poses[i] = pose;
  }
  std::mt19937_64 jitter_rng(mix_seed(cfg.map_seed, 0x9E1));
  std::normal_distribution<double> gauss(0.0, 1.0);
  int qid = 1000;
  for (int i = 0; i < cfg.num_places; ++i) {
    for (int qk = 0; qk < cfg.queries_per_place; ++qk) {
      Twist nudge;
      nudge.v = Eigen::Vector3d(gauss(jitter_rng), gauss(jitter_rng), 0.3 * gauss(jitter_rng));
      nudge.v *= 0.25;
      nudge.omega = 0.08 * Eigen::Vector3d(gauss(jitter_rng), gauss(jitter_rng), gauss(jitter_rng));
      query_poses.push_back(compose(exp_map(nudge), place_poses[static_cast<size_t>(i)]));
      query_ids.push_back(qid);
      gt_poses[qid] = query_poses.back();
      ++qid;
    }
  }

  // shared map trained on the place frames at ground-truth poses
  SceneFieldConfig fcfg;
  fcfg.grid.voxel_sizes = {0.10, 0.05};
  fcfg.encoding.bounds_min = scene.bounds_min - Eigen::Vector3d::Constant(0.5);
  fcfg.encoding.bounds_max = scene.bounds_max + Eigen::Vector3d::Constant(0.5);
  fcfg.classes = scene.num_classes;
  fcfg.truncation = 0.25;
  fcfg.seed = cfg.map_seed;
  SceneField field(fcfg);

  std::vector<Frame> place_frames, query_frames;
  for (int i = 0; i < cfg.num_places; ++i) {
    Frame f = render_frame(scene, place_poses[static_cast<size_t>(i)], cfg.intr);
    f.id = place_ids[static_cast<size_t>(i)];
    place_frames.push_back(std::move(f));
  }
  for (size_t i = 0; i < query_poses.size(); ++i) {
    Frame f = render_frame(scene, query_poses[i], cfg.intr);
    f.id = query_ids[i];
    query_frames.push_back(std::move(f));
  }

  {
    OptimizerConfig ocfg;
    ocfg.batch_rays = 512;
    MapOptimizer opt(field, ocfg);
    std::vector<const Frame*> ptrs;
    for (const auto& f : place_frames) ptrs.push_back(&f);
    std::mt19937_64 rng(mix_seed(cfg.map_seed, 0x3AB));
    optimize_map(field, opt, ptrs, cfg.map_iters, LossWeights{}, rng);
  }

  // shared codebook from stratified samples of the place frames
  Codebook codebook;
  {
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::Index total = 0;
    for (const auto& f : place_frames) {
      const SampleSet s = stratified_sample(f, field, cfg.samples_per_frame,
                                            mix_seed(cfg.map_seed, static_cast<uint64_t>(f.id)));
      blocks.push_back(s.codes);
      total += s.codes.cols();
    }
    Eigen::MatrixXd all(field.grid().latent_dim(), total);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
      all.middleCols(at, b.cols()) = b;
      at += b.cols();
    }
    codebook = train_codebook(all, cfg.codebook_k, mix_seed(cfg.map_seed, 0xC0DE));
  }

  const LoopGroundTruth gt = build_loop_ground_truth(query_ids, place_ids, gt_poses);

  std::vector<LoopbenchRow> rows;
  for (const std::string mode : {"semantic", "random"}) {
    for (uint64_t seed : cfg.seeds) {
      auto sample = [&](const Frame& f) {
        const uint64_t s = mix_seed(seed, static_cast<uint64_t>(f.id));
        return mode == "semantic" ? stratified_sample(f, field, cfg.samples_per_frame, s)
                                  : random_sample(f, field, cfg.samples_per_frame, s);
      };
      std::vector<std::pair<int, Eigen::VectorXd>> db;
      for (const auto& f : place_frames) db.emplace_back(f.id, aggregate_vlad(sample(f), codebook));

      std::vector<LoopLogEntry> log;
      for (const auto& f : query_frames) {
        const RetrievalResult r = retrieve(aggregate_vlad(sample(f), codebook), db);
        log.push_back({f.id, r.place_id, r.similarity, 0.0, 0.0, true});
      }
      const LoopMetrics m = loop_metrics(log, gt);
      rows.push_back({mode, seed, m.raw_precision, m.raw_recall, m.raw_f1});
    }
  }
  return rows;
}

void write_loopbench_csv(const std::string& path, const std::vector<LoopbenchRow>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write loopbench csv: " + path);
  std::fprintf(f, "mode,seed,precision,recall_at_1,f1\n");
  for (const auto& r : rows) {
    std::fprintf(f, "%s,%llu,%.6f,%.6f,%.6f\n", r.mode.c_str(),
                 static_cast<unsigned long long>(r.seed), r.precision, r.recall, r.f1);
  }
  std::fclose(f);
}

// --- offline evaluation -----------------------------------------------------------

MetricsReport evaluate_run(const EvalConfig& cfg) {
  namespace fs = std::filesystem;
  std::vector<std::string> missing;
  for (const char* name : {"traj_est.txt", "loop_log.csv", "checkpoint.bin"}) {
    if (!fs::exists(cfg.run_dir + "/" + name)) missing.push_back(name);
  }
  if (!fs::exists(cfg.dataset_dir + "/gt_traj.txt")) missing.push_back("gt_traj.txt (dataset)");
  if (!missing.empty()) {
    std::string what = "missing run artifacts:";
    for (const auto& m : missing) what += " " + m;
    throw DatasetError(what);
  }

  const DatasetManifest manifest = read_manifest(cfg.dataset_dir);
  const Trajectory est = read_tum_trajectory(cfg.run_dir + "/traj_est.txt");
  const Trajectory gt = read_tum_trajectory(cfg.dataset_dir + "/gt_traj.txt");
  if (est.size() != gt.size()) {
    throw DatasetError("estimated and ground-truth trajectories differ in length");
  }

  MetricsReport report;
  report.ate_rmse_m = ate_rmse(poses_of(est), poses_of(gt));

  // loop metrics from the log, ground truth from poses
  const std::vector<LoopLogEntry> log = read_loop_log_csv(cfg.run_dir + "/loop_log.csv");
  std::map<int, Pose> gt_poses;
  for (const auto& tp : gt) gt_poses[static_cast<int>(tp.timestamp)] = tp.pose;
  std::set<int> place_set;
  for (const auto& e : log) place_set.insert(e.place_id);
  if (!log.empty()) {
    std::vector<int> query_ids, place_ids(place_set.begin(), place_set.end());
    for (const auto& e : log) query_ids.push_back(e.query_id);
    report.loop = loop_metrics(log, build_loop_ground_truth(query_ids, place_ids, gt_poses));
  }

  // reconstruction: extracted zero-crossing cloud vs back-projected gt depth,
  // both restricted to the union of ground-truth frustums
  SceneField field = load_checkpoint(cfg.run_dir + "/checkpoint.bin");
  {
    PointCloud gt_cloud;
    std::vector<Pose> gt_pose_list;
    for (int id = 0; id < manifest.frame_count; id += cfg.recon_gt_stride) {
      const Frame f = load_frame(cfg.dataset_dir, manifest, id);
      const Pose& pose = gt[static_cast<size_t>(id)].pose;
      gt_pose_list.push_back(pose);
      const PointCloud cam = back_project_cloud(f, 2);
      const PointCloud world = transform_cloud(pose, cam);
      gt_cloud.points.insert(gt_cloud.points.end(), world.points.begin(), world.points.end());
    }
    gt_cloud = voxel_downsample(gt_cloud, 0.02);

    PointCloud predicted =
        extract_cloud(field, field.config().encoding.bounds_min,
                      field.config().encoding.bounds_max, cfg.recon_step);
    predicted = filter_to_frustums(predicted, gt_pose_list, manifest.intrinsics(), 0.05,
                                   cfg.frustum_max_depth);
    if (!predicted.empty() && !gt_cloud.empty()) {
      report.recon = recon_metrics(predicted, gt_cloud);
      report.has_recon = true;
    }
  }

  // mIoU of field-predicted semantics at estimated poses vs dataset masks
  {
    std::vector<uint8_t> pred, truth, valid;
    for (int id = 0; id < manifest.frame_count; id += cfg.miou_frame_stride) {
      const Frame f = load_frame(cfg.dataset_dir, manifest, id);
      const Pose& pose = est[static_cast<size_t>(id)].pose;
      for (int v = 0; v < f.intr.height; v += 2) {
        for (int u = 0; u < f.intr.width; u += 2) {
          const bool ok = f.valid_depth(u, v);
          valid.push_back(ok ? 1 : 0);
          truth.push_back(ok ? static_cast<uint8_t>(f.label_at(u, v)) : 0);
          if (!ok) {
            pred.push_back(0);
            continue;
          }
          const DecodeResult d = field.decode_at(pose * f.back_project(u, v));
          Eigen::Index best;
          d.logits.maxCoeff(&best);
          pred.push_back(static_cast<uint8_t>(best));
        }
      }
    }
    report.miou_value = miou(pred, truth, manifest.num_classes, valid);
    report.has_miou = true;
  }

  write_metrics_csv(cfg.run_dir + "/metrics.csv", report);
  write_metrics_txt(cfg.run_dir + "/metrics.txt", report);

  // SVG plots: top-view trajectories and the per-loop similarity curve
  {
    std::vector<SvgSeries> series;
    SvgSeries gt_s{"ground truth", "#2ca02c", {}};
    for (const auto& tp : gt) gt_s.points.emplace_back(tp.pose.translation.x(), tp.pose.translation.y());
    SvgSeries est_s{"estimated (after)", "#1f77b4", {}};
    for (const auto& tp : est) est_s.points.emplace_back(tp.pose.translation.x(), tp.pose.translation.y());
    series.push_back(gt_s);
    const std::string odom_path = cfg.dataset_dir + "/odom_traj.txt";
    if (fs::exists(odom_path)) {
      SvgSeries odom_s{"odometry (before)", "#d62728", {}};
      for (const auto& tp : read_tum_trajectory(odom_path)) {
        odom_s.points.emplace_back(tp.pose.translation.x(), tp.pose.translation.y());
      }
      series.push_back(odom_s);
    }
    series.push_back(est_s);
    write_svg_plot(cfg.run_dir + "/trajectory_topview.svg", "trajectory top view", series, 640,
                   640, true);

    SvgSeries sims{"top-1 similarity", "#1f77b4", {}};
    SvgSeries acc{"accepted", "#2ca02c", {}};
    for (const auto& e : log) {
      sims.points.emplace_back(static_cast<double>(e.query_id), e.similarity);
      if (e.accepted) acc.points.emplace_back(static_cast<double>(e.query_id), e.similarity);
    }
    write_svg_plot(cfg.run_dir + "/loop_similarity.svg", "loop candidate similarity",
                   {sims, acc}, 640, 400, false);
  }
  return report;
}

}  // namespace voxloop

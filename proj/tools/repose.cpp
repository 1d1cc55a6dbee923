#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "repose/errors.hpp"
#include "repose/fabrik.hpp"
#include "repose/heatmap.hpp"
#include "repose/metrics.hpp"
#include "repose/muscle.hpp"
#include "repose/pipeline.hpp"
#include "repose/records.hpp"
#include "repose/refiner.hpp"
#include "repose/synth.hpp"
#include "repose/tracker.hpp"
#include "repose/triangulation.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class LogLevel { Debug = 0, Info, Warn, Error };
LogLevel g_log_level = LogLevel::Info;

void log_at(LogLevel level, const std::string& msg) {
  if (level < g_log_level) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

LogLevel parse_log_level(const std::string& name) {
  if (name == "debug") return LogLevel::Debug;
  if (name == "info") return LogLevel::Info;
  if (name == "warn") return LogLevel::Warn;
  if (name == "error") return LogLevel::Error;
  throw repose::ConfigError("unknown log level: " + name);
}

struct GlobalOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool single_thread = false;
  std::string log_level = "info";
};

json load_config_or_empty(const GlobalOpts& g) {
  if (g.config_path.empty()) return json::object();
  return repose::load_json_file(g.config_path);
}

std::vector<repose::Pose3D> read_poses(const std::string& path) {
  std::vector<repose::Pose3D> out;
  for (const auto& rec : repose::read_pose_records(path))
    out.push_back(rec.pose);
  return out;
}

// ---- synth ----

struct SynthOpts {
  std::string out_dir = "synth_out";
  int cameras = 4;
  double radius = 3.0, height = 1.2, focal = 1000.0;
  int image_w = 1000, image_h = 1000;
  std::string motion = "walk";
  double seconds = 4.0, fps = 50.0, tempo = 0.5;
  double pixel_noise = 0.0, occlusion = 0.0;
  bool heatmaps = false;
  double sigma = 2.0, alpha = 100.0;
  std::string scenario;  // empty -> no detection stream
};

int run_synth(const GlobalOpts& g, const SynthOpts& o) {
  fs::create_directories(o.out_dir);
  repose::SynthScene scene;
  scene.cameras = repose::make_rig(o.cameras, o.radius, o.height, o.focal,
                                   o.image_w, o.image_h);
  scene.gt = repose::synth_motion(repose::Skeleton::human36m(), o.seconds,
                                  o.fps, repose::motion_kind_from_name(o.motion),
                                  o.tempo);
  scene.fps = o.fps;
  scene.noise.pixel_sigma = o.pixel_noise;
  scene.noise.heatmap_sigma = o.sigma;
  scene.noise.occlusion_prob = o.occlusion;
  scene.seed = g.seed;

  repose::save_json_file(o.out_dir + "/cameras.json",
                         repose::cameras_to_json(scene.cameras));
  {
    std::vector<json> lines;
    for (const auto& pose : scene.gt) {
      repose::PoseRecord rec;
      rec.pose = pose;
      lines.push_back(repose::pose_record_to_json(rec));
    }
    repose::write_jsonl(o.out_dir + "/gt.jsonl", lines);
  }

  const auto obs = repose::observe(scene);
  for (std::size_t c = 0; c < obs.per_camera.size(); ++c) {
    const std::string stem = o.out_dir + "/cam" + std::to_string(c);
    if (o.heatmaps) {
      repose::HeatmapStreamHeader header;
      header.width = o.image_w;
      header.height = o.image_h;
      repose::HeatmapStreamWriter writer(stem + ".rphm", header);
      for (const auto& pose : obs.per_camera[c])
        writer.write_frame(static_cast<std::uint64_t>(pose.frame_index),
                           repose::render_heatmaps(pose, o.image_w, o.image_h,
                                                   o.sigma, o.alpha));
    } else {
      std::vector<json> lines;
      for (const auto& pose : obs.per_camera[c]) {
        repose::KeypointRecord rec;
        rec.pose = pose;
        lines.push_back(repose::keypoint_record_to_json(rec));
      }
      repose::write_jsonl(stem + ".keypoints.jsonl", lines);
    }
  }

  // ready-to-run pipeline config pointing at the generated files
  {
    json cfg = {{"cameras", o.out_dir + "/cameras.json"},
                {"fps", o.fps},
                {"seed", g.seed},
                {"out_poses", o.out_dir + "/poses.jsonl"}};
    std::vector<std::string> inputs;
    for (std::size_t c = 0; c < obs.per_camera.size(); ++c)
      inputs.push_back(o.out_dir + "/cam" + std::to_string(c) +
                       (o.heatmaps ? ".rphm" : ".keypoints.jsonl"));
    cfg[o.heatmaps ? "heatmaps" : "keypoints"] = inputs;
    if (o.heatmaps) cfg["alpha"] = o.alpha;
    repose::save_json_file(o.out_dir + "/pipeline.json", cfg);
  }

  if (!o.scenario.empty()) {
    const auto frames = repose::synth_detections(
        scene, repose::scenario_from_name(o.scenario));
    const std::string patch_dir = o.out_dir + "/patches";
    fs::create_directories(patch_dir);
    std::vector<json> lines;
    for (const auto& frame : frames) {
      const std::string patch_path =
          patch_dir + "/f" + std::to_string(frame.frame_index) + ".bin";
      repose::write_patches(patch_path, frame.patches);
      repose::DetectionRecord rec;
      rec.frame_index = frame.frame_index;
      rec.camera_id = scene.cameras[0].id;
      rec.boxes = frame.boxes;
      rec.patches_path = patch_path;
      rec.subject_index = static_cast<long>(frame.subject_index);
      lines.push_back(repose::detection_record_to_json(rec));
    }
    repose::write_jsonl(o.out_dir + "/detections.jsonl", lines);
  }
  log_at(LogLevel::Info, "synth wrote " + std::to_string(scene.gt.size()) +
                             " frames to " + o.out_dir);
  return 0;
}

// ---- track ----

int run_track(const std::string& in_path, const std::string& out_path) {
  const auto records = repose::read_detection_records(in_path);
  repose::TrackState state;
  bool initialized = false;
  long correct = 0, scored = 0;
  std::vector<json> lines;
  for (const auto& rec : records) {
    std::vector<repose::Patch> patches;
    if (rec.patches_path) patches = repose::read_patches(*rec.patches_path);
    if (!initialized) {
      if (rec.boxes.empty()) continue;
      std::size_t start = rec.subject_index
                              ? static_cast<std::size_t>(*rec.subject_index)
                              : 0;
      state = repose::TrackState::init(
          rec.boxes[start], patches.empty() ? nullptr : &patches[start]);
      initialized = true;
      continue;
    }
    const auto result = repose::track_step(
        state, rec.boxes, patches.empty() ? nullptr : &patches);
    const char* decision =
        result.decision == repose::TrackDecision::Single
            ? "single"
            : (result.decision == repose::TrackDecision::IoUWin ? "iou"
                                                                : "color");
    json line = {{"frame", rec.frame_index},
                 {"cam", rec.camera_id},
                 {"index", result.index},
                 {"decision", decision},
                 {"box",
                  {{"x1", result.selected.x1},
                   {"y1", result.selected.y1},
                   {"x2", result.selected.x2},
                   {"y2", result.selected.y2},
                   {"score", result.selected.score}}}};
    if (rec.subject_index) {
      ++scored;
      const bool ok =
          result.index == static_cast<std::size_t>(*rec.subject_index);
      if (ok) ++correct;
      line["correct"] = ok;
    }
    lines.push_back(std::move(line));
  }
  repose::write_jsonl(out_path, lines);
  if (scored > 0)
    std::cout << "identity accuracy: " << correct << "/" << scored << " ("
              << (100.0 * correct / scored) << "%)\n";
  return 0;
}

// ---- triangulate ----

int run_triangulate(const std::string& cameras_path,
                    const std::vector<std::string>& keypoint_paths,
                    const std::string& out_path, double fps) {
  const auto cams =
      repose::cameras_from_json(repose::load_json_file(cameras_path));
  if (cams.size() < 2)
    throw repose::ConfigError("triangulation needs at least 2 cameras");
  if (keypoint_paths.size() != cams.size())
    throw repose::ConfigError("one keypoint file per camera is required");
  std::vector<std::vector<repose::KeypointRecord>> streams;
  for (const auto& path : keypoint_paths)
    streams.push_back(repose::read_keypoint_records(path));
  const std::size_t frames = streams[0].size();
  for (const auto& s : streams)
    if (s.size() != frames)
      throw repose::DataError("keypoint streams have unequal lengths");
  std::vector<json> lines;
  for (std::size_t f = 0; f < frames; ++f) {
    std::vector<repose::Pose2D> views;
    for (std::size_t c = 0; c < streams.size(); ++c) {
      repose::Pose2D pose = streams[c][f].pose;
      pose.camera_id = cams[c].id;
      views.push_back(pose);
    }
    auto tri = repose::triangulate_pose(cams, views);
    tri.pose.timestamp = fps > 0 ? tri.pose.frame_index / fps : 0.0;
    repose::PoseRecord rec;
    rec.pose = tri.pose;
    rec.residual = tri.residuals;
    lines.push_back(repose::pose_record_to_json(rec));
  }
  repose::write_jsonl(out_path, lines);
  log_at(LogLevel::Info,
         "triangulated " + std::to_string(frames) + " frames");
  return 0;
}

// ---- smooth-train / smooth ----

int run_smooth_train(const GlobalOpts& g,
                     const std::vector<std::string>& noisy_paths,
                     const std::vector<std::string>& clean_paths,
                     const std::string& out_path,
                     repose::RefinerHyperparams hp) {
  if (noisy_paths.size() != clean_paths.size() || noisy_paths.empty())
    throw repose::ConfigError(
        "smooth-train needs matching --noisy/--clean file pairs");
  std::vector<repose::TrajectoryPair> pairs;
  for (std::size_t i = 0; i < noisy_paths.size(); ++i) {
    repose::TrajectoryPair pair;
    pair.noisy = read_poses(noisy_paths[i]);
    pair.clean = read_poses(clean_paths[i]);
    if (pair.noisy.size() != pair.clean.size())
      throw repose::DataError("noisy/clean lengths differ for " +
                              noisy_paths[i]);
    pairs.push_back(std::move(pair));
  }
  if (g.seed_set) hp.seed = g.seed;
  const auto result = repose::train(pairs, hp);
  std::ofstream out(out_path);
  if (!out) throw repose::FormatError("cannot write " + out_path);
  out << result.weights.to_json_string();
  std::cout << "final loss: " << result.loss_curve.back() << " after "
            << result.loss_curve.size() << " epochs\n";
  return 0;
}

int run_smooth(const std::string& weights_path, const std::string& in_path,
               const std::string& out_path) {
  std::ifstream in(weights_path);
  if (!in) throw repose::FormatError("cannot open " + weights_path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto weights = repose::RefinerWeights::from_json_string(ss.str());
  const auto poses = read_poses(in_path);
  repose::PoseWindow window;
  std::vector<json> lines;
  for (const auto& pose : poses) {
    window.push_frame(pose);
    if (!window.ready()) continue;
    const auto pair = repose::refine(window, weights);
    for (const auto* p : {&pair.intermediate, &pair.current}) {
      repose::PoseRecord rec;
      rec.pose = *p;
      lines.push_back(repose::pose_record_to_json(rec));
    }
  }
  repose::write_jsonl(out_path, lines);
  log_at(LogLevel::Info, "refined " + std::to_string(poses.size()) +
                             " frames into " + std::to_string(lines.size()) +
                             " records");
  return 0;
}

// ---- ik ----

int run_ik(const std::string& in_path, const std::string& rig_path,
           const std::string& out_path, double tol, int max_iter) {
  const auto poses = read_poses(in_path);
  const repose::Rig rig =
      rig_path.empty()
          ? repose::Rig::default_rig()
          : repose::rig_from_json(repose::load_json_file(rig_path));
  std::vector<repose::Chain> chains;
  std::vector<json> lines;
  for (const auto& pose : poses) {
    if (chains.empty()) {
      for (const auto& rc : rig.chains) {
        std::vector<Eigen::Vector3d> pos;
        for (int j : rc.joints) pos.push_back(pose.joints[j]);
        repose::Chain chain = repose::Chain::from_positions(pos);
        chain.max_angles = rc.max_angles;
        chains.push_back(chain);
      }
    }
    std::array<Eigen::Vector3d, repose::kNumJoints> solved = pose.joints;
    json chains_json = json::object();
    for (std::size_t i = 0; i < rig.chains.size(); ++i) {
      const auto& rc = rig.chains[i];
      chains[i].root_anchor = solved[rc.joints.front()];
      const auto sol = repose::solve(chains[i], pose.joints[rc.joints.back()],
                                     tol, max_iter);
      chains[i].positions = sol.positions;
      json positions = json::array();
      for (std::size_t k = 0; k < rc.joints.size(); ++k) {
        solved[rc.joints[k]] = sol.positions[k];
        positions.push_back({sol.positions[k].x(), sol.positions[k].y(),
                             sol.positions[k].z()});
      }
      chains_json[rc.name] = {
          {"positions", positions},
          {"iterations", sol.iterations},
          {"error", sol.error},
          {"status", sol.status == repose::IkStatus::Reached
                         ? "reached"
                         : (sol.status == repose::IkStatus::Unreachable
                                ? "unreachable"
                                : "max_iterations")}};
    }
    lines.push_back({{"frame", pose.frame_index}, {"chains", chains_json}});
  }
  repose::write_jsonl(out_path, lines);
  return 0;
}

// ---- muscle ----

int run_muscle(const std::string& in_path, const std::string& map_path,
               const std::string& out_path, double dt) {
  const auto poses = read_poses(in_path);
  const repose::MuscleMap map =
      map_path.empty()
          ? repose::default_muscle_map()
          : repose::muscle_map_from_json(repose::load_json_file(map_path));
  std::vector<json> lines;
  for (std::size_t f = 1; f < poses.size(); ++f) {
    const auto frame =
        repose::muscle_levels(poses[f - 1], poses[f], map, dt);
    for (const auto& warning : frame.warnings)
      log_at(LogLevel::Warn, warning);
    lines.push_back(repose::muscle_frame_to_json(frame));
  }
  repose::write_jsonl(out_path, lines);
  return 0;
}

// ---- eval ----

int run_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& out_path) {
  std::vector<repose::Pose3D> pred, gt;
  std::vector<std::string> actions;
  for (const auto& rec : repose::read_pose_records(pred_path))
    pred.push_back(rec.pose);
  for (const auto& rec : repose::read_pose_records(gt_path)) {
    gt.push_back(rec.pose);
    actions.push_back(rec.extra.value("action", std::string{"all"}));
  }
  const auto report = repose::evaluate_sequences(pred, gt, actions);
  std::printf("%-16s %10s %10s %8s\n", "action", "mpjpe(mm)", "p-mpjpe",
              "frames");
  for (const auto& row : report.per_action)
    std::printf("%-16s %10.2f %10.2f %8ld\n", row.action.c_str(),
                row.mpjpe_mm, row.p_mpjpe_mm, row.frames);
  std::printf("accel error: %.3f mm/frame^2\n", report.accel_error_mm);
  if (!out_path.empty()) {
    json rows = json::array();
    for (const auto& row : report.per_action)
      rows.push_back({{"action", row.action},
                      {"mpjpe_mm", row.mpjpe_mm},
                      {"p_mpjpe_mm", row.p_mpjpe_mm},
                      {"frames", row.frames}});
    repose::save_json_file(out_path,
                           {{"mean_mpjpe_mm", report.mean_mpjpe_mm},
                            {"mean_p_mpjpe_mm", report.mean_p_mpjpe_mm},
                            {"accel_error_mm", report.accel_error_mm},
                            {"per_action", rows}});
  }
  return 0;
}

// ---- pipeline / bench ----

repose::PipelineConfig pipeline_config(const GlobalOpts& g) {
  if (g.config_path.empty())
    throw repose::ConfigError("pipeline needs --config");
  auto cfg = repose::PipelineConfig::from_json(load_config_or_empty(g));
  if (g.seed_set) cfg.seed = g.seed;
  if (g.single_thread) cfg.single_thread = true;
  return cfg;
}

int run_pipeline_cmd(const GlobalOpts& g) {
  const auto cfg = pipeline_config(g);
  const auto result = repose::run_pipeline(cfg);
  for (const auto& line : result.drop_log) log_at(LogLevel::Warn, line);
  std::cout << "frames in: " << result.frames_in
            << ", dropped: " << result.frames_dropped
            << ", poses emitted: " << result.poses_emitted << "\n";
  std::cout << result.latency.to_table();
  return 0;
}

int run_bench(const GlobalOpts& g, int reps, const std::string& out_path) {
  const auto report = repose::bench(pipeline_config(g), reps);
  std::cout << report.to_table();
  if (!out_path.empty()) repose::save_json_file(out_path, report.to_json());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-camera 3D pose reconstruction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", g.seed, "RNG seed");
  app.add_flag("--single-thread", g.single_thread,
               "run the pipeline stages sequentially");
  app.add_option("--log-level", g.log_level, "debug|info|warn|error");

  SynthOpts so;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  synth->add_option("--out-dir", so.out_dir, "output directory");
  synth->add_option("--cameras", so.cameras, "number of cameras");
  synth->add_option("--radius", so.radius, "rig radius, meters");
  synth->add_option("--rig-height", so.height, "camera height, meters");
  synth->add_option("--focal", so.focal, "focal length, pixels");
  synth->add_option("--image-width", so.image_w, "image width");
  synth->add_option("--image-height", so.image_h, "image height");
  synth->add_option("--motion", so.motion, "walk|squat|arm_raise|leg_fold");
  synth->add_option("--seconds", so.seconds, "sequence length");
  synth->add_option("--fps", so.fps, "frame rate");
  synth->add_option("--tempo", so.tempo, "motion tempo, Hz");
  synth->add_option("--pixel-noise", so.pixel_noise, "2D noise sigma, px");
  synth->add_option("--occlusion", so.occlusion, "per-joint occlusion prob");
  synth->add_flag("--heatmaps", so.heatmaps,
                  "write heatmap streams instead of keypoints");
  synth->add_option("--sigma", so.sigma, "heatmap bump width, px");
  synth->add_option("--alpha", so.alpha, "decoder temperature");
  synth->add_option("--scenario", so.scenario,
                    "single|crossing|tie|teleport detection stream");

  std::string track_in, track_out = "track.jsonl";
  auto* track = app.add_subcommand("track", "run the single-subject tracker");
  track->add_option("--detections", track_in, "detection records (JSONL)")
      ->required();
  track->add_option("--out", track_out, "decision output (JSONL)");

  std::string tri_cams, tri_out = "poses.jsonl";
  std::vector<std::string> tri_keypoints;
  double tri_fps = 50.0;
  auto* tri = app.add_subcommand("triangulate", "2D streams to 3D poses");
  tri->add_option("--cameras", tri_cams, "camera calibration JSON")
      ->required();
  tri->add_option("--keypoints", tri_keypoints, "per-camera keypoint JSONL")
      ->required();
  tri->add_option("--out", tri_out, "pose output (JSONL)");
  tri->add_option("--fps", tri_fps, "frame rate for timestamps");

  std::vector<std::string> st_noisy, st_clean;
  std::string st_out = "weights.json";
  repose::RefinerHyperparams hp;
  auto* st = app.add_subcommand("smooth-train", "train the temporal refiner");
  st->add_option("--noisy", st_noisy, "noisy pose JSONL (repeatable)")
      ->required();
  st->add_option("--clean", st_clean, "clean pose JSONL (repeatable)")
      ->required();
  st->add_option("--out", st_out, "weights output (JSON)");
  st->add_option("--alpha-loss", hp.alpha_loss, "position/velocity mix");
  st->add_option("--lr", hp.learning_rate, "Adam learning rate");
  st->add_option("--epochs", hp.epochs, "training epochs");
  st->add_option("--batch", hp.batch_size, "batch size");
  st->add_flag("--velocity-product-form", hp.velocity_product_form,
               "use the product form of the velocity loss");

  std::string sm_weights, sm_in, sm_out = "refined.jsonl";
  auto* sm = app.add_subcommand("smooth", "apply the temporal refiner");
  sm->add_option("--weights", sm_weights, "weights JSON")->required();
  sm->add_option("--in", sm_in, "pose JSONL")->required();
  sm->add_option("--out", sm_out, "refined pose output (JSONL)");

  std::string ik_in, ik_rig, ik_out = "ik.jsonl";
  double ik_tol = 0.01;
  int ik_iter = 20;
  auto* ik = app.add_subcommand("ik", "fit bone-length-consistent chains");
  ik->add_option("--in", ik_in, "pose JSONL")->required();
  ik->add_option("--rig", ik_rig, "rig JSON (default: built-in)");
  ik->add_option("--out", ik_out, "solution output (JSONL)");
  ik->add_option("--tol", ik_tol, "target tolerance, meters");
  ik->add_option("--max-iter", ik_iter, "iteration cap");

  std::string mu_in, mu_map, mu_out = "muscle.jsonl";
  double mu_dt = 0.02;
  auto* mu = app.add_subcommand("muscle", "classify muscle intensity");
  mu->add_option("--in", mu_in, "pose JSONL")->required();
  mu->add_option("--map", mu_map, "muscle map JSON (default: built-in)");
  mu->add_option("--out", mu_out, "level output (JSONL)");
  mu->add_option("--dt", mu_dt, "frame period, seconds");

  std::string ev_pred, ev_gt, ev_out;
  auto* ev = app.add_subcommand("eval", "compare poses against ground truth");
  ev->add_option("--pred", ev_pred, "predicted pose JSONL")->required();
  ev->add_option("--gt", ev_gt, "ground-truth pose JSONL")->required();
  ev->add_option("--out", ev_out, "report output (JSON)");

  auto* pl = app.add_subcommand("pipeline", "run the full pipeline");
  (void)pl;

  int bench_reps = 3;
  std::string bench_out;
  auto* be = app.add_subcommand("bench", "measure per-stage latency");
  be->add_option("--reps", bench_reps, "repetitions");
  be->add_option("--out", bench_out, "report output (JSON)");

  try {
    app.parse(argc, argv);
    g.seed_set = seed_opt->count() > 0;
    g_log_level = parse_log_level(g.log_level);

    if (*synth) return run_synth(g, so);
    if (*track) return run_track(track_in, track_out);
    if (*tri) return run_triangulate(tri_cams, tri_keypoints, tri_out, tri_fps);
    if (*st) return run_smooth_train(g, st_noisy, st_clean, st_out, hp);
    if (*sm) return run_smooth(sm_weights, sm_in, sm_out);
    if (*ik) return run_ik(ik_in, ik_rig, ik_out, ik_tol, ik_iter);
    if (*mu) return run_muscle(mu_in, mu_map, mu_out, mu_dt);
    if (*ev) return run_eval(ev_pred, ev_gt, ev_out);
    if (*pl) return run_pipeline_cmd(g);
    if (*be) return run_bench(g, bench_reps, bench_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const repose::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const repose::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

#include "repose/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "repose/fabrik.hpp"
#include "repose/heatmap.hpp"
#include "repose/metrics.hpp"
#include "repose/muscle.hpp"
#include "repose/queue.hpp"
#include "repose/records.hpp"
#include "repose/tracker.hpp"
#include "repose/triangulation.hpp"

namespace repose {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

// Per-camera-frame stages are multiplied by the camera count when
// folding into the per-frame total.
const char* kPerCameraStages[] = {"ingest_prep", "detection_ingest", "track",
                                  "keypoint_prep", "decode_2d"};

bool is_per_camera(const std::string& name) {
  for (const char* s : kPerCameraStages)
    if (name == s) return true;
  return false;
}

struct FrameItem {
  int cam = 0;
  Pose2D pose;
};

struct CameraTimings {
  std::map<std::string, std::vector<double>> stages;
  void add(const std::string& stage, double ms) {
    stages[stage].push_back(ms);
  }
};

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  cfg.cameras_path = j.at("cameras").get<std::string>();
  if (j.contains("keypoints"))
    cfg.keypoint_paths = j.at("keypoints").get<std::vector<std::string>>();
  if (j.contains("heatmaps"))
    cfg.heatmap_paths = j.at("heatmaps").get<std::vector<std::string>>();
  if (j.contains("detections"))
    cfg.detection_paths = j.at("detections").get<std::vector<std::string>>();
  cfg.refiner_on = j.value("refiner", false);
  cfg.refiner_weights_path = j.value("refiner_weights", std::string{});
  cfg.engine_frame_on = j.value("engine_frame", false);
  if (j.contains("engine_frame_config")) {
    const auto& e = j.at("engine_frame_config");
    if (e.contains("axis")) {
      const auto a = e.at("axis").get<std::vector<double>>();
      cfg.engine_frame.rodrigues_axis = Eigen::Vector3d(a[0], a[1], a[2]);
    }
    cfg.engine_frame.rodrigues_angle = e.value("angle", 0.0);
    if (e.contains("offset")) {
      const auto o = e.at("offset").get<std::vector<double>>();
      cfg.engine_frame.origin_offset = Eigen::Vector3d(o[0], o[1], o[2]);
    }
    const std::string axis = e.value("mirror_axis", "Z");
    cfg.engine_frame.mirror_axis =
        axis == "X" ? Axis::X : (axis == "Y" ? Axis::Y : Axis::Z);
  }
  cfg.ik_on = j.value("ik", false);
  cfg.rig_path = j.value("rig", std::string{});
  cfg.muscle_on = j.value("muscle", false);
  cfg.muscle_map_path = j.value("muscle_map", std::string{});
  cfg.heatmap_alpha = j.value("alpha", 100.0);
  cfg.dt = j.value("dt", 0.02);
  cfg.fps = j.value("fps", 50.0);
  cfg.wait_window = j.value("wait_window", 5);
  cfg.queue_capacity = j.value("queue_capacity", 64);
  cfg.single_thread = j.value("single_thread", false);
  cfg.paced_replay = j.value("paced_replay", false);
  cfg.seed = j.value("seed", 0ULL);
  cfg.out_poses = j.value("out_poses", std::string{});
  cfg.out_engine = j.value("out_engine", std::string{});
  cfg.out_ik = j.value("out_ik", std::string{});
  cfg.out_muscle = j.value("out_muscle", std::string{});
  cfg.out_track = j.value("out_track", std::string{});
  cfg.validate();
  return cfg;
}

void PipelineConfig::validate() const {
  if (cameras_path.empty()) throw ConfigError("pipeline needs a camera file");
  if (keypoint_paths.empty() && heatmap_paths.empty())
    throw ConfigError("pipeline needs keypoint or heatmap inputs");
  if (!keypoint_paths.empty() && !heatmap_paths.empty())
    throw ConfigError("choose either keypoint or heatmap inputs, not both");
  if (refiner_on && refiner_weights_path.empty())
    throw ConfigError("refiner enabled but no weights file given");
  if (wait_window < 1) throw ConfigError("wait_window must be >= 1");
  if (queue_capacity < 1) throw ConfigError("queue_capacity must be >= 1");
}

double StageStats::mean() const {
  if (samples_ms.empty()) return 0.0;
  double s = 0.0;
  for (double v : samples_ms) s += v;
  return s / samples_ms.size();
}

double StageStats::median() const {
  if (samples_ms.empty()) return 0.0;
  std::vector<double> v = samples_ms;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double StageStats::p99() const {
  if (samples_ms.empty()) return 0.0;
  std::vector<double> v = samples_ms;
  std::sort(v.begin(), v.end());
  return v[std::min(v.size() - 1,
                    static_cast<std::size_t>(0.99 * v.size()))];
}

nlohmann::json StageLatencyReport::to_json() const {
  nlohmann::json stages_json = nlohmann::json::object();
  for (const auto& [name, st] : stages)
    stages_json[name] = {{"mean_ms", st.mean()},
                         {"median_ms", st.median()},
                         {"p99_ms", st.p99()},
                         {"samples", st.samples_ms.size()}};
  return {{"stages", stages_json},
          {"total_ms", total_ms},
          {"fps_without_refiner", fps_without_refiner},
          {"fps_with_refiner", fps_with_refiner},
          {"mode", mode},
          {"cameras", cameras}};
}

std::string StageLatencyReport::to_table() const {
  std::ostringstream out;
  out << "mode=" << mode << " cameras=" << cameras << "\n";
  out << "stage              mean(ms)  median(ms)  p99(ms)\n";
  for (const auto& [name, st] : stages) {
    out << name;
    for (std::size_t i = name.size(); i < 19; ++i) out << ' ';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%8.3f  %10.3f  %7.3f\n", st.mean(),
                  st.median(), st.p99());
    out << buf;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "total %.3f ms | FPS w/o refiner %.1f | FPS w refiner %.1f\n",
                total_ms, fps_without_refiner, fps_with_refiner);
  out << buf;
  return out.str();
}

namespace {

// Reads one camera's 2D stream (keypoints or heatmaps), optionally
// runs tracking against its detection stream, and hands frames on.
void run_camera_stage(const PipelineConfig& cfg, int cam_index,
                      const std::string& camera_id, CameraTimings& timings,
                      std::vector<nlohmann::json>* track_out,
                      const std::function<void(FrameItem)>& emit) {
  const double frame_period_s = cfg.fps > 0 ? 1.0 / cfg.fps : 0.0;

  // Optional tracking over detection records.
  if (cam_index < static_cast<int>(cfg.detection_paths.size())) {
    auto t0 = Clock::now();
    const auto detections =
        read_detection_records(cfg.detection_paths[cam_index]);
    timings.add("detection_ingest", ms_since(t0));
    TrackState state;
    bool initialized = false;
    for (const auto& rec : detections) {
      std::vector<Patch> patches;
      if (rec.patches_path) patches = read_patches(*rec.patches_path);
      if (!initialized) {
        if (rec.boxes.empty()) continue;
        state = TrackState::init(rec.boxes.front(),
                                 patches.empty() ? nullptr : &patches[0]);
        initialized = true;
        continue;
      }
      auto t1 = Clock::now();
      const auto result = track_step(
          state, rec.boxes, patches.empty() ? nullptr : &patches);
      timings.add("track", ms_since(t1));
      if (track_out) {
        const char* decision =
            result.decision == TrackDecision::Single
                ? "single"
                : (result.decision == TrackDecision::IoUWin ? "iou"
                                                            : "color");
        track_out->push_back({{"frame", rec.frame_index},
                              {"cam", rec.camera_id},
                              {"box",
                               {{"x1", result.selected.x1},
                                {"y1", result.selected.y1},
                                {"x2", result.selected.x2},
                                {"y2", result.selected.y2},
                                {"score", result.selected.score}}},
                              {"decision", decision}});
      }
    }
  }

  if (!cfg.keypoint_paths.empty()) {
    std::ifstream in(cfg.keypoint_paths[cam_index]);
    if (!in)
      throw FormatError("cannot open " + cfg.keypoint_paths[cam_index]);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto t0 = Clock::now();
      KeypointRecord rec;
      try {
        rec = keypoint_record_from_json(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(cfg.keypoint_paths[cam_index] + ":" +
                          std::to_string(line_no) + ": " + e.what());
      }
      timings.add("ingest_prep", ms_since(t0));
      auto t1 = Clock::now();
      rec.pose.camera_id = camera_id;
      timings.add("decode_2d", ms_since(t1));
      emit({cam_index, rec.pose});
      if (cfg.paced_replay)
        std::this_thread::sleep_for(
            std::chrono::duration<double>(frame_period_s));
    }
  } else {
    HeatmapStreamReader reader(cfg.heatmap_paths[cam_index]);
    std::uint64_t frame = 0;
    Heatmap hm;
    while (true) {
      auto t0 = Clock::now();
      if (!reader.next_frame(frame, hm)) break;
      timings.add("keypoint_prep", ms_since(t0));
      auto t1 = Clock::now();
      Pose2D pose = keypoints_from_heatmaps(hm, cfg.heatmap_alpha,
                                            reader.header().normalized,
                                            static_cast<long>(frame),
                                            camera_id);
      timings.add("decode_2d", ms_since(t1));
      emit({cam_index, pose});
      if (cfg.paced_replay)
        std::this_thread::sleep_for(
            std::chrono::duration<double>(frame_period_s));
    }
  }
}

// Orders frames, applies the wait window, and runs the downstream
// (triangulate, refine, engine frame, IK, muscle) stages.
class DownstreamProcessor {
 public:
  DownstreamProcessor(const PipelineConfig& cfg,
                      std::vector<CameraView> cams)
      : cfg_(cfg), cams_(std::move(cams)) {
    if (cfg_.refiner_on) {
      std::ifstream in(cfg_.refiner_weights_path);
      if (!in)
        throw FormatError("cannot open " + cfg_.refiner_weights_path);
      std::stringstream ss;
      ss << in.rdbuf();
      weights_ = RefinerWeights::from_json_string(ss.str());
    }
    if (cfg_.ik_on)
      rig_ = cfg_.rig_path.empty()
                 ? Rig::default_rig()
                 : rig_from_json(load_json_file(cfg_.rig_path));
    if (cfg_.muscle_on)
      muscles_ = cfg_.muscle_map_path.empty()
                     ? default_muscle_map()
                     : muscle_map_from_json(
                           load_json_file(cfg_.muscle_map_path));
  }

  void add(const FrameItem& item, PipelineResult& result) {
    auto& bucket = pending_[item.pose.frame_index];
    bucket.resize(cams_.size());
    bucket[item.cam] = item.pose;
    latest_[item.cam] = std::max(latest_[item.cam], item.pose.frame_index);
    drain(result, false);
  }

  void finish(PipelineResult& result) { drain(result, true); }

  const CameraTimings& timings() const { return timings_; }
  std::vector<nlohmann::json>& pose_lines() { return pose_lines_; }
  std::vector<nlohmann::json>& engine_lines() { return engine_lines_; }
  std::vector<nlohmann::json>& ik_lines() { return ik_lines_; }
  std::vector<nlohmann::json>& muscle_lines() { return muscle_lines_; }

 private:
  void drain(PipelineResult& result, bool flush) {
    while (!pending_.empty()) {
      auto it = pending_.begin();
      const bool complete =
          std::all_of(it->second.begin(), it->second.end(),
                      [](const auto& p) { return p.has_value(); });
      if (complete) {
        process_frame(it->first, it->second, result);
        pending_.erase(it);
        continue;
      }
      long lag_floor = std::numeric_limits<long>::max();
      for (std::size_t c = 0; c < cams_.size(); ++c) {
        auto lit = latest_.find(static_cast<int>(c));
        lag_floor = std::min(
            lag_floor, lit == latest_.end() ? -1 : lit->second);
      }
      if (flush || lag_floor >= it->first + cfg_.wait_window) {
        ++result.frames_dropped;
        result.drop_log.push_back("dropped frame " +
                                  std::to_string(it->first) +
                                  ": incomplete beyond wait window");
        pending_.erase(it);
        continue;
      }
      break;
    }
  }

  void process_frame(long frame,
                     const std::vector<std::optional<Pose2D>>& bucket,
                     PipelineResult& result) {
    ++result.frames_in;
    std::vector<Pose2D> views;
    for (const auto& p : bucket) views.push_back(*p);
    auto t0 = Clock::now();
    TriangulatedPose tri = triangulate_pose(cams_, views);
    timings_.add("triangulate", ms_since(t0));
    tri.pose.timestamp = cfg_.fps > 0 ? frame / cfg_.fps : 0.0;

    if (!cfg_.refiner_on) {
      emit_pose(tri.pose, &tri.residuals, result);
      return;
    }
    auto t1 = Clock::now();
    const auto status = window_.push_frame(tri.pose);
    if (status == PoseWindow::Push::Gap)
      result.drop_log.push_back("refiner window reset at frame " +
                                std::to_string(frame));
    if (status == PoseWindow::Push::Ready || window_.ready()) {
      const RefinedPair pair = refine(window_, weights_);
      timings_.add("refine", ms_since(t1));
      emit_pose(pair.intermediate, nullptr, result);
      emit_pose(pair.current, nullptr, result);
    }
  }

  void emit_pose(const Pose3D& pose,
                 const std::array<double, kNumJoints>* residuals,
                 PipelineResult& result) {
    ++result.poses_emitted;
    PoseRecord rec;
    rec.pose = pose;
    if (residuals) rec.residual = *residuals;
    pose_lines_.push_back(pose_record_to_json(rec));

    if (cfg_.engine_frame_on) {
      PoseRecord eng;
      eng.pose = to_engine_frame(pose, cfg_.engine_frame);
      engine_lines_.push_back(pose_record_to_json(eng));
    }
    if (cfg_.ik_on) run_ik(pose);
    if (cfg_.muscle_on) {
      if (prev_pose_) {
        double dt = pose.timestamp - prev_pose_->timestamp;
        if (dt <= 0.0) dt = cfg_.dt;
        muscle_lines_.push_back(
            muscle_frame_to_json(muscle_levels(*prev_pose_, pose, muscles_,
                                               dt)));
      }
      prev_pose_ = pose;
    }
  }

  void run_ik(const Pose3D& pose) {
    if (chain_state_.empty()) {
      for (const auto& rc : rig_.chains) {
        std::vector<Eigen::Vector3d> pos;
        for (int j : rc.joints) pos.push_back(pose.joints[j]);
        Chain chain = Chain::from_positions(pos);
        chain.max_angles = rc.max_angles;
        chain_state_.push_back(chain);
      }
    }
    std::array<Eigen::Vector3d, kNumJoints> solved = pose.joints;
    nlohmann::json chains = nlohmann::json::object();
    for (std::size_t i = 0; i < rig_.chains.size(); ++i) {
      const auto& rc = rig_.chains[i];
      auto& chain = chain_state_[i];
      chain.root_anchor = solved[rc.joints.front()];
      const IkSolution sol = solve(chain, pose.joints[rc.joints.back()]);
      chain.positions = sol.positions;
      nlohmann::json positions = nlohmann::json::array();
      for (std::size_t k = 0; k < rc.joints.size(); ++k) {
        solved[rc.joints[k]] = sol.positions[k];
        positions.push_back({sol.positions[k].x(), sol.positions[k].y(),
                             sol.positions[k].z()});
      }
      chains[rc.name] = {
          {"positions", positions},
          {"iterations", sol.iterations},
          {"error", sol.error},
          {"status", sol.status == IkStatus::Reached
                         ? "reached"
                         : (sol.status == IkStatus::Unreachable
                                ? "unreachable"
                                : "max_iterations")}};
    }
    ik_lines_.push_back(
        {{"frame", pose.frame_index}, {"chains", chains}});
  }

  const PipelineConfig& cfg_;
  std::vector<CameraView> cams_;
  std::map<long, std::vector<std::optional<Pose2D>>> pending_;
  std::map<int, long> latest_;
  CameraTimings timings_;
  RefinerWeights weights_;
  PoseWindow window_;
  Rig rig_;
  std::vector<Chain> chain_state_;
  MuscleMap muscles_;
  std::optional<Pose3D> prev_pose_;
  std::vector<nlohmann::json> pose_lines_, engine_lines_, ik_lines_,
      muscle_lines_;
};

StageLatencyReport build_report(
    const PipelineConfig& cfg, int n_cams,
    const std::vector<CameraTimings*>& all_timings) {
  StageLatencyReport rep;
  rep.mode = cfg.paced_replay ? "paced-replay" : "file-replay";
  rep.cameras = n_cams;
  for (const auto* t : all_timings)
    for (const auto& [name, samples] : t->stages)
      rep.stages[name].samples_ms.insert(rep.stages[name].samples_ms.end(),
                                         samples.begin(), samples.end());
  double total = 0.0;
  double refine_mean = 0.0;
  for (const auto& [name, st] : rep.stages) {
    const double contribution =
        st.mean() * (is_per_camera(name) ? n_cams : 1);
    total += contribution;
    if (name == "refine") refine_mean = contribution;
  }
  rep.total_ms = total;
  const double without = total - refine_mean;
  rep.fps_without_refiner = without > 0 ? 1000.0 / without : 0.0;
  rep.fps_with_refiner = 2.0 * rep.fps_without_refiner;
  return rep;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const auto cams = cameras_from_json(load_json_file(cfg.cameras_path));
  if (cams.size() < 2)
    throw ConfigError("pipeline needs at least 2 cameras");
  const std::size_t n_inputs = cfg.keypoint_paths.empty()
                                   ? cfg.heatmap_paths.size()
                                   : cfg.keypoint_paths.size();
  if (n_inputs != cams.size())
    throw ConfigError("one 2D input stream per camera is required");

  PipelineResult result;
  DownstreamProcessor downstream(cfg, cams);
  std::vector<CameraTimings> cam_timings(cams.size());
  std::vector<std::vector<nlohmann::json>> track_lines(cams.size());

  if (cfg.single_thread) {
    for (std::size_t c = 0; c < cams.size(); ++c)
      run_camera_stage(cfg, static_cast<int>(c), cams[c].id, cam_timings[c],
                       cfg.out_track.empty() ? nullptr : &track_lines[c],
                       [&](FrameItem item) { downstream.add(item, result); });
  } else {
    BoundedQueue<FrameItem> queue(
        static_cast<std::size_t>(cfg.queue_capacity));
    std::vector<std::thread> producers;
    std::exception_ptr producer_error;
    std::mutex error_mutex;
    std::atomic<int> live{static_cast<int>(cams.size())};
    for (std::size_t c = 0; c < cams.size(); ++c) {
      producers.emplace_back([&, c] {
        try {
          run_camera_stage(cfg, static_cast<int>(c), cams[c].id,
                           cam_timings[c],
                           cfg.out_track.empty() ? nullptr : &track_lines[c],
                           [&](FrameItem item) { queue.push(std::move(item)); });
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!producer_error) producer_error = std::current_exception();
        }
        if (--live == 0) queue.close();
      });
    }
    while (auto item = queue.pop()) downstream.add(*item, result);
    for (auto& t : producers) t.join();
    if (producer_error) std::rethrow_exception(producer_error);
  }
  downstream.finish(result);

  if (!cfg.out_poses.empty())
    write_jsonl(cfg.out_poses, downstream.pose_lines());
  if (!cfg.out_engine.empty())
    write_jsonl(cfg.out_engine, downstream.engine_lines());
  if (!cfg.out_ik.empty()) write_jsonl(cfg.out_ik, downstream.ik_lines());
  if (!cfg.out_muscle.empty())
    write_jsonl(cfg.out_muscle, downstream.muscle_lines());
  if (!cfg.out_track.empty()) {
    std::vector<nlohmann::json> merged;
    for (auto& lines : track_lines)
      merged.insert(merged.end(), lines.begin(), lines.end());
    write_jsonl(cfg.out_track, merged);
  }

  std::vector<CameraTimings*> all;
  for (auto& t : cam_timings) all.push_back(&t);
  CameraTimings downstream_timings = downstream.timings();
  all.push_back(&downstream_timings);
  result.latency = build_report(cfg, static_cast<int>(cams.size()), all);
  return result;
}

StageLatencyReport bench(const PipelineConfig& cfg, int repetitions) {
  if (repetitions < 1) throw ConfigError("bench needs >= 1 repetition");
  StageLatencyReport merged;
  PipelineConfig quiet = cfg;
  quiet.out_poses.clear();
  quiet.out_engine.clear();
  quiet.out_ik.clear();
  quiet.out_muscle.clear();
  quiet.out_track.clear();
  long frames = 0;
  for (int r = 0; r < repetitions; ++r) {
    const PipelineResult result = run_pipeline(quiet);
    if (result.frames_in == 0) throw DataError("bench input is empty");
    frames += result.frames_in;
    if (r == 0) {
      merged = result.latency;
    } else {
      for (const auto& [name, st] : result.latency.stages)
        merged.stages[name].samples_ms.insert(
            merged.stages[name].samples_ms.end(), st.samples_ms.begin(),
            st.samples_ms.end());
    }
  }
  // recompute totals over the merged samples
  double total = 0.0, refine_mean = 0.0;
  for (const auto& [name, st] : merged.stages) {
    const double contribution =
        st.mean() * (is_per_camera(name) ? merged.cameras : 1);
    total += contribution;
    if (name == "refine") refine_mean = contribution;
  }
  merged.total_ms = total;
  const double without = total - refine_mean;
  merged.fps_without_refiner = without > 0 ? 1000.0 / without : 0.0;
  merged.fps_with_refiner = 2.0 * merged.fps_without_refiner;
  return merged;
}

}  // namespace repose

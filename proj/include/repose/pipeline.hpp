#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "repose/camera.hpp"
#include "repose/refiner.hpp"

namespace repose {

struct PipelineConfig {
  std::string cameras_path;
  std::vector<std::string> keypoint_paths;   // one per camera
  std::vector<std::string> heatmap_paths;    // alternative 2D input
  std::vector<std::string> detection_paths;  // optional, enables tracking

  bool refiner_on = false;
  std::string refiner_weights_path;
  bool engine_frame_on = false;
  EngineFrameConfig engine_frame;
  bool ik_on = false;
  std::string rig_path;  // empty -> default rig
  bool muscle_on = false;
  std::string muscle_map_path;  // empty -> default map

  double heatmap_alpha = 100.0;
  double dt = 0.02;        // muscle frame period, seconds
  double fps = 50.0;       // timestamping of ingested frames
  int wait_window = 5;     // frames a camera may lag before a drop
  int queue_capacity = 64;
  bool single_thread = false;
  bool paced_replay = false;  // sleep one frame period per record
  std::uint64_t seed = 0;

  std::string out_poses;   // pose records (JSONL)
  std::string out_engine;  // engine-frame pose records
  std::string out_ik;      // IK solutions
  std::string out_muscle;  // muscle levels
  std::string out_track;   // tracker decisions

  static PipelineConfig from_json(const nlohmann::json& j);
  void validate() const;
};

struct StageStats {
  std::vector<double> samples_ms;
  double mean() const;
  double median() const;
  double p99() const;
};

struct StageLatencyReport {
  // keyed: ingest_prep, detection_ingest, track, keypoint_prep,
  // decode_2d, triangulate, refine
  std::map<std::string, StageStats> stages;
  double total_ms = 0.0;  // sum of per-frame stage means
  double fps_without_refiner = 0.0;
  double fps_with_refiner = 0.0;
  std::string mode;  // file-replay or paced-replay
  int cameras = 0;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

struct PipelineResult {
  long frames_in = 0;
  long frames_dropped = 0;
  long poses_emitted = 0;
  std::vector<std::string> drop_log;
  StageLatencyReport latency;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

StageLatencyReport bench(const PipelineConfig& cfg, int repetitions);

}  // namespace repose

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>
#include <unistd.h>

#include "doctest.h"
#include "repose/pipeline.hpp"
#include "repose/queue.hpp"
#include "repose/records.hpp"
#include "repose/synth.hpp"

using namespace repose;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("repose-pipe-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Writes a small noiseless scene and returns a ready-to-run config.
PipelineConfig write_scene(const TempDir& dir, double seconds = 1.0,
                           int cameras = 3) {
  SynthScene scene;
  scene.cameras = make_rig(cameras, 3.0, 1.2, 1000.0, 1000, 1000);
  scene.gt = synth_motion(Skeleton::human36m(), seconds, 50.0);
  save_json_file(dir.file("cameras.json"), cameras_to_json(scene.cameras));
  const auto obs = observe(scene);
  PipelineConfig cfg;
  cfg.cameras_path = dir.file("cameras.json");
  for (int c = 0; c < cameras; ++c) {
    std::vector<nlohmann::json> lines;
    for (const auto& pose : obs.per_camera[c]) {
      KeypointRecord rec;
      rec.pose = pose;
      lines.push_back(keypoint_record_to_json(rec));
    }
    const std::string path = dir.file("cam" + std::to_string(c) + ".jsonl");
    write_jsonl(path, lines);
    cfg.keypoint_paths.push_back(path);
  }
  cfg.out_poses = dir.file("poses.jsonl");
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("stage stats aggregate samples") {
  StageStats st;
  for (int i = 100; i >= 1; --i) st.samples_ms.push_back(i);
  CHECK(st.mean() == doctest::Approx(50.5));
  CHECK(st.median() == doctest::Approx(51.0));
  CHECK(st.p99() == doctest::Approx(100.0));
  CHECK(StageStats{}.mean() == 0.0);
}

TEST_CASE("config validation catches contradictions") {
  PipelineConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // no cameras
  cfg.cameras_path = "cams.json";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // no 2D inputs
  cfg.keypoint_paths = {"a.jsonl"};
  cfg.heatmap_paths = {"a.rphm"};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // both input kinds
  cfg.heatmap_paths.clear();
  cfg.validate();
  cfg.refiner_on = true;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // refiner without weights
  cfg.refiner_weights_path = "w.json";
  cfg.wait_window = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config parses from json with defaults") {
  const auto j = nlohmann::json::parse(
      R"({"cameras":"c.json","keypoints":["a","b"],"muscle":true,
          "out_poses":"p.jsonl","wait_window":3})");
  const PipelineConfig cfg = PipelineConfig::from_json(j);
  CHECK(cfg.cameras_path == "c.json");
  CHECK(cfg.keypoint_paths.size() == 2);
  CHECK(cfg.muscle_on);
  CHECK_FALSE(cfg.refiner_on);
  CHECK(cfg.wait_window == 3);
  CHECK(cfg.dt == 0.02);
  CHECK(cfg.fps == 50.0);
}

TEST_CASE("bounded queue blocks by default and drops oldest when lossy") {
  BoundedQueue<int> lossy(2, true);
  lossy.push(1);
  lossy.push(2);
  lossy.push(3);  // evicts 1
  CHECK(lossy.dropped() == 1);
  CHECK(*lossy.pop() == 2);
  CHECK(*lossy.pop() == 3);

  BoundedQueue<int> blocking(2);
  blocking.push(1);
  blocking.push(2);
  std::atomic<bool> third_pushed{false};
  std::thread producer([&] {
    blocking.push(3);  // must wait for a pop
    third_pushed = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  CHECK_FALSE(third_pushed.load());
  CHECK(*blocking.pop() == 1);
  producer.join();
  CHECK(third_pushed.load());
  CHECK(blocking.dropped() == 0);

  blocking.close();
  CHECK(*blocking.pop() == 2);
  CHECK(*blocking.pop() == 3);
  CHECK_FALSE(blocking.pop().has_value());  // closed and drained
}

TEST_CASE("pipeline reconstructs a noiseless scene") {
  TempDir dir;
  PipelineConfig cfg = write_scene(dir);
  const PipelineResult result = run_pipeline(cfg);
  CHECK(result.frames_in == 50);
  CHECK(result.frames_dropped == 0);
  CHECK(result.poses_emitted == 50);
  const auto poses = read_pose_records(cfg.out_poses);
  REQUIRE(poses.size() == 50);
  const auto gt = synth_motion(Skeleton::human36m(), 1.0, 50.0);
  for (std::size_t f = 0; f < poses.size(); ++f)
    for (int j = 0; j < kNumJoints; ++j)
      CHECK((poses[f].pose.joints[j] - gt[f].joints[j]).norm() < 1e-6);
  CHECK(result.latency.stages.count("triangulate") == 1);
  CHECK(result.latency.total_ms > 0.0);
}

TEST_CASE("single-thread and staged runs emit identical records") {
  TempDir dir;
  PipelineConfig cfg = write_scene(dir, 0.6);
  run_pipeline(cfg);
  const std::string staged = slurp(cfg.out_poses);
  cfg.single_thread = true;
  run_pipeline(cfg);
  CHECK(slurp(cfg.out_poses) == staged);
}

TEST_CASE("refiner mode doubles the emitted record rate") {
  TempDir dir;
  PipelineConfig cfg = write_scene(dir, 0.8);  // 40 frames
  {
    std::ofstream out(dir.file("w.json"));
    out << RefinerWeights::randomized(3).to_json_string();
  }
  cfg.refiner_on = true;
  cfg.refiner_weights_path = dir.file("w.json");
  const PipelineResult result = run_pipeline(cfg);
  CHECK(result.frames_in == 40);
  CHECK(result.poses_emitted == 2 * (40 - 8));
  const auto poses = read_pose_records(cfg.out_poses);
  REQUIRE(poses.size() == 64);
  // alternating intermediate/current timestamps, strictly increasing
  for (std::size_t i = 1; i < poses.size(); ++i)
    CHECK(poses[i].pose.timestamp > poses[i - 1].pose.timestamp);
}

TEST_CASE("a camera losing frames triggers wait-window drops") {
  TempDir dir;
  PipelineConfig cfg = write_scene(dir, 1.0);
  // delete frames 10..14 from camera 1
  auto records = read_keypoint_records(cfg.keypoint_paths[1]);
  std::vector<nlohmann::json> kept;
  for (const auto& r : records)
    if (r.pose.frame_index < 10 || r.pose.frame_index > 14)
      kept.push_back(keypoint_record_to_json(r));
  write_jsonl(cfg.keypoint_paths[1], kept);

  const PipelineResult result = run_pipeline(cfg);
  CHECK(result.frames_dropped == 5);
  CHECK(result.frames_in == 45);
  CHECK(result.drop_log.size() == 5);
  const auto poses = read_pose_records(cfg.out_poses);
  CHECK(poses.size() == 45);
  // dropped frame indices are absent, later frames still present
  for (const auto& r : poses)
    CHECK((r.pose.frame_index < 10 || r.pose.frame_index > 14));
}

TEST_CASE("downstream products are emitted when enabled") {
  TempDir dir;
  PipelineConfig cfg = write_scene(dir, 0.5);
  cfg.engine_frame_on = true;
  cfg.ik_on = true;
  cfg.muscle_on = true;
  cfg.out_engine = dir.file("engine.jsonl");
  cfg.out_ik = dir.file("ik.jsonl");
  cfg.out_muscle = dir.file("muscle.jsonl");
  run_pipeline(cfg);
  CHECK(read_pose_records(cfg.out_engine).size() == 25);
  std::ifstream ik(cfg.out_ik);
  std::string line;
  int ik_lines = 0;
  while (std::getline(ik, line)) ++ik_lines;
  CHECK(ik_lines == 25);
  std::ifstream mu(cfg.out_muscle);
  int mu_lines = 0;
  while (std::getline(mu, line)) ++mu_lines;
  CHECK(mu_lines == 24);  // one less: levels need a previous pose
}

TEST_CASE("bench merges repetitions and keeps the fps relation") {
  TempDir dir;
  PipelineConfig cfg = write_scene(dir, 0.4);
  const StageLatencyReport rep = bench(cfg, 2);
  CHECK(rep.mode == "file-replay");
  CHECK(rep.cameras == 3);
  CHECK(rep.fps_with_refiner ==
        doctest::Approx(2.0 * rep.fps_without_refiner));
  CHECK(rep.total_ms > 0.0);
  // total covers the slowest stage
  for (const auto& [name, st] : rep.stages) CHECK(rep.total_ms >= st.mean());
  // every stage saw both repetitions' samples
  CHECK(rep.stages.at("triangulate").samples_ms.size() == 2 * 20);
  const auto j = rep.to_json();
  CHECK(j.at("cameras") == 3);
  CHECK(j.at("stages").contains("triangulate"));
  CHECK_THROWS_AS(bench(cfg, 0), ConfigError);
}

TEST_CASE("pipeline rejects mismatched stream counts") {
  TempDir dir;
  PipelineConfig cfg = write_scene(dir, 0.2);
  cfg.keypoint_paths.pop_back();
  CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
}

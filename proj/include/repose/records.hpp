#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "repose/camera.hpp"
#include "repose/fabrik.hpp"
#include "repose/muscle.hpp"
#include "repose/skeleton.hpp"
#include "repose/tracker.hpp"
#include "repose/heatmap.hpp"

namespace repose {

// ---- JSON files ----

std::vector<CameraView> cameras_from_json(const nlohmann::json& j);
nlohmann::json cameras_to_json(const std::vector<CameraView>& cams);

Skeleton skeleton_from_json(const nlohmann::json& j);
nlohmann::json skeleton_to_json(const Skeleton& s);

Rig rig_from_json(const nlohmann::json& j);
nlohmann::json rig_to_json(const Rig& rig);

MuscleMap muscle_map_from_json(const nlohmann::json& j);
nlohmann::json muscle_map_to_json(const MuscleMap& map);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

// ---- JSON Lines records ----
// Unknown fields are preserved in `extra` and re-emitted on write.

struct KeypointRecord {
  Pose2D pose;
  nlohmann::json extra = nlohmann::json::object();
};

struct PoseRecord {
  Pose3D pose;
  std::optional<std::array<double, kNumJoints>> residual;
  nlohmann::json extra = nlohmann::json::object();
};

struct DetectionRecord {
  long frame_index = 0;
  std::string camera_id;
  std::vector<BBox> boxes;
  std::optional<std::string> patches_path;
  std::optional<long> subject_index;
  nlohmann::json extra = nlohmann::json::object();
};

KeypointRecord keypoint_record_from_json(const nlohmann::json& j);
nlohmann::json keypoint_record_to_json(const KeypointRecord& r);

PoseRecord pose_record_from_json(const nlohmann::json& j);
nlohmann::json pose_record_to_json(const PoseRecord& r);

DetectionRecord detection_record_from_json(const nlohmann::json& j);
nlohmann::json detection_record_to_json(const DetectionRecord& r);

nlohmann::json muscle_frame_to_json(const MuscleFrame& mf);

// Reads a whole JSONL file through `parse`; FormatError carries the
// 1-based line number of the offending line.
template <typename Record, typename Parser>
std::vector<Record> read_jsonl(const std::string& path, Parser parse);

std::vector<KeypointRecord> read_keypoint_records(const std::string& path);
std::vector<PoseRecord> read_pose_records(const std::string& path);
std::vector<DetectionRecord> read_detection_records(const std::string& path);

void write_jsonl(const std::string& path,
                 const std::vector<nlohmann::json>& lines);

// ---- binary formats ----

// Patch file: per box, little-endian u32 width, u32 height, then
// width*height*3 bytes RGB8.
void write_patches(const std::string& path, const std::vector<Patch>& patches);
std::vector<Patch> read_patches(const std::string& path);

// Heatmap stream: magic "RPHM", u32 version, u32 J, u32 W, u32 H,
// u8 normalized flag, then per frame a u64 frame index followed by
// J*H*W little-endian f32 values.
struct HeatmapStreamHeader {
  std::uint32_t version = 1;
  std::uint32_t joints = kNumJoints;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  bool normalized = false;
};

class HeatmapStreamWriter {
 public:
  HeatmapStreamWriter(const std::string& path,
                      const HeatmapStreamHeader& header);
  ~HeatmapStreamWriter();
  void write_frame(std::uint64_t frame_index, const Heatmap& hm);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class HeatmapStreamReader {
 public:
  explicit HeatmapStreamReader(const std::string& path);
  ~HeatmapStreamReader();
  const HeatmapStreamHeader& header() const;
  // Returns false at clean EOF; throws FormatError (naming the byte
  // offset) on truncation.
  bool next_frame(std::uint64_t& frame_index, Heatmap& hm);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace repose

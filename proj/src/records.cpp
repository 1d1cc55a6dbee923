#include "repose/records.hpp"

#include <cstring>
#include <fstream>
#include <memory>
#include <string_view>

namespace repose {

namespace {

using nlohmann::json;

Eigen::Matrix3d mat3_from(const json& j, const std::string& what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 9) throw FormatError(what + " must have 9 numbers");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[r * 3 + c];
  return m;
}

std::vector<double> mat3_to(const Eigen::Matrix3d& m) {
  std::vector<double> v;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v.push_back(m(r, c));
  return v;
}

json strip_known(const json& j, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool is_known = false;
    for (const char* k : known)
      if (it.key() == k) is_known = true;
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

}  // namespace

std::vector<CameraView> cameras_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("camera file must be a JSON array");
  std::vector<CameraView> cams;
  for (const auto& cj : j) {
    CameraView cam;
    cam.id = cj.at("id").get<std::string>();
    cam.K = mat3_from(cj.at("K"), "K");
    cam.R = mat3_from(cj.at("R"), "R");
    const auto t = cj.at("t").get<std::vector<double>>();
    if (t.size() != 3) throw FormatError("t must have 3 numbers");
    cam.t = Eigen::Vector3d(t[0], t[1], t[2]);
    cam.width = cj.at("width").get<int>();
    cam.height = cj.at("height").get<int>();
    cam.validate();
    cams.push_back(cam);
  }
  return cams;
}

json cameras_to_json(const std::vector<CameraView>& cams) {
  json out = json::array();
  for (const auto& cam : cams)
    out.push_back({{"id", cam.id},
                   {"K", mat3_to(cam.K)},
                   {"R", mat3_to(cam.R)},
                   {"t", {cam.t.x(), cam.t.y(), cam.t.z()}},
                   {"width", cam.width},
                   {"height", cam.height}});
  return out;
}

Skeleton skeleton_from_json(const json& j) {
  Skeleton s;
  s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
  s.parents = j.at("parents").get<std::vector<int>>();
  s.validate();
  return s;
}

json skeleton_to_json(const Skeleton& s) {
  return {{"joint_names", s.joint_names}, {"parents", s.parents}};
}

Rig rig_from_json(const json& j) {
  Rig rig;
  for (const auto& cj : j.at("chains")) {
    RigChain chain;
    chain.name = cj.at("name").get<std::string>();
    chain.joints = cj.at("joints").get<std::vector<int>>();
    if (chain.joints.size() < 2)
      throw FormatError("rig chain '" + chain.name + "' needs >= 2 joints");
    for (int idx : chain.joints)
      if (idx < 0 || idx >= kNumJoints)
        throw FormatError("rig chain '" + chain.name + "' joint out of range");
    if (cj.contains("max_angles"))
      chain.max_angles = cj.at("max_angles").get<std::vector<double>>();
    rig.chains.push_back(std::move(chain));
  }
  return rig;
}

json rig_to_json(const Rig& rig) {
  json chains = json::array();
  for (const auto& c : rig.chains) {
    json cj = {{"name", c.name}, {"joints", c.joints}};
    if (c.max_angles) cj["max_angles"] = *c.max_angles;
    chains.push_back(cj);
  }
  return {{"chains", chains}};
}

MuscleMap muscle_map_from_json(const json& j) {
  MuscleMap map;
  for (auto it = j.begin(); it != j.end(); ++it) {
    MuscleSpec spec;
    spec.joints = it.value().at("joints").get<std::vector<int>>();
    if (it.value().contains("weights")) {
      const auto w = it.value().at("weights").get<std::vector<double>>();
      if (w.size() != 3) throw FormatError("muscle weights must have 3 values");
      spec.axis_weights = Eigen::Vector3d(w[0], w[1], w[2]);
    }
    if (it.value().contains("thresholds")) {
      const auto t = it.value().at("thresholds").get<std::vector<double>>();
      if (t.size() != 2)
        throw FormatError("muscle thresholds must have 2 values");
      spec.thresholds = {t[0], t[1]};
    }
    map[it.key()] = spec;
  }
  validate_muscle_map(map);
  return map;
}

json muscle_map_to_json(const MuscleMap& map) {
  json out = json::object();
  for (const auto& [name, spec] : map) {
    json mj = {{"joints", spec.joints},
               {"weights",
                {spec.axis_weights.x(), spec.axis_weights.y(),
                 spec.axis_weights.z()}}};
    if (spec.thresholds)
      mj["thresholds"] = {spec.thresholds->first, spec.thresholds->second};
    out[name] = mj;
  }
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << j.dump(2) << "\n";
}

KeypointRecord keypoint_record_from_json(const json& j) {
  KeypointRecord r;
  r.pose.frame_index = j.at("frame").get<long>();
  r.pose.camera_id = j.at("cam").get<std::string>();
  const auto& joints = j.at("joints");
  if (joints.size() != kNumJoints)
    throw FormatError("keypoint record must carry 17 joints");
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& ji = joints.at(i);
    r.pose.joints[i] = {ji.at(0).get<double>(), ji.at(1).get<double>()};
    r.pose.confidence[i] = ji.at(2).get<double>();
  }
  r.extra = strip_known(j, {"frame", "cam", "joints"});
  return r;
}

json keypoint_record_to_json(const KeypointRecord& r) {
  json j = r.extra;
  j["frame"] = r.pose.frame_index;
  j["cam"] = r.pose.camera_id;
  json joints = json::array();
  for (int i = 0; i < kNumJoints; ++i)
    joints.push_back({r.pose.joints[i].x(), r.pose.joints[i].y(),
                      r.pose.confidence[i]});
  j["joints"] = joints;
  return j;
}

PoseRecord pose_record_from_json(const json& j) {
  PoseRecord r;
  r.pose.frame_index = j.at("frame").get<long>();
  r.pose.timestamp = j.value("timestamp", 0.0);
  const auto& joints = j.at("joints");
  if (joints.size() != kNumJoints)
    throw FormatError("pose record must carry 17 joints");
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& ji = joints.at(i);
    r.pose.joints[i] = {ji.at(0).get<double>(), ji.at(1).get<double>(),
                        ji.at(2).get<double>()};
  }
  if (j.contains("conf")) {
    const auto conf = j.at("conf").get<std::vector<double>>();
    if (conf.size() != kNumJoints)
      throw FormatError("pose record conf must have 17 values");
    for (int i = 0; i < kNumJoints; ++i) r.pose.confidence[i] = conf[i];
  } else {
    r.pose.confidence.fill(1.0);
  }
  if (j.contains("residual")) {
    const auto res = j.at("residual").get<std::vector<double>>();
    if (res.size() != kNumJoints)
      throw FormatError("pose record residual must have 17 values");
    std::array<double, kNumJoints> arr{};
    for (int i = 0; i < kNumJoints; ++i) arr[i] = res[i];
    r.residual = arr;
  }
  r.extra = strip_known(j, {"frame", "timestamp", "joints", "conf",
                            "residual"});
  return r;
}

json pose_record_to_json(const PoseRecord& r) {
  json j = r.extra;
  j["frame"] = r.pose.frame_index;
  j["timestamp"] = r.pose.timestamp;
  json joints = json::array();
  json conf = json::array();
  for (int i = 0; i < kNumJoints; ++i) {
    joints.push_back({r.pose.joints[i].x(), r.pose.joints[i].y(),
                      r.pose.joints[i].z()});
    conf.push_back(r.pose.confidence[i]);
  }
  j["joints"] = joints;
  j["conf"] = conf;
  if (r.residual) {
    json res = json::array();
    for (double v : *r.residual) res.push_back(v);
    j["residual"] = res;
  }
  return j;
}

DetectionRecord detection_record_from_json(const json& j) {
  DetectionRecord r;
  r.frame_index = j.at("frame").get<long>();
  r.camera_id = j.at("cam").get<std::string>();
  for (const auto& bj : j.at("boxes"))
    r.boxes.push_back({bj.at("x1").get<double>(), bj.at("y1").get<double>(),
                       bj.at("x2").get<double>(), bj.at("y2").get<double>(),
                       bj.value("score", 1.0)});
  if (j.contains("patches"))
    r.patches_path = j.at("patches").get<std::string>();
  if (j.contains("subject_idx"))
    r.subject_index = j.at("subject_idx").get<long>();
  r.extra = strip_known(j, {"frame", "cam", "boxes", "patches",
                            "subject_idx"});
  return r;
}

json detection_record_to_json(const DetectionRecord& r) {
  json j = r.extra;
  j["frame"] = r.frame_index;
  j["cam"] = r.camera_id;
  json boxes = json::array();
  for (const auto& b : r.boxes)
    boxes.push_back({{"x1", b.x1},
                     {"y1", b.y1},
                     {"x2", b.x2},
                     {"y2", b.y2},
                     {"score", b.score}});
  j["boxes"] = boxes;
  if (r.patches_path) j["patches"] = *r.patches_path;
  if (r.subject_index) j["subject_idx"] = *r.subject_index;
  return j;
}

json muscle_frame_to_json(const MuscleFrame& mf) {
  json muscles = json::object();
  for (const auto& [name, lvl] : mf.muscles)
    muscles[name] = {{"speed", lvl.speed},
                     {"level", level_name(lvl.level)},
                     {"color", level_color(lvl.level)}};
  json j = {{"frame", mf.frame_index}, {"muscles", muscles}};
  if (!mf.warnings.empty()) j["warnings"] = mf.warnings;
  return j;
}

template <typename Record, typename Parser>
std::vector<Record> read_jsonl(const std::string& path, Parser parse) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<Record> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

std::vector<KeypointRecord> read_keypoint_records(const std::string& path) {
  return read_jsonl<KeypointRecord>(path, keypoint_record_from_json);
}

std::vector<PoseRecord> read_pose_records(const std::string& path) {
  return read_jsonl<PoseRecord>(path, pose_record_from_json);
}

std::vector<DetectionRecord> read_detection_records(const std::string& path) {
  return read_jsonl<DetectionRecord>(path, detection_record_from_json);
}

void write_jsonl(const std::string& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  for (const auto& j : lines) out << j.dump() << "\n";
}

// ---- binary formats ----

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>(
        (static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
bool read_le(std::istream& in, T& value) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (in.gcount() != sizeof(T)) return false;
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  value = static_cast<T>(v);
  return true;
}

}  // namespace

void write_patches(const std::string& path, const std::vector<Patch>& patches) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  for (const auto& p : patches) {
    write_le<std::uint32_t>(out, p.width);
    write_le<std::uint32_t>(out, p.height);
    out.write(reinterpret_cast<const char*>(p.rgb.data()),
              static_cast<std::streamsize>(p.rgb.size()));
  }
}

std::vector<Patch> read_patches(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<Patch> patches;
  std::uint32_t w;
  while (read_le(in, w)) {
    Patch p;
    p.width = static_cast<int>(w);
    std::uint32_t h;
    if (!read_le(in, h))
      throw FormatError(path + ": truncated patch header at byte " +
                        std::to_string(static_cast<long>(in.tellg())));
    p.height = static_cast<int>(h);
    p.rgb.resize(static_cast<std::size_t>(p.width) * p.height * 3);
    in.read(reinterpret_cast<char*>(p.rgb.data()),
            static_cast<std::streamsize>(p.rgb.size()));
    if (static_cast<std::size_t>(in.gcount()) != p.rgb.size())
      throw FormatError(path + ": truncated patch data");
    patches.push_back(std::move(p));
  }
  return patches;
}

struct HeatmapStreamWriter::Impl {
  std::ofstream out;
  HeatmapStreamHeader header;
};

HeatmapStreamWriter::HeatmapStreamWriter(const std::string& path,
                                         const HeatmapStreamHeader& header)
    : impl_(std::make_unique<Impl>()) {
  impl_->out.open(path, std::ios::binary);
  if (!impl_->out) throw FormatError("cannot write " + path);
  impl_->header = header;
  impl_->out.write("RPHM", 4);
  write_le<std::uint32_t>(impl_->out, header.version);
  write_le<std::uint32_t>(impl_->out, header.joints);
  write_le<std::uint32_t>(impl_->out, header.width);
  write_le<std::uint32_t>(impl_->out, header.height);
  impl_->out.put(header.normalized ? 1 : 0);
}

HeatmapStreamWriter::~HeatmapStreamWriter() = default;

void HeatmapStreamWriter::write_frame(std::uint64_t frame_index,
                                      const Heatmap& hm) {
  const auto& h = impl_->header;
  if (hm.joints != static_cast<int>(h.joints) ||
      hm.width != static_cast<int>(h.width) ||
      hm.height != static_cast<int>(h.height))
    throw FormatError("heatmap does not match stream header");
  write_le<std::uint64_t>(impl_->out, frame_index);
  for (double v : hm.values) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_le<std::uint32_t>(impl_->out, bits);
  }
}

struct HeatmapStreamReader::Impl {
  std::ifstream in;
  std::string path;
  HeatmapStreamHeader header;
};

HeatmapStreamReader::HeatmapStreamReader(const std::string& path)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  impl_->in.open(path, std::ios::binary);
  if (!impl_->in) throw FormatError("cannot open " + path);
  char magic[4];
  impl_->in.read(magic, 4);
  if (impl_->in.gcount() != 4 || std::string_view(magic, 4) != "RPHM")
    throw FormatError(path + ": bad heatmap stream magic");
  auto& h = impl_->header;
  if (!read_le(impl_->in, h.version) || !read_le(impl_->in, h.joints) ||
      !read_le(impl_->in, h.width) || !read_le(impl_->in, h.height))
    throw FormatError(path + ": truncated heatmap stream header");
  if (h.version != 1)
    throw FormatError(path + ": unsupported heatmap stream version");
  const int flag = impl_->in.get();
  if (flag == EOF) throw FormatError(path + ": truncated heatmap header");
  h.normalized = flag != 0;
}

HeatmapStreamReader::~HeatmapStreamReader() = default;

const HeatmapStreamHeader& HeatmapStreamReader::header() const {
  return impl_->header;
}

bool HeatmapStreamReader::next_frame(std::uint64_t& frame_index, Heatmap& hm) {
  std::uint64_t idx;
  if (!read_le(impl_->in, idx)) {
    if (impl_->in.eof() && impl_->in.gcount() == 0) return false;
    throw FormatError(impl_->path + ": truncated frame header at byte " +
                      std::to_string(static_cast<long>(impl_->in.tellg())));
  }
  frame_index = idx;
  const auto& h = impl_->header;
  hm.joints = static_cast<int>(h.joints);
  hm.width = static_cast<int>(h.width);
  hm.height = static_cast<int>(h.height);
  const std::size_t count =
      static_cast<std::size_t>(h.joints) * h.width * h.height;
  hm.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    if (!read_le(impl_->in, bits)) {
      // report the last good byte offset
      impl_->in.clear();
      throw FormatError(impl_->path + ": truncated heatmap values at byte " +
                        std::to_string(static_cast<long>(impl_->in.tellg())));
    }
    float f;
    std::memcpy(&f, &bits, 4);
    hm.values[i] = f;
  }
  return true;
}

}  // namespace repose

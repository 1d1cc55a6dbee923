#include "repose/synth.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <random>

namespace repose {

namespace {

constexpr double kTau = 6.283185307179586;

// Rest offsets from the parent joint, meters, y-up, pelvis at origin.
const Eigen::Vector3d kRestOffsets[kNumJoints] = {
    {0, 0, 0},          // pelvis
    {-0.13, -0.04, 0},  // right_hip
    {0, -0.42, 0},      // right_knee
    {0, -0.44, 0},      // right_ankle
    {0.13, -0.04, 0},   // left_hip
    {0, -0.42, 0},      // left_knee
    {0, -0.44, 0},      // left_ankle
    {0, 0.22, 0},       // spine
    {0, 0.23, 0},       // thorax
    {0, 0.12, 0},       // neck
    {0, 0.12, 0},       // head
    {0.19, -0.02, 0},   // left_shoulder
    {0, -0.28, 0},      // left_elbow
    {0, -0.25, 0},      // left_wrist
    {-0.19, -0.02, 0},  // right_shoulder
    {0, -0.28, 0},      // right_elbow
    {0, -0.25, 0},      // right_wrist
};

Eigen::Matrix3d rot_x(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
}
Eigen::Matrix3d rot_z(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

}  // namespace

std::vector<CameraView> make_rig(int n_cameras, double radius_m,
                                 double height_m, double focal_px,
                                 int image_width, int image_height) {
  if (n_cameras < 2) throw ConfigError("rig needs at least 2 cameras");
  std::vector<CameraView> cams;
  for (int i = 0; i < n_cameras; ++i) {
    const double theta = kTau * i / n_cameras;
    CameraView cam;
    cam.id = "cam" + std::to_string(i);
    cam.width = image_width;
    cam.height = image_height;
    cam.K << focal_px, 0, image_width / 2.0,
             0, focal_px, image_height / 2.0,
             0, 0, 1;
    const Eigen::Vector3d center(radius_m * std::cos(theta), height_m,
                                 radius_m * std::sin(theta));
    const Eigen::Vector3d forward = (-center).normalized();
    const Eigen::Vector3d right =
        Eigen::Vector3d::UnitY().cross(forward).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    cam.R.row(0) = right;
    cam.R.row(1) = down;
    cam.R.row(2) = forward;
    cam.t = -cam.R * center;
    cam.validate();
    cams.push_back(cam);
  }
  return cams;
}

MotionKind motion_kind_from_name(const std::string& name) {
  if (name == "walk") return MotionKind::Walk;
  if (name == "squat") return MotionKind::Squat;
  if (name == "arm_raise") return MotionKind::ArmRaise;
  if (name == "leg_fold") return MotionKind::LegFold;
  throw ConfigError("unknown motion kind: " + name);
}

std::vector<Pose3D> synth_motion(const Skeleton& skel, double seconds,
                                 double fps, MotionKind kind,
                                 double tempo_hz) {
  skel.validate();
  if (seconds <= 0.0 || fps <= 0.0)
    throw ConfigError("seconds and fps must be positive");
  const long frames = static_cast<long>(std::llround(seconds * fps));
  std::vector<Pose3D> out;
  out.reserve(frames);
  for (long f = 0; f < frames; ++f) {
    const double t = f / fps;
    const double w = kTau * tempo_hz * t;
    const double s = std::sin(w), c = std::cos(w);
    const double h = 0.5 * (1.0 - c);  // 0..1 oscillation

    Eigen::Matrix3d local[kNumJoints];
    for (auto& m : local) m.setIdentity();
    Eigen::Vector3d root_shift = Eigen::Vector3d::Zero();

    switch (kind) {
      case MotionKind::Walk:
        local[1] = rot_x(0.5 * s);          // right hip swing
        local[4] = rot_x(-0.5 * s);         // left hip swing
        local[2] = rot_x(0.3 * (1.0 - c));  // knee flex
        local[5] = rot_x(0.3 * (1.0 + c));
        local[11] = rot_x(0.4 * s);   // counter arm swing
        local[14] = rot_x(-0.4 * s);
        root_shift.y() = 0.02 * std::sin(2.0 * w);
        break;
      case MotionKind::Squat:
        root_shift.y() = -0.22 * h;
        local[1] = local[4] = rot_x(0.9 * h);
        local[2] = local[5] = rot_x(-1.5 * h);
        local[11] = local[14] = rot_x(0.5 * h);  // arms forward
        break;
      case MotionKind::ArmRaise:
        local[11] = rot_z(-1.4 * h);  // arms out and up, sideways
        local[14] = rot_z(1.4 * h);
        break;
      case MotionKind::LegFold:
        local[2] = rot_x(-1.2 * h);
        local[5] = rot_x(-1.2 * (1.0 - h));
        local[1] = rot_x(0.3 * h);
        local[4] = rot_x(0.3 * (1.0 - h));
        break;
    }

    Pose3D pose = Pose3D::zero(f, t);
    Eigen::Matrix3d global_rot[kNumJoints];
    for (int j = 0; j < kNumJoints; ++j) {
      const int p = skel.parents[j];
      if (p < 0) {
        global_rot[j] = local[j];
        pose.joints[j] = root_shift;
      } else {
        global_rot[j] = global_rot[p] * local[j];
        pose.joints[j] = pose.joints[p] + global_rot[p] * kRestOffsets[j];
      }
    }
    out.push_back(pose);
  }
  return out;
}

Observations observe(const SynthScene& scene) {
  if (scene.cameras.empty() || scene.gt.empty())
    throw ConfigError("scene needs cameras and a trajectory");
  std::mt19937_64 rng(scene.seed);
  std::normal_distribution<double> pixel_noise(0.0, scene.noise.pixel_sigma);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Observations obs;
  obs.per_camera.resize(scene.cameras.size());
  for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
    const auto& cam = scene.cameras[c];
    for (const auto& gt : scene.gt) {
      Pose2D p2;
      p2.camera_id = cam.id;
      p2.frame_index = gt.frame_index;
      for (int j = 0; j < kNumJoints; ++j) {
        try {
          p2.joints[j] = project(cam, gt.joints[j]);
          p2.confidence[j] = 1.0;
        } catch (const GeometryError&) {
          p2.joints[j].setZero();
          p2.confidence[j] = 0.0;
          continue;
        }
        if (scene.noise.pixel_sigma > 0.0) {
          p2.joints[j].x() += pixel_noise(rng);
          p2.joints[j].y() += pixel_noise(rng);
        }
        if (scene.noise.occlusion_prob > 0.0 &&
            uniform(rng) < scene.noise.occlusion_prob)
          p2.confidence[j] = 0.0;
      }
      obs.per_camera[c].push_back(p2);
    }
  }
  return obs;
}

Heatmap render_heatmaps(const Pose2D& keypoints, int width, int height,
                        double sigma, double alpha) {
  if (sigma <= 0.0 || alpha <= 0.0)
    throw ConfigError("heatmap sigma and alpha must be positive");
  Heatmap hm;
  hm.joints = kNumJoints;
  hm.width = width;
  hm.height = height;
  hm.values.assign(static_cast<std::size_t>(kNumJoints) * width * height, 0.0);
  // Logits such that softmax at temperature alpha yields the
  // Gaussian bump exp(-d^2 / (2 sigma^2)) up to normalization.
  const double scale = 1.0 / (2.0 * sigma * sigma * alpha);
  for (int j = 0; j < kNumJoints; ++j) {
    const double cx = keypoints.joints[j].x();
    const double cy = keypoints.joints[j].y();
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        hm.at(j, y, x) = -d2 * scale;
      }
  }
  return hm;
}

DetectionScenario scenario_from_name(const std::string& name) {
  if (name == "single") return DetectionScenario::Single;
  if (name == "crossing") return DetectionScenario::Crossing;
  if (name == "tie") return DetectionScenario::Tie;
  if (name == "teleport") return DetectionScenario::Teleport;
  throw ConfigError("unknown detection scenario: " + name);
}

namespace {

Patch solid_patch(int w, int h, std::uint8_t r, std::uint8_t g,
                  std::uint8_t b) {
  Patch p;
  p.width = w;
  p.height = h;
  p.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
    p.rgb[i * 3] = r;
    p.rgb[i * 3 + 1] = g;
    p.rgb[i * 3 + 2] = b;
  }
  return p;
}

BBox subject_box(const CameraView& cam, const Pose3D& gt) {
  double x1 = 1e18, y1 = 1e18, x2 = -1e18, y2 = -1e18;
  for (int j = 0; j < kNumJoints; ++j) {
    const auto uv = project(cam, gt.joints[j]);
    x1 = std::min(x1, uv.x());
    y1 = std::min(y1, uv.y());
    x2 = std::max(x2, uv.x());
    y2 = std::max(y2, uv.y());
  }
  const double pad_x = 0.1 * (x2 - x1), pad_y = 0.1 * (y2 - y1);
  return {x1 - pad_x, y1 - pad_y, x2 + pad_x, y2 + pad_y, 0.9};
}

}  // namespace

std::vector<DetectionFrame> synth_detections(const SynthScene& scene,
                                             DetectionScenario scenario,
                                             std::size_t camera_index) {
  if (camera_index >= scene.cameras.size())
    throw ConfigError("camera index out of range");
  const auto& cam = scene.cameras[camera_index];
  std::mt19937_64 rng(scene.seed ^ 0xd1f2c3b4a5968778ULL);
  const Patch subject_patch = solid_patch(16, 16, 200, 60, 60);
  const Patch distractor_patch = solid_patch(16, 16, 60, 200, 60);

  std::vector<DetectionFrame> out;
  const long n = static_cast<long>(scene.gt.size());
  for (long f = 0; f < n; ++f) {
    DetectionFrame df;
    df.frame_index = f;
    BBox subj = subject_box(cam, scene.gt[f]);

    std::vector<std::pair<BBox, bool>> entries;  // (box, is_subject)
    switch (scenario) {
      case DetectionScenario::Single:
        entries.push_back({subj, true});
        break;
      case DetectionScenario::Crossing: {
        // distractor sweeps horizontally through the subject
        const double span = 3.0 * (subj.x2 - subj.x1);
        const double phase = static_cast<double>(f) / std::max(1L, n - 1);
        const double dx = -span / 2.0 + span * phase;
        BBox d = subj;
        d.x1 += dx;
        d.x2 += dx;
        d.score = 0.8;
        entries.push_back({subj, true});
        entries.push_back({d, false});
        break;
      }
      case DetectionScenario::Tie: {
        // permanent near-equal overlap with the remembered box
        BBox d = subj;
        const double dx = 0.25 * (subj.x2 - subj.x1);
        d.x1 += dx;
        d.x2 += dx;
        d.score = 0.8;
        entries.push_back({subj, true});
        entries.push_back({d, false});
        break;
      }
      case DetectionScenario::Teleport: {
        // subject's box jumps far away every 25 frames (m = 0 branch)
        if ((f / 25) % 2 == 1) {
          const double w = subj.x2 - subj.x1;
          subj.x1 += 3.0 * w;
          subj.x2 += 3.0 * w;
        }
        BBox d{10, 10, 60, 110, 0.8};  // static bystander
        entries.push_back({subj, true});
        entries.push_back({d, false});
        break;
      }
    }

    std::shuffle(entries.begin(), entries.end(), rng);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      df.boxes.push_back(entries[i].first);
      df.patches.push_back(entries[i].second ? subject_patch
                                             : distractor_patch);
      if (entries[i].second) df.subject_index = i;
    }
    out.push_back(df);
  }
  return out;
}

}  // namespace repose

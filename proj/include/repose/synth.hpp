#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repose/camera.hpp"
#include "repose/heatmap.hpp"
#include "repose/skeleton.hpp"
#include "repose/tracker.hpp"

namespace repose {

struct NoiseConfig {
  double pixel_sigma = 0.0;     // 2D Gaussian pixel noise
  double heatmap_sigma = 2.0;   // bump width, pixels
  double occlusion_prob = 0.0;  // per joint per view
};

struct SynthScene {
  std::vector<CameraView> cameras;
  std::vector<Pose3D> gt;
  double fps = 50.0;
  NoiseConfig noise;
  std::uint64_t seed = 0;
};

// Cameras evenly spaced on a circle, all aimed at the world origin.
std::vector<CameraView> make_rig(int n_cameras, double radius_m,
                                 double height_m, double focal_px,
                                 int image_width, int image_height);

enum class MotionKind { Walk, Squat, ArmRaise, LegFold };

MotionKind motion_kind_from_name(const std::string& name);

// Parametric kinematic routines over a fixed-bone-length figure
// centered at the origin; bone lengths are constant across frames.
std::vector<Pose3D> synth_motion(const Skeleton& skel, double seconds,
                                 double fps = 50.0,
                                 MotionKind kind = MotionKind::Walk,
                                 double tempo_hz = 0.5);

struct Observations {
  // per_camera[c][f]: keypoints of frame f seen by camera c.
  std::vector<std::vector<Pose2D>> per_camera;
};

// Noiseless mode (sigma 0): exact projections. Occluded or
// behind-camera joints get confidence 0.
Observations observe(const SynthScene& scene);

// Renders per-joint bumps as logits scaled so that the decoder's
// alpha-softmax reproduces a Gaussian heatmap of width sigma.
Heatmap render_heatmaps(const Pose2D& keypoints, int width, int height,
                        double sigma, double alpha);

enum class DetectionScenario { Single, Crossing, Tie, Teleport };

DetectionScenario scenario_from_name(const std::string& name);

struct DetectionFrame {
  long frame_index = 0;
  std::vector<BBox> boxes;
  std::vector<Patch> patches;
  std::size_t subject_index = 0;  // ground-truth identity
};

// Subject box = padded gt joint rectangle in the given camera;
// distractors and box order are seeded by the scene.
std::vector<DetectionFrame> synth_detections(const SynthScene& scene,
                                             DetectionScenario scenario,
                                             std::size_t camera_index = 0);

}  // namespace repose

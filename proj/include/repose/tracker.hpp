#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "repose/errors.hpp"

namespace repose {

struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // pixels
  double score = 1.0;

  double area() const { return (x2 - x1) * (y2 - y1); }
  bool valid() const {
    return x2 > x1 && y2 > y1 && score >= 0.0 && score <= 1.0;
  }
};

// Intersection over union; throws GeometryError for degenerate boxes.
double iou(const BBox& a, const BBox& b);

struct Patch {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // width*height*3, row-major
};

// Per-channel 8-bin RGB histogram, each channel L1-normalized.
struct ColorDescriptor {
  std::array<std::array<double, 8>, 3> hist{};
};

ColorDescriptor color_descriptor(const Patch& patch);

// Mean over channels of histogram intersection sum(min(a_i, b_i)).
double descriptor_similarity(const ColorDescriptor& a,
                             const ColorDescriptor& b);

enum class TrackDecision { Single, IoUWin, ColorFallback };

struct TrackState {
  BBox last_box;
  std::optional<ColorDescriptor> last_descriptor;
  long frames_tracked = 0;
  // Instrumentation: descriptors computed so far (fast-path check).
  long descriptor_evals = 0;

  static TrackState init(const BBox& box, const Patch* patch = nullptr);
};

struct TrackResult {
  BBox selected;
  std::size_t index = 0;  // into the input box list
  TrackDecision decision = TrackDecision::Single;
};

// One step of the single-subject decision tree:
//   n = 1                    -> that box (Single)
//   candidates: iou > gate   -> one candidate, or a clear top-1/top-2
//                               margin (>= tie_margin)      (IoUWin)
//   otherwise (incl. none)   -> best color-descriptor match (ColorFallback)
// Throws TrackingError when the fallback is needed but neither patches
// nor a stored descriptor exist.
TrackResult track_step(TrackState& state, const std::vector<BBox>& boxes,
                       const std::vector<Patch>* patches = nullptr,
                       double iou_gate = 0.2, double tie_margin = 0.3);

}  // namespace repose

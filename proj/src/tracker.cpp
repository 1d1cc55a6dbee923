#include "repose/tracker.hpp"

#include <algorithm>
#include <cmath>

namespace repose {

double iou(const BBox& a, const BBox& b) {
  if (!a.valid() || !b.valid()) throw GeometryError("degenerate bounding box");
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

ColorDescriptor color_descriptor(const Patch& patch) {
  if (patch.width < 1 || patch.height < 1 ||
      patch.rgb.size() !=
          static_cast<std::size_t>(patch.width) * patch.height * 3)
    throw TrackingError("empty or inconsistent patch");
  ColorDescriptor d;
  const std::size_t n = static_cast<std::size_t>(patch.width) * patch.height;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      d.hist[c][patch.rgb[i * 3 + c] >> 5] += 1.0;
  for (auto& channel : d.hist)
    for (auto& bin : channel) bin /= static_cast<double>(n);
  return d;
}

double descriptor_similarity(const ColorDescriptor& a,
                             const ColorDescriptor& b) {
  double sum = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 8; ++i) sum += std::min(a.hist[c][i], b.hist[c][i]);
  return sum / 3.0;
}

TrackState TrackState::init(const BBox& box, const Patch* patch) {
  TrackState s;
  s.last_box = box;
  if (patch) {
    s.last_descriptor = color_descriptor(*patch);
    s.descriptor_evals = 1;
  }
  return s;
}

namespace {

// iou desc, then detection score desc, then index asc
bool better(double iou_a, const BBox& a, std::size_t ia, double iou_b,
            const BBox& b, std::size_t ib) {
  if (iou_a != iou_b) return iou_a > iou_b;
  if (a.score != b.score) return a.score > b.score;
  return ia < ib;
}

}  // namespace

TrackResult track_step(TrackState& state, const std::vector<BBox>& boxes,
                       const std::vector<Patch>* patches, double iou_gate,
                       double tie_margin) {
  if (boxes.empty()) throw TrackingError("no detection boxes");

  auto commit = [&](std::size_t idx, TrackDecision decision,
                    const std::optional<ColorDescriptor>& desc) {
    state.last_box = boxes[idx];
    if (desc) {
      if (state.last_descriptor) {
        // blend 0.5 toward the new descriptor to resist drift
        for (int c = 0; c < 3; ++c)
          for (int i = 0; i < 8; ++i)
            state.last_descriptor->hist[c][i] =
                0.5 * state.last_descriptor->hist[c][i] + 0.5 * desc->hist[c][i];
      } else {
        state.last_descriptor = desc;
      }
    }
    ++state.frames_tracked;
    return TrackResult{boxes[idx], idx, decision};
  };

  if (boxes.size() == 1) return commit(0, TrackDecision::Single, std::nullopt);

  std::vector<double> overlaps(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i)
    overlaps[i] = iou(state.last_box, boxes[i]);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < boxes.size(); ++i)
    if (overlaps[i] > iou_gate) candidates.push_back(i);

  if (!candidates.empty()) {
    std::sort(candidates.begin(), candidates.end(),
              [&](std::size_t a, std::size_t b) {
                return better(overlaps[a], boxes[a], a, overlaps[b], boxes[b],
                              b);
              });
    if (candidates.size() == 1)
      return commit(candidates[0], TrackDecision::IoUWin, std::nullopt);
    if (overlaps[candidates[0]] - overlaps[candidates[1]] >= tie_margin)
      return commit(candidates[0], TrackDecision::IoUWin, std::nullopt);
  }

  // Color fallback over all boxes.
  if (!patches || patches->size() != boxes.size())
    throw TrackingError("color fallback requires per-box patches");
  if (!state.last_descriptor)
    throw TrackingError("color fallback requires a stored descriptor");

  std::size_t best = 0;
  double best_sim = -1.0;
  ColorDescriptor best_desc;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    ColorDescriptor d = color_descriptor((*patches)[i]);
    ++state.descriptor_evals;
    const double sim = descriptor_similarity(d, *state.last_descriptor);
    const bool wins =
        sim > best_sim ||
        (sim == best_sim && better(0, boxes[i], i, 0, boxes[best], best));
    if (wins) {
      best = i;
      best_sim = sim;
      best_desc = d;
    }
  }
  return commit(best, TrackDecision::ColorFallback, best_desc);
}

}  // namespace repose

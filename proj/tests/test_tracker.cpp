#include "doctest.h"
#include "repose/tracker.hpp"

using namespace repose;

namespace {

Patch solid(std::uint8_t r, std::uint8_t g, std::uint8_t b, int w = 8,
            int h = 8) {
  Patch p;
  p.width = w;
  p.height = h;
  p.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < p.rgb.size(); i += 3) {
    p.rgb[i] = r;
    p.rgb[i + 1] = g;
    p.rgb[i + 2] = b;
  }
  return p;
}

BBox box(double x1, double y1, double x2, double y2, double score = 1.0) {
  return {x1, y1, x2, y2, score};
}

}  // namespace

TEST_CASE("iou of two 10x10 boxes with a 5px shift is 1/7") {
  // intersection 25, union 100 + 100 - 25 = 175
  CHECK(iou(box(0, 0, 10, 10), box(5, 5, 15, 15)) ==
        doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(iou(box(0, 0, 10, 10), box(0, 0, 10, 10)) == doctest::Approx(1.0));
  CHECK(iou(box(0, 0, 10, 10), box(20, 20, 30, 30)) == 0.0);
}

TEST_CASE("iou is symmetric") {
  const BBox a = box(1, 2, 7, 9), b = box(3, 0, 12, 6);
  CHECK(iou(a, b) == doctest::Approx(iou(b, a)).epsilon(1e-15));
}

TEST_CASE("iou rejects degenerate boxes") {
  CHECK_THROWS_AS(iou(box(5, 5, 5, 10), box(0, 0, 1, 1)), GeometryError);
  CHECK_THROWS_AS(iou(box(0, 0, 1, 1), box(2, 2, 1, 3)), GeometryError);
  CHECK_THROWS_AS(iou(box(0, 0, 1, 1, 1.5), box(2, 2, 3, 3)), GeometryError);
}

TEST_CASE("color descriptor of a solid patch is a single unit bin") {
  const auto d = color_descriptor(solid(200, 60, 255));
  CHECK(d.hist[0][200 >> 5] == doctest::Approx(1.0));
  CHECK(d.hist[1][60 >> 5] == doctest::Approx(1.0));
  CHECK(d.hist[2][255 >> 5] == doctest::Approx(1.0));
  double total = 0.0;
  for (const auto& ch : d.hist)
    for (double v : ch) total += v;
  CHECK(total == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("descriptor similarity is histogram intersection") {
  const auto a = color_descriptor(solid(200, 60, 60));
  CHECK(descriptor_similarity(a, a) == doctest::Approx(1.0));
  // shares only the blue channel bin
  const auto b = color_descriptor(solid(60, 200, 60));
  CHECK(descriptor_similarity(a, b) == doctest::Approx(1.0 / 3.0));
  const auto c = color_descriptor(solid(0, 0, 200));
  CHECK(descriptor_similarity(a, c) == doctest::Approx(0.0));
}

TEST_CASE("color descriptor rejects inconsistent patches") {
  Patch p = solid(1, 2, 3);
  p.rgb.pop_back();
  CHECK_THROWS_AS(color_descriptor(p), TrackingError);
  CHECK_THROWS_AS(color_descriptor(Patch{}), TrackingError);
}

TEST_CASE("single detection short-circuits without descriptors") {
  TrackState state = TrackState::init(box(0, 0, 10, 10));
  const auto r = track_step(state, {box(1, 1, 11, 11)});
  CHECK(r.decision == TrackDecision::Single);
  CHECK(r.index == 0);
  CHECK(state.descriptor_evals == 0);
  CHECK(state.frames_tracked == 1);
  CHECK(state.last_box.x1 == 1);
}

TEST_CASE("clear iou winner never touches color descriptors") {
  TrackState state = TrackState::init(box(0, 0, 10, 10));
  // overlaps: ~0.82 and 0 -> margin above 0.3
  const std::vector<BBox> boxes = {box(1, 0, 10, 10), box(50, 50, 60, 60)};
  const auto r = track_step(state, boxes);  // no patches supplied at all
  CHECK(r.decision == TrackDecision::IoUWin);
  CHECK(r.index == 0);
  CHECK(state.descriptor_evals == 0);
  CHECK_FALSE(state.last_descriptor.has_value());
}

TEST_CASE("ambiguous overlap falls back to color over all boxes") {
  const Patch red = solid(200, 60, 60);
  TrackState state = TrackState::init(box(0, 0, 10, 10), &red);
  CHECK(state.descriptor_evals == 1);
  // both overlap the track comparably (margin < 0.3)
  const std::vector<BBox> boxes = {box(2, 0, 12, 10), box(-2, 0, 8, 10),
                                   box(100, 100, 110, 110)};
  const std::vector<Patch> patches = {solid(60, 200, 60), solid(200, 60, 60),
                                      solid(10, 10, 10)};
  const auto r = track_step(state, boxes, &patches);
  CHECK(r.decision == TrackDecision::ColorFallback);
  CHECK(r.index == 1);  // the red patch matches the stored descriptor
  CHECK(state.descriptor_evals == 1 + 3);  // fallback scans every box
}

TEST_CASE("fallback triggers when nothing clears the iou gate") {
  const Patch red = solid(200, 60, 60);
  TrackState state = TrackState::init(box(0, 0, 10, 10), &red);
  const std::vector<BBox> boxes = {box(40, 40, 50, 50), box(70, 70, 80, 80)};
  const std::vector<Patch> patches = {solid(0, 0, 250), solid(200, 60, 60)};
  const auto r = track_step(state, boxes, &patches);
  CHECK(r.decision == TrackDecision::ColorFallback);
  CHECK(r.index == 1);
}

TEST_CASE("fallback blends the stored descriptor halfway") {
  const Patch red = solid(200, 60, 60);
  TrackState state = TrackState::init(box(0, 0, 10, 10), &red);
  const std::vector<BBox> boxes = {box(40, 40, 50, 50), box(70, 70, 80, 80)};
  // winner patch: red in half the pixels, green in the rest
  Patch mixed = solid(200, 60, 60, 8, 8);
  for (int i = 0; i < 8 * 8 / 2; ++i) {
    mixed.rgb[i * 3] = 60;
    mixed.rgb[i * 3 + 1] = 200;
  }
  const std::vector<Patch> patches = {solid(0, 0, 250), mixed};
  track_step(state, boxes, &patches);
  // stored red bin: 0.5 * 1.0 + 0.5 * 0.5 = 0.75
  CHECK(state.last_descriptor->hist[0][200 >> 5] == doctest::Approx(0.75));
  CHECK(state.last_descriptor->hist[0][60 >> 5] == doctest::Approx(0.25));
}

TEST_CASE("fallback without patches or stored descriptor throws") {
  const std::vector<BBox> boxes = {box(40, 40, 50, 50), box(70, 70, 80, 80)};

  const Patch red = solid(200, 60, 60);
  TrackState no_patches = TrackState::init(box(0, 0, 10, 10), &red);
  CHECK_THROWS_AS(track_step(no_patches, boxes), TrackingError);

  TrackState no_descriptor = TrackState::init(box(0, 0, 10, 10));
  const std::vector<Patch> patches = {solid(1, 1, 1), solid(2, 2, 2)};
  CHECK_THROWS_AS(track_step(no_descriptor, boxes, &patches), TrackingError);
}

TEST_CASE("empty detection list throws") {
  TrackState state = TrackState::init(box(0, 0, 10, 10));
  CHECK_THROWS_AS(track_step(state, {}), TrackingError);
}

TEST_CASE("equal color similarity tie-breaks on score, then index") {
  const std::vector<BBox> far = {box(40, 40, 50, 50, 0.7),
                                 box(70, 70, 80, 80, 0.9)};
  const std::vector<Patch> same = {solid(200, 60, 60), solid(200, 60, 60)};

  const Patch red = solid(200, 60, 60);
  TrackState state = TrackState::init(box(0, 0, 10, 10), &red);
  auto r = track_step(state, far, &same);
  CHECK(r.decision == TrackDecision::ColorFallback);
  CHECK(r.index == 1);  // higher score wins the tie

  TrackState state2 = TrackState::init(box(0, 0, 10, 10), &red);
  const std::vector<BBox> equal_scores = {box(40, 40, 50, 50, 0.9),
                                          box(70, 70, 80, 80, 0.9)};
  r = track_step(state2, equal_scores, &same);
  CHECK(r.index == 0);  // then lowest index
}

TEST_CASE("a single candidate above the gate wins outright") {
  TrackState state = TrackState::init(box(0, 0, 10, 10));
  const std::vector<BBox> boxes = {box(0, 0, 10, 9), box(9.5, 0, 20, 10)};
  const auto r = track_step(state, boxes);
  CHECK(r.decision == TrackDecision::IoUWin);
  CHECK(r.index == 0);
}

// Copyright 2026 The yolopose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Tiny evaluation scenes with hand-enumerated AP/AR.
//
// Every scene uses people whose OKS against a detection is exactly 1 (copied
// keypoints), exactly 0 (keypoints 10^4 px away, exp underflows), or an exact
// ratio m/10 (10 labeled keypoints, m copied and 10 - m far). With the 101
// point recall grid, a curve that keeps precision p up to recall r contributes
// p * (number of grid points <= r) / 101.

#include <string>
#include <vector>

#include "yolopose/core.hpp"
#include "yolopose/evaluator.hpp"

namespace yolopose::testing {

struct EvalCase {
  std::string name;
  Dataset gt;
  std::vector<Detection> dets;
  AreaRange range = AreaRange::all();
  EvalParams params;
  double ap, ap50, ap75, ar;
};

inline PoseInstance person(std::int64_t image_id, std::int64_t id, double x0,
                           double y0, double area = 200.0 * 100.0,
                           int labeled = kNumKeypoints) {
  PoseInstance g;
  g.image_id = image_id;
  g.id = id;
  g.bbox = BBox::from_top_left(x0, y0, 100.0, 200.0);
  g.area = area;
  for (int n = 0; n < kNumKeypoints; ++n) {
    g.keypoints[n] = {x0 + 5.0 * n, y0 + 10.0 * n, n < labeled ? 2 : 0};
  }
  return g;
}

/// Detection on `g` whose first `exact` keypoints are copied and the rest are
/// moved 10^4 px away: far enough for exp to underflow, near enough for the
/// keypoint extent to stay inside the "all" area range.
inline Detection guess(const PoseInstance& g, double score, int exact) {
  Detection d;
  d.image_id = g.image_id;
  d.bbox = g.bbox;
  d.box_conf = score;
  d.class_conf = 1.0;
  for (int n = 0; n < kNumKeypoints; ++n) {
    const double off = n < exact ? 0.0 : 1e4;
    d.keypoints[n] = {g.keypoints[n].x + off, g.keypoints[n].y + off, 0.8, true};
  }
  return d;
}

inline Dataset images(int count) {
  Dataset ds;
  for (int k = 1; k <= count; ++k) ds.images.push_back({k, 640, 640, ""});
  return ds;
}

inline std::vector<EvalCase> eval_cases() {
  std::vector<EvalCase> cases;

  {  // one exact match: every metric 1
    EvalCase c{"perfect", images(1), {}, {}, {}, 1.0, 1.0, 1.0, 1.0};
    c.gt.instances = {person(1, 1, 50, 50)};
    c.dets = {guess(c.gt.instances[0], 0.9, 17)};
    cases.push_back(c);
  }
  {  // 10 labeled, 7 exact: OKS 0.7 matches at 0.50..0.70, 5 of 10 thresholds
    EvalCase c{"oks_0.7", images(1), {}, {}, {}, 0.5, 1.0, 0.0, 0.5};
    c.gt.instances = {person(1, 1, 50, 50, 20000.0, 10)};
    c.dets = {guess(c.gt.instances[0], 0.6, 7)};
    cases.push_back(c);
  }
  {  // a gt and no detection
    EvalCase c{"missed", images(1), {}, {}, {}, 0.0, 0.0, 0.0, 0.0};
    c.gt.instances = {person(1, 1, 50, 50)};
    cases.push_back(c);
  }
  {  // detections but no gt: sentinel -1
    EvalCase c{"no_gt", images(1), {}, {}, {}, -1.0, -1.0, -1.0, -1.0};
    c.dets = {guess(person(1, 1, 50, 50), 0.9, 17)};
    cases.push_back(c);
  }
  {  // TP then duplicate FP: precision 1 at recall 1 is already reached
    EvalCase c{"duplicate_after", images(1), {}, {}, {}, 1.0, 1.0, 1.0, 1.0};
    c.gt.instances = {person(1, 1, 50, 50)};
    c.dets = {guess(c.gt.instances[0], 0.9, 17), guess(c.gt.instances[0], 0.8, 17)};
    cases.push_back(c);
  }
  {  // FP ranked above the TP: precision 1/2 everywhere
    EvalCase c{"fp_first", images(1), {}, {}, {}, 0.5, 0.5, 0.5, 1.0};
    c.gt.instances = {person(1, 1, 50, 50)};
    c.dets = {guess(c.gt.instances[0], 0.9, 0), guess(c.gt.instances[0], 0.8, 17)};
    cases.push_back(c);
  }
  {  // two images: TP (0.9) then FP (0.8); recall stops at 1/2, 51 grid points
    const double ap = 51.0 / 101.0;
    EvalCase c{"half_recall", images(2), {}, {}, {}, ap, ap, ap, 0.5};
    c.gt.instances = {person(1, 1, 50, 50), person(2, 2, 50, 50)};
    c.dets = {guess(c.gt.instances[0], 0.9, 17), guess(c.gt.instances[1], 0.8, 0)};
    cases.push_back(c);
  }
  {  // TP, FP, TP: precision 1 to recall 1/2 (51 points), then 2/3 (50 points)
    const double ap = (51.0 + 50.0 * 2.0 / 3.0) / 101.0;
    EvalCase c{"tp_fp_tp", images(1), {}, {}, {}, ap, ap, ap, 1.0};
    c.gt.instances = {person(1, 1, 50, 50), person(1, 2, 400, 300)};
    c.dets = {guess(c.gt.instances[0], 0.9, 17), guess(c.gt.instances[0], 0.8, 0),
              guess(c.gt.instances[1], 0.7, 17)};
    cases.push_back(c);
  }
  {  // a crowd region absorbs the top detection, which then counts for nothing
    EvalCase c{"crowd_ignored", images(1), {}, {}, {}, 1.0, 1.0, 1.0, 1.0};
    PoseInstance crowd = person(1, 2, 400, 300);
    crowd.iscrowd = true;
    c.gt.instances = {person(1, 1, 50, 50), crowd};
    c.dets = {guess(crowd, 0.9, 17), guess(c.gt.instances[0], 0.8, 17)};
    cases.push_back(c);
  }
  {  // large range: the small person is ignored, as is the small stray detection
    EvalCase c{"large_range", images(1), {}, AreaRange::large(), {}, 1.0, 1.0, 1.0, 1.0};
    c.gt.instances = {person(1, 1, 50, 50, 2000.0), person(1, 2, 400, 300, 20000.0)};
    Detection stray = guess(person(1, 3, 300, 50), 0.95, 17);
    for (int n = 0; n < kNumKeypoints; ++n) {
      stray.keypoints[n].x = 300.0 + n;
      stray.keypoints[n].y = 50.0 + n;
    }
    c.dets = {stray, guess(c.gt.instances[0], 0.9, 17), guess(c.gt.instances[1], 0.8, 17)};
    cases.push_back(c);
  }
  {  // one detection allowed per image: the FP ranked first is all that remains
    EvalCase c{"max_det_1", images(1), {}, {}, {}, 0.0, 0.0, 0.0, 0.0};
    c.params.max_detections = 1;
    c.gt.instances = {person(1, 1, 50, 50)};
    c.dets = {guess(c.gt.instances[0], 0.9, 0), guess(c.gt.instances[0], 0.8, 17)};
    cases.push_back(c);
  }
  {  // OKS 0.8 (score 0.9) and OKS 1 (score 0.8) compete: the first wins up to
     // 0.80 (7 thresholds, AP 1); above, only the second matches (3 thresholds,
     // precision 1/2)
    EvalCase c{"competing", images(1), {}, {}, {}, (7.0 + 1.5) / 10.0, 1.0, 1.0, 1.0};
    c.gt.instances = {person(1, 1, 50, 50, 20000.0, 10)};
    c.dets = {guess(c.gt.instances[0], 0.9, 8), guess(c.gt.instances[0], 0.8, 17)};
    cases.push_back(c);
  }
  {  // an unlabeled gt is ignored; a detection inside its box is absorbed by it
    EvalCase c{"unlabeled_ignored", images(1), {}, {}, {}, 1.0, 1.0, 1.0, 1.0};
    c.gt.instances = {person(1, 1, 50, 50), person(1, 2, 400, 300, 20000.0, 0)};
    Detection inside = guess(c.gt.instances[1], 0.9, 17);
    for (auto& k : inside.keypoints) {
      k.x = 450.0;
      k.y = 400.0;
    }
    c.dets = {inside, guess(c.gt.instances[0], 0.8, 17)};
    cases.push_back(c);
  }
  return cases;
}

}  // namespace yolopose::testing

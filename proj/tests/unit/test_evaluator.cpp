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


#include <algorithm>
#include <random>

#include "../common/eval_cases.hpp"
#include "../common/oracles.hpp"
#include "doctest.h"
#include "yolopose/evaluator.hpp"

using namespace yolopose;
using yolopose::testing::eval_cases;

namespace {

bool same_report(const EvalReport& a, const EvalReport& b) {
  if (a.ap != b.ap || a.ap50 != b.ap50 || a.ap75 != b.ap75 || a.ar != b.ar ||
      a.ap_large != b.ap_large || a.curves.size() != b.curves.size()) {
    return false;
  }
  for (std::size_t t = 0; t < a.curves.size(); ++t) {
    if (a.curves[t].precision != b.curves[t].precision || a.curves[t].recall != b.curves[t].recall) {
      return false;
    }
  }
  return true;
}

// A random scene with a mix of close, loose and spurious detections.
std::pair<Dataset, std::vector<Detection>> random_scene(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 6.0);
  Dataset ds = testing::images(3);
  std::vector<Detection> dets;
  std::int64_t id = 1;
  for (const auto& im : ds.images) {
    for (int p = 0; p < 3; ++p) {
      PoseInstance g = testing::random_instance(rng);
      g.image_id = im.id;
      g.id = id++;
      ds.instances.push_back(g);
      if (u(rng) < 0.8) {
        Detection d = testing::copy_of(g, u(rng));
        for (auto& k : d.keypoints) {
          k.x += jitter(rng) * u(rng) * 4;
          k.y += jitter(rng) * u(rng) * 4;
        }
        dets.push_back(d);
      }
    }
    Detection stray = testing::copy_of(testing::random_instance(rng), u(rng));
    stray.image_id = im.id;
    dets.push_back(stray);
  }
  return {ds, dets};
}

}  // namespace

TEST_SUITE("evaluator") {

TEST_CASE("hand-enumerated cases") {
  const auto cases = eval_cases();
  CHECK(cases.size() >= 10);
  for (const auto& c : cases) {
    INFO(c.name);
    const EvalReport r = evaluate(c.gt, c.dets, c.range, c.params);
    CHECK(std::abs(r.ap - c.ap) < 1e-9);
    CHECK(std::abs(r.ap50 - c.ap50) < 1e-9);
    CHECK(std::abs(r.ap75 - c.ap75) < 1e-9);
    CHECK(std::abs(r.ar - c.ar) < 1e-9);
  }
}

TEST_CASE("matching follows thresholds and score order") {
  const PoseInstance g = testing::person(1, 1, 50, 50, 20000.0, 10);
  const std::vector<PoseInstance> gts = {g};
  const Detection d7 = testing::guess(g, 0.6, 7);
  CHECK(evaluation_oks(d7, g, KptWeights::coco()) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(match_image(gts, std::vector{d7}, 0.70).gt_index[0] == 0);
  CHECK(match_image(gts, std::vector{d7}, 0.75).gt_index[0] == -1);
  const Detection better = testing::guess(g, 0.9, 8);
  const auto m = match_image(gts, std::vector{better, d7}, 0.5);
  CHECK(m.gt_index[0] == 0);
  CHECK(m.gt_index[1] == -1);
}

TEST_CASE("detection area comes from the keypoint extent") {
  Detection d;
  for (int n = 0; n < kNumKeypoints; ++n) d.keypoints[n] = {10.0 + n, 20.0 + 2 * n, 0.1, true};
  CHECK(detection_area(d) == 16.0 * 32.0);
}

TEST_CASE("ap is non-increasing in the oks threshold") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [ds, dets] = random_scene(rng);
    const EvalReport r = evaluate(ds, dets);
    auto ap_at = [&](const PrCurve& c) {
      double s = 0.0;
      for (double p : c.precision) s += p;
      return s / c.precision.size();
    };
    for (std::size_t t = 1; t < r.curves.size(); ++t) {
      CHECK(ap_at(r.curves[t - 1]) >= ap_at(r.curves[t]));
      CHECK(r.curves[t - 1].recall >= r.curves[t].recall);
    }
  }
}

TEST_CASE("a lower-scored duplicate never raises ap") {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto [ds, dets] = random_scene(rng);
    const EvalReport base = evaluate(ds, dets);
    const auto matches = match_image(ds.instances, dets, 0.5);
    for (std::size_t k = 0; k < dets.size(); ++k) {
      if (matches.gt_index[k] < 0) continue;
      auto more = dets;
      Detection dup = dets[k];
      dup.box_conf *= u(rng);
      more.push_back(dup);
      CHECK(evaluate(ds, more).ap <= base.ap + 1e-15);
      break;
    }
  }
}

TEST_CASE("detection order does not matter when scores differ") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    auto [ds, dets] = random_scene(rng);
    const EvalReport base = evaluate(ds, dets);
    std::shuffle(dets.begin(), dets.end(), rng);
    CHECK(same_report(evaluate(ds, dets), base));
  }
}

TEST_CASE("keypoint confidences do not affect any metric") {
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto [ds, dets] = random_scene(rng);
    const EvalReport base = evaluate(ds, dets, AreaRange::all());
    const EvalReport base_l = evaluate(ds, dets, AreaRange::large());
    for (auto& d : dets)
      for (auto& k : d.keypoints) {
        k.conf = u(rng);
        k.present = k.conf > 0.5;
      }
    CHECK(same_report(evaluate(ds, dets, AreaRange::all()), base));
    CHECK(same_report(evaluate(ds, dets, AreaRange::large()), base_l));
  }
}

}  // TEST_SUITE

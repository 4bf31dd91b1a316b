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

#include <cmath>
#include <random>

#include "../common/oracles.hpp"
#include "doctest.h"
#include "yolopose/core.hpp"

using namespace yolopose;
using yolopose::testing::ciou_oracle;
using yolopose::testing::random_box;

TEST_SUITE("core") {

TEST_CASE("iou of identical, disjoint and half-shifted unit boxes") {
  const BBox a{0.5, 0.5, 1.0, 1.0};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BBox{5.0, 5.0, 1.0, 1.0}) == 0.0);
  // intersection 0.5, union 1.5
  CHECK(iou(a, BBox{1.0, 0.5, 1.0, 1.0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(iou(BBox{0, 0, 0, 0}, BBox{0, 0, 0, 0}) == 0.0);
}

TEST_CASE("iou is symmetric and bounded") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 2000; ++t) {
    const BBox a = random_box(rng), b = random_box(rng);
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("ciou agrees with a step-by-step oracle") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 2000; ++t) {
    const BBox a = random_box(rng), b = random_box(rng);
    CHECK(std::abs(ciou(a, b) - ciou_oracle(a, b)) < 1e-9);
  }
}

TEST_CASE("ciou equals iou for concentric boxes of equal aspect") {
  const BBox a{10, 20, 4, 8};
  const BBox b{10, 20, 2, 4};
  CHECK(ciou(a, a) == 1.0);
  CHECK(ciou(a, b) == doctest::Approx(iou(a, b)).epsilon(1e-15));
}

// rho^2 / c^2 < 1 and alpha * v = v^2 / ((1 - iou) + v) <= 1/2 once the
// boxes are disjoint, so 1 - ciou lies in [0, 2.5).
TEST_CASE("ciou never exceeds iou and the loss stays in [0, 2.5)") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 2000; ++t) {
    const BBox a = random_box(rng), b = random_box(rng);
    const double c = ciou(a, b);
    CHECK(c <= iou(a, b) + 1e-15);
    CHECK(1.0 - c >= 0.0);
    CHECK(1.0 - c < 2.5);
  }
}

TEST_CASE("far-apart boxes of opposite aspect push the loss past 2") {
  const BBox wide{0.0, 0.0, 100.0, 1.0};
  const BBox tall{1000.0, 1000.0, 1.0, 100.0};
  const double loss = 1.0 - ciou(wide, tall);
  CHECK(loss > 2.0);
  CHECK(loss == doctest::Approx(1.0 - ciou_oracle(wide, tall)).epsilon(1e-12));
}

TEST_CASE("iou and ciou are translation and scale invariant") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int t = 0; t < 500; ++t) {
    const BBox a = random_box(rng), b = random_box(rng);
    const double dx = shift(rng), dy = shift(rng);
    const BBox at{a.cx + dx, a.cy + dy, a.w, a.h};
    const BBox bt{b.cx + dx, b.cy + dy, b.w, b.h};
    CHECK(std::abs(iou(at, bt) - iou(a, b)) < 1e-12);
    CHECK(std::abs(ciou(at, bt) - ciou(a, b)) < 1e-12);
    for (double g : {0.1, 2.0, 10.0}) {
      const BBox as{a.cx * g, a.cy * g, a.w * g, a.h * g};
      const BBox bs{b.cx * g, b.cy * g, b.w * g, b.h * g};
      CHECK(std::abs(iou(as, bs) - iou(a, b)) < 1e-9);
      CHECK(std::abs(ciou(as, bs) - ciou(a, b)) < 1e-9);
    }
  }
}

TEST_CASE("ciou survives a zero-height box") {
  const double c = ciou(BBox{0, 0, 4, 0}, BBox{1, 1, 2, 2});
  CHECK(std::isfinite(c));
}

TEST_CASE("grid sizes follow the strides") {
  const auto spec = AnchorSpec::defaults();
  const auto g = build_grid(spec, 960);
  CHECK(g[0] == GridSize{120, 120});
  CHECK(g[3] == GridSize{15, 15});
  CHECK_THROWS_AS(build_grid(spec, 961), Error);
  CHECK_THROWS_AS(build_grid(spec, 0), Error);
}

TEST_CASE("anchor spec validation") {
  auto spec = AnchorSpec::defaults();
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.max_stride() == 64);
  spec.scales[2].stride = 16;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = AnchorSpec::defaults();
  spec.scales[1].anchors[0].h = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("keypoint weights default to twice the COCO sigmas") {
  const double sigmas[kNumKeypoints] = {0.026, 0.025, 0.025, 0.035, 0.035, 0.079,
                                        0.079, 0.072, 0.072, 0.062, 0.062, 0.107,
                                        0.107, 0.087, 0.087, 0.089, 0.089};
  const auto w = KptWeights::coco();
  for (int n = 0; n < kNumKeypoints; ++n) CHECK(w.k[n] == 2.0 * sigmas[n]);
  KptWeights bad = w;
  bad.k[4] = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("sigmoid and logit are stable at the extremes") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(std::isfinite(sigmoid(-1e308)));
  for (double p : {1e-12, 0.25, 0.5, 0.9, 1.0 - 1e-9}) {
    CHECK(sigmoid(logit(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("box helpers") {
  const BBox b = BBox::from_top_left(10, 20, 30, 40);
  CHECK(b.cx == 25.0);
  CHECK(b.cy == 40.0);
  CHECK(b.x1() == 10.0);
  CHECK(b.y2() == 60.0);
  CHECK(b.area() == 1200.0);
}

}  // TEST_SUITE

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


#include <random>
#include <set>

#include "../common/oracles.hpp"
#include "doctest.h"
#include "yolopose/assigner.hpp"

using namespace yolopose;

namespace {

const AnchorSpec kSpec = AnchorSpec::defaults();

PoseInstance box_instance(double cx, double cy, double w, double h) {
  PoseInstance g;
  g.bbox = {cx, cy, w, h};
  g.area = w * h;
  for (auto& k : g.keypoints) k = {cx, cy, 2};
  return g;
}

}  // namespace

TEST_SUITE("assigner") {

TEST_CASE("center at (100, 100) lands in cell (12, 12) at stride 8") {
  const auto& a0 = kSpec.scales[0].anchors[0];
  const PoseInstance g = box_instance(100.0, 100.0, a0.w, a0.h);
  const auto out = assign(std::span(&g, 1), kSpec, 640);
  bool found = false;
  for (const auto& a : out) {
    if (a.scale_index == 0) {
      CHECK(a.i == 12);
      CHECK(a.j == 12);
      found = found || a.anchor_index == 0;
    }
  }
  CHECK(found);
}

TEST_CASE("a box far larger than every anchor at a scale is not assigned there") {
  const auto& a0 = kSpec.scales[0].anchors[0];
  const PoseInstance g = box_instance(320.0, 320.0, 100.0 * a0.w, 100.0 * a0.h);
  for (const auto& a : assign(std::span(&g, 1), kSpec, 640)) CHECK(a.scale_index != 0);
}

TEST_CASE("invalid inputs are rejected") {
  const PoseInstance outside = box_instance(700.0, 100.0, 20.0, 20.0);
  CHECK_THROWS_AS(assign(std::span(&outside, 1), kSpec, 640), Error);
  const PoseInstance flat = box_instance(100.0, 100.0, 20.0, 0.0);
  CHECK_THROWS_AS(assign(std::span(&flat, 1), kSpec, 640), Error);
  const PoseInstance ok = box_instance(100.0, 100.0, 20.0, 20.0);
  CHECK_THROWS_AS(assign(std::span(&ok, 1), kSpec, 640, {4.5, false}), Error);
  CHECK_THROWS_AS(assign(std::span(&ok, 1), kSpec, 640, {1.0, false}), Error);
  CHECK_NOTHROW(assign(std::span(&ok, 1), kSpec, 640, {4.0, false}));
}

TEST_CASE("anchor ratio test") {
  const AnchorShape a{20.0, 40.0};
  CHECK(anchor_matches({0, 0, 20.0, 40.0}, a, 4.0));
  CHECK(anchor_matches({0, 0, 79.0, 40.0}, a, 4.0));
  CHECK_FALSE(anchor_matches({0, 0, 80.0, 40.0}, a, 4.0));
  CHECK_FALSE(anchor_matches({0, 0, 20.0, 9.9}, a, 4.0));
  CHECK_FALSE(anchor_matches({0, 0, 0.0, 40.0}, a, 4.0));
}

TEST_CASE("assignments satisfy the ratio and cell rules, encode, and repeat exactly") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PoseInstance> gts;
    for (int k = 0; k < 1 + trial % 5; ++k) gts.push_back(testing::random_instance(rng, 640));
    for (bool neighbors : {false, true}) {
      const AssignOptions opts{4.0, neighbors};
      const auto out = assign(gts, kSpec, 640, opts);
      CHECK(out == assign(gts, kSpec, 640, opts));
      std::set<Slot> slots;
      for (const auto& a : out) {
        const auto& g = gts[a.gt_index];
        const auto& sc = kSpec.scales[a.scale_index];
        CHECK(anchor_matches(g.bbox, sc.anchors[a.anchor_index], 4.0));
        const double ox = g.bbox.cx / sc.stride - a.j;
        const double oy = g.bbox.cy / sc.stride - a.i;
        if (neighbors) {
          CHECK(ox > -0.5);
          CHECK(ox < 1.5);
          CHECK(oy > -0.5);
          CHECK(oy < 1.5);
        } else {
          CHECK(ox >= 0.0);
          CHECK(ox < 1.0);
          CHECK(oy >= 0.0);
          CHECK(oy < 1.0);
        }
        CHECK(slots.insert(a.slot()).second);
        CHECK_NOTHROW(encode(g, a.slot(), kSpec));
      }
    }
  }
}

TEST_CASE("slot collisions go to the larger instance") {
  std::vector<PoseInstance> gts = {box_instance(100.0, 100.0, 30.0, 60.0),
                                   box_instance(101.0, 101.0, 40.0, 70.0)};
  const auto out = assign(gts, kSpec, 640);
  std::set<Slot> small_slots;
  for (const auto& a : assign(std::span(gts.data(), 1), kSpec, 640)) small_slots.insert(a.slot());
  int lost = 0;
  for (const auto& s : small_slots) {
    for (const auto& a : out) {
      if (a.slot() == s && a.gt_index == 1) ++lost;
    }
  }
  CHECK(lost > 0);
  for (const auto& a : out) {
    if (a.gt_index == 0) CHECK(small_slots.count(a.slot()) == 1);
  }
}

TEST_CASE("neighbor cells add the two nearest cells") {
  const auto& a0 = kSpec.scales[0].anchors[0];
  const PoseInstance g = box_instance(8 * 12 + 2.0, 8 * 12 + 6.0, a0.w, a0.h);
  const auto plain = assign(std::span(&g, 1), kSpec, 640);
  const auto wide = assign(std::span(&g, 1), kSpec, 640, {4.0, true});
  CHECK(wide.size() == 3 * plain.size());
  std::set<std::pair<int, int>> cells;
  for (const auto& a : wide) {
    if (a.scale_index == 0 && a.anchor_index == 0) cells.insert({a.i, a.j});
  }
  CHECK(cells == std::set<std::pair<int, int>>{{12, 12}, {12, 11}, {13, 12}});
}

}  // TEST_SUITE

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

#include "yolopose/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace yolopose {

const std::array<std::string_view, kNumKeypoints> kKeypointNames = {
    "nose",          "left_eye",       "right_eye",  "left_ear",
    "right_ear",     "left_shoulder",  "right_shoulder",
    "left_elbow",    "right_elbow",    "left_wrist", "right_wrist",
    "left_hip",      "right_hip",      "left_knee",  "right_knee",
    "left_ankle",    "right_ankle"};

const std::vector<std::array<int, 2>> kSkeleton = {
    {16, 14}, {14, 12}, {17, 15}, {15, 13}, {12, 13}, {6, 12}, {7, 13},
    {6, 7},   {6, 8},   {7, 9},   {8, 10},  {9, 11},  {2, 3},  {1, 2},
    {1, 3},   {2, 4},   {3, 5},   {4, 6},   {5, 7}};

int PoseInstance::num_labeled() const noexcept {
  return static_cast<int>(std::count_if(
      keypoints.begin(), keypoints.end(),
      [](const GtKeypoint& k) { return k.labeled(); }));
}

AnchorSpec AnchorSpec::defaults() {
  AnchorSpec spec;
  spec.scales[0] = {8, {{{19, 27}, {44, 40}, {38, 94}}}};
  spec.scales[1] = {16, {{{96, 68}, {86, 152}, {180, 137}}}};
  spec.scales[2] = {32, {{{140, 301}, {303, 264}, {238, 542}}}};
  spec.scales[3] = {64, {{{436, 615}, {739, 380}, {925, 792}}}};
  return spec;
}

void AnchorSpec::validate() const {
  int prev = 0;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const auto& sc = scales[s];
    if (sc.stride <= prev) {
      throw Error("anchor spec: strides must be positive and strictly "
                  "increasing (scale " + std::to_string(s) + ")");
    }
    prev = sc.stride;
    for (const auto& a : sc.anchors) {
      if (!(a.w > 0.0) || !(a.h > 0.0)) {
        throw Error("anchor spec: non-positive anchor at scale " +
                    std::to_string(s));
      }
    }
  }
}

KptWeights KptWeights::coco() {
  constexpr std::array<double, kNumKeypoints> sigmas = {
      0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
      0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089};
  KptWeights w;
  for (int n = 0; n < kNumKeypoints; ++n) w.k[n] = 2.0 * sigmas[n];
  return w;
}

void KptWeights::validate() const {
  for (int n = 0; n < kNumKeypoints; ++n) {
    if (!(k[n] > 0.0) || !std::isfinite(k[n])) {
      throw Error("keypoint weights: k[" + std::to_string(n) +
                  "] must be positive");
    }
  }
}

std::array<GridSize, kNumScales> build_grid(const AnchorSpec& spec,
                                            int input_size) {
  spec.validate();
  if (input_size <= 0 || input_size % spec.max_stride() != 0) {
    throw Error("grid: input size " + std::to_string(input_size) +
                " is not a positive multiple of stride " +
                std::to_string(spec.max_stride()));
  }
  std::array<GridSize, kNumScales> grid;
  for (int s = 0; s < kNumScales; ++s) {
    const int n = input_size / spec.scales[s].stride;
    grid[s] = {n, n};
  }
  return grid;
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double ciou(const BBox& a, const BBox& b) noexcept {
  const double overlap = iou(a, b);

  const double dx = a.cx - b.cx;
  const double dy = a.cy - b.cy;
  const double rho2 = dx * dx + dy * dy;
  const double cw = std::max(a.x2(), b.x2()) - std::min(a.x1(), b.x1());
  const double ch = std::max(a.y2(), b.y2()) - std::min(a.y1(), b.y1());
  const double c2 = cw * cw + ch * ch;
  const double distance = c2 > 0.0 ? rho2 / c2 : 0.0;

  constexpr double k4OverPi2 = 4.0 / (std::numbers::pi * std::numbers::pi);
  const double da = std::atan(b.w / std::max(b.h, kAspectEps)) -
                    std::atan(a.w / std::max(a.h, kAspectEps));
  const double v = k4OverPi2 * da * da;
  const double alpha = v / ((1.0 - overlap) + v + kAlphaEps);

  return overlap - distance - alpha * v;
}

double sigmoid(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

}  // namespace yolopose

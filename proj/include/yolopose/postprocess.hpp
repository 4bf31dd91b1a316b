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

#include <vector>

#include "yolopose/codec.hpp"
#include "yolopose/core.hpp"

namespace yolopose {

struct PostprocessConfig {
  double conf_threshold = 0.25;
  double nms_iou_threshold = 0.65;
  /// Keypoints need a confidence strictly above this to stay present.
  double kpt_conf_threshold = 0.5;
  int max_detections = 20;

  void validate() const;
};

/// Greedy class-agnostic NMS on box IoU. Keeps the best remaining detection
/// and drops every other with IoU > `iou_threshold` against it. Output is
/// score-descending; equal scores keep input order.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

/// Score threshold, NMS, top-k, keypoint-confidence flagging, then mapping back
/// to source-image coordinates.
std::vector<Detection> postprocess(std::vector<Detection> dets,
                                   const PostprocessConfig& cfg,
                                   const LetterboxTransform& t);

}  // namespace yolopose

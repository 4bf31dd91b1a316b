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

#include "yolopose/postprocess.hpp"

#include <algorithm>

namespace yolopose {

void PostprocessConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(conf_threshold) || !unit(nms_iou_threshold) ||
      !unit(kpt_conf_threshold)) {
    throw Error("postprocess: thresholds must lie in [0, 1]");
  }
  if (max_detections <= 0) {
    throw Error("postprocess: max_detections must be positive");
  }
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.score() > b.score();
                   });
  std::vector<Detection> kept;
  std::vector<bool> suppressed(dets.size(), false);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t j = i + 1; j < dets.size(); ++j) {
      if (!suppressed[j] && iou(dets[i].bbox, dets[j].bbox) > iou_threshold) {
        suppressed[j] = true;
      }
    }
  }
  return kept;
}

std::vector<Detection> postprocess(std::vector<Detection> dets,
                                   const PostprocessConfig& cfg,
                                   const LetterboxTransform& t) {
  cfg.validate();
  std::erase_if(dets, [&](const Detection& d) {
    return d.score() < cfg.conf_threshold;
  });
  dets = nms(std::move(dets), cfg.nms_iou_threshold);
  if (dets.size() > static_cast<std::size_t>(cfg.max_detections)) {
    dets.resize(cfg.max_detections);
  }
  for (auto& d : dets) {
    for (auto& k : d.keypoints) k.present = k.conf > cfg.kpt_conf_threshold;
    d = unletterbox(d, t);
  }
  return dets;
}

}  // namespace yolopose

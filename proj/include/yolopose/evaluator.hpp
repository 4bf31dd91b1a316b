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

// ============================================================================
// OKS-based keypoint AP / AR following the COCO keypoint protocol:
//   - ground truths that are crowd, have no labeled keypoint, or fall outside
//     the area range are "ignore" gts;
//   - detections are matched greedily in score order to the unmatched gt of
//     highest OKS >= threshold, preferring regular gts over ignore gts;
//   - detections matched to ignore gts, and unmatched detections whose
//     keypoint extent lies outside the area range, count as neither TP nor FP;
//   - precision is made non-increasing and sampled on a 101-point recall grid.
// Predicted keypoint confidences play no part in any of this.
// ============================================================================

#include <cstddef>
#include <span>
#include <vector>

#include "yolopose/core.hpp"

namespace yolopose {

struct AreaRange {
  double lo = 0.0;
  double hi = 1e10;

  static constexpr AreaRange all() { return {0.0, 1e10}; }
  static constexpr AreaRange medium() { return {32.0 * 32.0, 96.0 * 96.0}; }
  static constexpr AreaRange large() { return {96.0 * 96.0, 1e10}; }

  [[nodiscard]] bool contains(double area) const noexcept {
    return area >= lo && area <= hi;
  }
};

struct EvalParams {
  std::vector<double> oks_thresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                        0.75, 0.80, 0.85, 0.90, 0.95};
  int max_detections = 20;
  KptWeights kpt_weights = KptWeights::coco();
};

/// Precision sampled at recall 0.00, 0.01, ..., 1.00 for one OKS threshold.
/// Entries are -1 when the range holds no regular ground truth.
struct PrCurve {
  double oks_threshold = 0.0;
  std::vector<double> precision;
  double recall = -1.0;
};

/// Metrics are in [0, 1], or -1 when no regular ground truth is in range.
struct EvalReport {
  double ap = -1.0;
  double ap50 = -1.0;
  double ap75 = -1.0;
  double ap_large = -1.0;
  double ar = -1.0;
  std::vector<PrCurve> curves;
};

/// OKS as used for evaluation. Identical to `oks()` when the gt has labeled
/// keypoints; otherwise falls back to distances from the gt box enlarged by
/// its own size on each side, as the reference evaluator does.
double evaluation_oks(const Detection& det, const PoseInstance& gt,
                      const KptWeights& weights);

/// Area of the detection's keypoint extent, used for area-range filtering.
double detection_area(const Detection& det) noexcept;

struct ImageMatches {
  /// Per detection: index into `gts` of the matched instance, or -1.
  std::vector<std::ptrdiff_t> gt_index;
  /// Per detection: excluded from both TP and FP.
  std::vector<bool> ignored;
};

/// Greedy matching for one image at one OKS threshold. `dets` must already be
/// sorted by descending score.
ImageMatches match_image(std::span<const PoseInstance> gts,
                         std::span<const Detection> dets, double threshold,
                         const KptWeights& weights = KptWeights::coco(),
                         const AreaRange& range = AreaRange::all());

/// Full evaluation over a dataset. `area_range` selects the range used for
/// ap/ap50/ap75/ar and the curves; ap_large always uses AreaRange::large().
/// Throws Error if a detection refers to an image outside `gt.images`.
EvalReport evaluate(const Dataset& gt, std::span<const Detection> dets,
                    const AreaRange& area_range = AreaRange::all(),
                    const EvalParams& params = {});

}  // namespace yolopose

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
// Core types shared by every yolopose module: boxes, keypoints, pose
// instances, detections, anchor layout and the box-overlap primitives.
// All coordinates are image pixels unless stated otherwise.
// ============================================================================

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace yolopose {

inline constexpr int kNumKeypoints = 17;
inline constexpr int kNumScales = 4;
inline constexpr int kAnchorsPerScale = 3;
/// Raw channels per anchor cell: box(4) + objectness + class + 17 x (x, y, conf).
inline constexpr int kNumChannels = 6 + 3 * kNumKeypoints;

/// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ----------------------------------------------------------------------------
// BBox - axis-aligned box in center form. Corner form is derived on demand.
// ----------------------------------------------------------------------------
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  [[nodiscard]] double area() const noexcept { return w * h; }
  [[nodiscard]] double x1() const noexcept { return cx - 0.5 * w; }
  [[nodiscard]] double y1() const noexcept { return cy - 0.5 * h; }
  [[nodiscard]] double x2() const noexcept { return cx + 0.5 * w; }
  [[nodiscard]] double y2() const noexcept { return cy + 0.5 * h; }

  /// COCO style [x_topleft, y_topleft, w, h].
  static BBox from_top_left(double x, double y, double w, double h) noexcept {
    return {x + 0.5 * w, y + 0.5 * h, w, h};
  }

  bool operator==(const BBox&) const = default;
};

/// Ground-truth keypoint with a COCO visibility flag
/// (0 = unlabeled / out of view, 1 = labeled but occluded, 2 = visible).
struct GtKeypoint {
  double x = 0.0;
  double y = 0.0;
  int v = 0;

  [[nodiscard]] bool labeled() const noexcept { return v > 0; }
  bool operator==(const GtKeypoint&) const = default;
};

using GtKeypoints = std::array<GtKeypoint, kNumKeypoints>;

struct PoseInstance {
  BBox bbox;
  GtKeypoints keypoints{};
  double area = 0.0;
  std::int64_t image_id = 0;
  std::int64_t id = 0;
  bool iscrowd = false;

  [[nodiscard]] int num_labeled() const noexcept;
};

struct PredKeypoint {
  double x = 0.0;
  double y = 0.0;
  double conf = 0.0;
  /// Cleared by post-processing when conf does not pass the keypoint
  /// threshold. Coordinates are kept either way.
  bool present = true;

  bool operator==(const PredKeypoint&) const = default;
};

using PredKeypoints = std::array<PredKeypoint, kNumKeypoints>;

struct Detection {
  BBox bbox;
  double box_conf = 0.0;
  double class_conf = 0.0;
  PredKeypoints keypoints{};
  std::int64_t image_id = 0;

  [[nodiscard]] double score() const noexcept { return box_conf * class_conf; }
  bool operator==(const Detection&) const = default;
};

struct ImageInfo {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;

  bool operator==(const ImageInfo&) const = default;
};

/// A ground-truth set: the image list (negatives included) and every
/// annotated person across those images.
struct Dataset {
  std::vector<ImageInfo> images;
  std::vector<PoseInstance> instances;
};

// ----------------------------------------------------------------------------
// Anchors
// ----------------------------------------------------------------------------
struct AnchorShape {
  double w = 0.0;
  double h = 0.0;
};

struct ScaleSpec {
  int stride = 0;
  std::array<AnchorShape, kAnchorsPerScale> anchors{};
};

/// Four detection scales with three anchor shapes each.
struct AnchorSpec {
  std::array<ScaleSpec, kNumScales> scales{};

  /// Strides {8, 16, 32, 64} with the usual P3-P6 anchor set.
  static AnchorSpec defaults();

  /// Throws Error unless strides are positive and strictly increasing and
  /// every anchor has positive size.
  void validate() const;

  [[nodiscard]] int max_stride() const noexcept { return scales.back().stride; }
};

/// Per-keypoint falloff constants k_n of the OKS kernel.
struct KptWeights {
  std::array<double, kNumKeypoints> k{};

  /// Twice the published COCO per-keypoint sigmas.
  static KptWeights coco();
  void validate() const;
};

/// COCO keypoint order.
extern const std::array<std::string_view, kNumKeypoints> kKeypointNames;
/// COCO person skeleton, 1-based keypoint indices.
extern const std::vector<std::array<int, 2>> kSkeleton;

struct GridSize {
  int rows = 0;
  int cols = 0;

  [[nodiscard]] int cells() const noexcept { return rows * cols; }
  bool operator==(const GridSize&) const = default;
};

/// Grid dimensions at every scale for a square input of `input_size` pixels.
/// Throws Error when the input is not divisible by the largest stride.
std::array<GridSize, kNumScales> build_grid(const AnchorSpec& spec,
                                            int input_size);

[[nodiscard]] double iou(const BBox& a, const BBox& b) noexcept;

/// Complete IoU: IoU - rho^2 / c^2 - alpha * v, where rho is the center
/// distance, c the diagonal of the smallest enclosing box and v the
/// aspect-ratio consistency term.
[[nodiscard]] double ciou(const BBox& a, const BBox& b) noexcept;

/// Height floor used inside the aspect-ratio arctan terms of CIoU.
inline constexpr double kAspectEps = 1e-9;
/// Guard added to the alpha denominator of CIoU.
inline constexpr double kAlphaEps = 1e-9;

[[nodiscard]] double sigmoid(double t) noexcept;
[[nodiscard]] double logit(double p) noexcept;

}  // namespace yolopose

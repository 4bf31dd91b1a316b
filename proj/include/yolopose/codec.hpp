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
// Head tensor layout, decode/encode between raw channels and detections, and
// letterbox geometry.
//
// Per anchor cell the 57 raw channels are
//   [t_x, t_y, t_w, t_h, t_obj, t_cls, (t_kx, t_ky, t_kconf) x 17]
// and decode as
//   cx = (2 sig(t_x) - 0.5 + j) * stride      w = (2 sig(t_w))^2 * anchor_w
//   kx = (2 t_kx     - 0.5 + j) * stride      kconf = sig(t_kconf)
// Keypoint coordinates are affine in the raw value, so a keypoint can land
// anywhere, including outside its own box.
// ============================================================================

#include <array>
#include <compare>
#include <span>
#include <vector>

#include "yolopose/core.hpp"

namespace yolopose {

namespace channel {
inline constexpr int kX = 0;
inline constexpr int kY = 1;
inline constexpr int kW = 2;
inline constexpr int kH = 3;
inline constexpr int kObj = 4;
inline constexpr int kCls = 5;
constexpr int kpt_x(int n) noexcept { return 6 + 3 * n; }
constexpr int kpt_y(int n) noexcept { return 7 + 3 * n; }
constexpr int kpt_conf(int n) noexcept { return 8 + 3 * n; }
}  // namespace channel

using ChannelVector = std::array<double, kNumChannels>;
using ChannelMask = std::array<bool, kNumChannels>;
using RawCell = std::span<const double, kNumChannels>;

/// One anchor slot of the head: scale index, grid row/col, anchor index.
struct Slot {
  int scale = 0;
  int i = 0;
  int j = 0;
  int anchor = 0;

  auto operator<=>(const Slot&) const = default;
};

/// Geometry needed to decode one anchor cell.
struct CellContext {
  int i = 0;
  int j = 0;
  double stride = 0.0;
  AnchorShape anchor;

  static CellContext of(const AnchorSpec& spec, const Slot& slot);
};

/// Raw output of one scale, dense [anchor=3, row, col, channel=57].
struct ScaleTensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  [[nodiscard]] std::size_t offset(int anchor, int i, int j) const noexcept {
    return ((static_cast<std::size_t>(anchor) * rows + i) * cols + j) *
           kNumChannels;
  }
  [[nodiscard]] std::span<double, kNumChannels> cell(int anchor, int i,
                                                     int j) noexcept {
    return std::span<double, kNumChannels>(data.data() + offset(anchor, i, j),
                                           kNumChannels);
  }
  [[nodiscard]] RawCell cell(int anchor, int i, int j) const noexcept {
    return RawCell(data.data() + offset(anchor, i, j), kNumChannels);
  }
  [[nodiscard]] std::size_t num_anchors() const noexcept {
    return static_cast<std::size_t>(kAnchorsPerScale) * rows * cols;
  }
};

/// Raw head output for one square input image, one ScaleTensor per scale.
struct HeadTensor {
  int input_size = 0;
  std::array<ScaleTensor, kNumScales> scales;

  /// All-zero tensor shaped for `spec` at `input_size`.
  static HeadTensor zeros(const AnchorSpec& spec, int input_size);

  /// Throws Error when shapes disagree with the grid implied by `spec`.
  void validate_shape(const AnchorSpec& spec) const;
  /// validate_shape plus a scan for non-finite values.
  void validate(const AnchorSpec& spec) const;

  [[nodiscard]] RawCell cell(const Slot& s) const noexcept {
    return scales[s.scale].cell(s.anchor, s.i, s.j);
  }
  [[nodiscard]] std::span<double, kNumChannels> cell(const Slot& s) noexcept {
    return scales[s.scale].cell(s.anchor, s.i, s.j);
  }
};

/// Decodes a single anchor cell.
Detection decode_cell(RawCell raw, const CellContext& ctx);

/// Decodes every anchor cell of every scale, unfiltered. Order: scale, anchor,
/// row, col.
std::vector<Detection> decode(const HeadTensor& heads, const AnchorSpec& spec);

/// Training target for one slot.
///
/// `values` holds raw-space targets for the box and keypoint coordinate
/// channels (so that decode_cell reproduces the ground truth) and
/// probability-space targets for the objectness, class and keypoint
/// confidence channels. `mask` is false on coordinate channels of unlabeled
/// keypoints; those channels carry no target.
struct EncodedTarget {
  ChannelVector values{};
  ChannelMask mask{};
};

/// Inverse of decode_cell for the ground truth assigned to `slot`. Throws Error
/// when the box center lies outside (-0.5, 1.5) cells of the slot or the box
/// is not within (0, 4) x the anchor size.
EncodedTarget encode(const PoseInstance& gt, const Slot& slot,
                     const AnchorSpec& spec);

/// Writes `target` into a raw cell so that it decodes back to the ground
/// truth. Probability targets are written as +/- `conf_logit`.
void write_target(const EncodedTarget& target,
                  std::span<double, kNumChannels> raw, double conf_logit);

// ----------------------------------------------------------------------------
// Letterbox
// ----------------------------------------------------------------------------
struct LetterboxTransform {
  double scale = 1.0;
  double pad_right = 0.0;
  double pad_bottom = 0.0;
  double src_w = 0.0;
  double src_h = 0.0;
  double dst = 0.0;

  static LetterboxTransform identity(double size) {
    return {1.0, 0.0, 0.0, size, size, size};
  }

  [[nodiscard]] double to_dst(double v) const noexcept { return v * scale; }
  [[nodiscard]] double to_src(double v) const noexcept { return v / scale; }
};

/// Aspect-preserving resize of the longer side to `dst`, padding the shorter
/// side at the bottom (landscape) or right (portrait).
LetterboxTransform letterbox(double src_w, double src_h, double dst);

/// Maps a detection from letterboxed coordinates back to the source image.
Detection unletterbox(const Detection& det, const LetterboxTransform& t);

/// Maps a ground-truth instance into letterboxed coordinates.
PoseInstance to_letterbox(const PoseInstance& gt, const LetterboxTransform& t);

}  // namespace yolopose

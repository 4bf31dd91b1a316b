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
// Pose training losses with analytic gradients w.r.t. the raw head channels.
//
//   L_total = sum over slots of
//             l_cls * L_cls + l_box * L_box + l_kpts * L_kpts
//           + l_kpts_conf * L_kpts_conf
//
//   L_box       = 1 - CIoU(decoded box, gt box)
//   L_kpts      = 1 - OKS, OKS = mean over labeled n of exp(-d_n^2 / (2 s^2 k_n^2))
//   L_kpts_conf = sum_n BCE(labeled_n, sig(t_kconf_n))
//   L_cls       = BCE(1, sig(t_obj)) + BCE(1, sig(t_cls))   matched slot
//               = BCE(0, sig(t_obj))                         unmatched anchor
//
// with s^2 the ground-truth area. Every per-slot function returns the value
// and its gradient over the 57 raw channels of the slot.
// ============================================================================

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "yolopose/assigner.hpp"
#include "yolopose/codec.hpp"
#include "yolopose/core.hpp"

namespace yolopose {

struct LossWeights {
  double cls = 0.5;
  double box = 0.05;
  double kpts = 0.1;
  double kpts_conf = 0.5;

  void validate() const;
};

enum class KptLossVariant {
  kOks,      ///< 1 - OKS
  kL1,       ///< sum |dx| + |dy| over labeled keypoints, pixels
  kScaleL1,  ///< the same sum divided by the object scale s = sqrt(area)
};

std::string_view to_string(KptLossVariant v) noexcept;
/// Accepts "oks", "l1", "scale_l1".
KptLossVariant parse_kpt_loss_variant(std::string_view name);

/// Value and gradient of one loss term over the raw channels of one slot.
struct SlotLoss {
  double value = 0.0;
  ChannelVector grad{};
};

/// Object keypoint similarity. Empty when `gt` has no labeled keypoint or a
/// non-positive area, since the similarity is undefined there.
std::optional<double> oks(std::span<const PredKeypoint, kNumKeypoints> pred,
                          const PoseInstance& gt, const KptWeights& weights);

/// Numerically stable BCE(y, sig(t)) computed from the logit.
[[nodiscard]] double bce_with_logit(double y, double t) noexcept;

/// 1 - OKS of the decoded keypoints. Throws Error when OKS is undefined.
SlotLoss loss_kpts(RawCell raw, const CellContext& ctx, const PoseInstance& gt,
                   const KptWeights& weights);
SlotLoss loss_kpts_l1(RawCell raw, const CellContext& ctx,
                      const PoseInstance& gt);
SlotLoss loss_kpts_scale_l1(RawCell raw, const CellContext& ctx,
                            const PoseInstance& gt);

/// 1 - CIoU of the decoded box. Throws Error on a degenerate gt box.
SlotLoss loss_box(RawCell raw, const CellContext& ctx, const BBox& gt_box);

SlotLoss loss_kpt_conf(RawCell raw, const GtKeypoints& gt_keypoints);

SlotLoss loss_cls(RawCell raw, bool matched);

/// Sparse gradient over a HeadTensor. Matched slots carry all 57 channels;
/// every other anchor only has an objectness gradient.
struct HeadGradient {
  /// Per scale, one entry per anchor cell in [anchor, row, col] order; zero at
  /// matched slots.
  std::array<std::vector<double>, kNumScales> objectness;
  std::vector<std::pair<Slot, ChannelVector>> slots;

  /// target -= step * gradient
  void apply(HeadTensor& target, double step) const;
  /// Dense copy shaped like `like`.
  [[nodiscard]] HeadTensor dense(const HeadTensor& like) const;
};

struct LossBreakdown {
  double cls = 0.0;
  double box = 0.0;
  double kpts = 0.0;
  double kpts_conf = 0.0;
  double total = 0.0;
  HeadGradient grad;
  /// gt indices with no labeled keypoint; they contribute no keypoint loss.
  std::vector<std::size_t> flagged;
};

/// Sums every component over the assigned slots (objectness alone over the
/// remaining anchors), weights them and returns the gradient.
LossBreakdown total_loss(const HeadTensor& heads, const AnchorSpec& spec,
                         std::span<const Assignment> assignments,
                         std::span<const PoseInstance> gts,
                         const LossWeights& weights,
                         const KptWeights& kpt_weights,
                         KptLossVariant variant = KptLossVariant::kOks);

}  // namespace yolopose

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

#include <cstddef>
#include <span>
#include <vector>

#include "yolopose/codec.hpp"
#include "yolopose/core.hpp"

namespace yolopose {

/// Ground truth `gt_index` is supervised at anchor slot (scale, i, j, anchor).
struct Assignment {
  int scale_index = 0;
  int i = 0;
  int j = 0;
  int anchor_index = 0;
  std::size_t gt_index = 0;

  [[nodiscard]] Slot slot() const noexcept {
    return {scale_index, i, j, anchor_index};
  }
  bool operator==(const Assignment&) const = default;
};

struct AssignOptions {
  /// An anchor matches when every side ratio max(gt/anchor, anchor/gt) is
  /// below this. Must lie in (1, 4]; above 4 the box decode cannot reach the
  /// target size.
  double ratio_threshold = 4.0;
  /// Also assign at the two neighbouring cells nearest to the gt center.
  bool neighbor_cells = false;
};

/// Matches every instance to each scale/anchor that passes the ratio test at
/// the cell containing its center. A slot claimed by several instances goes
/// to the one with the larger area (lower index on ties). Output is sorted by
/// (gt_index, scale, row, col, anchor).
///
/// Throws Error if an instance center lies outside [0, input_size).
std::vector<Assignment> assign(std::span<const PoseInstance> gts,
                               const AnchorSpec& spec, int input_size,
                               const AssignOptions& options = {});

/// The ratio test alone, exposed for property checks.
[[nodiscard]] bool anchor_matches(const BBox& box, const AnchorShape& anchor,
                                  double ratio_threshold) noexcept;

}  // namespace yolopose

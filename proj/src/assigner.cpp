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

#include "yolopose/assigner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace yolopose {

bool anchor_matches(const BBox& box, const AnchorShape& anchor,
                    double ratio_threshold) noexcept {
  if (!(box.w > 0.0) || !(box.h > 0.0)) return false;
  const double rw = box.w / anchor.w;
  const double rh = box.h / anchor.h;
  const double worst = std::max({rw, 1.0 / rw, rh, 1.0 / rh});
  return worst < ratio_threshold;
}

std::vector<Assignment> assign(std::span<const PoseInstance> gts,
                               const AnchorSpec& spec, int input_size,
                               const AssignOptions& options) {
  if (!(options.ratio_threshold > 1.0) || options.ratio_threshold > 4.0) {
    throw Error("assign: ratio_threshold must lie in (1, 4]");
  }
  const auto grid = build_grid(spec, input_size);

  // slot -> winning gt index
  std::map<Slot, std::size_t> owner;
  auto claim = [&](const Slot& slot, std::size_t g) {
    auto [it, inserted] = owner.emplace(slot, g);
    if (inserted) return;
    const double incumbent = gts[it->second].area;
    const double challenger = gts[g].area;
    if (challenger > incumbent ||
        (challenger == incumbent && g < it->second)) {
      it->second = g;
    }
  };

  for (std::size_t g = 0; g < gts.size(); ++g) {
    const BBox& box = gts[g].bbox;
    if (!(box.w > 0.0) || !(box.h > 0.0)) {
      throw Error("assign: instance " + std::to_string(g) +
                  " has a non-positive box size");
    }
    if (!(box.cx >= 0.0 && box.cx < input_size && box.cy >= 0.0 &&
          box.cy < input_size)) {
      std::ostringstream os;
      os << "assign: instance " << g << " center (" << box.cx << ", "
         << box.cy << ") lies outside the " << input_size << "x" << input_size
         << " input";
      throw Error(os.str());
    }
    for (int s = 0; s < kNumScales; ++s) {
      const auto& sc = spec.scales[s];
      const double gx = box.cx / sc.stride;
      const double gy = box.cy / sc.stride;
      const int j = static_cast<int>(std::floor(gx));
      const int i = static_cast<int>(std::floor(gy));

      std::vector<std::pair<int, int>> cells = {{i, j}};
      if (options.neighbor_cells) {
        const double fx = gx - j;
        const double fy = gy - i;
        if (fx < 0.5 && j > 0) cells.emplace_back(i, j - 1);
        if (fx > 0.5 && j + 1 < grid[s].cols) cells.emplace_back(i, j + 1);
        if (fy < 0.5 && i > 0) cells.emplace_back(i - 1, j);
        if (fy > 0.5 && i + 1 < grid[s].rows) cells.emplace_back(i + 1, j);
      }
      for (int a = 0; a < kAnchorsPerScale; ++a) {
        if (!anchor_matches(box, sc.anchors[a], options.ratio_threshold)) {
          continue;
        }
        for (const auto& [ci, cj] : cells) claim(Slot{s, ci, cj, a}, g);
      }
    }
  }

  std::vector<Assignment> out;
  out.reserve(owner.size());
  for (const auto& [slot, g] : owner) {
    out.push_back({slot.scale, slot.i, slot.j, slot.anchor, g});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Assignment& a, const Assignment& b) {
                     return std::tie(a.gt_index, a.scale_index, a.i, a.j,
                                     a.anchor_index) <
                            std::tie(b.gt_index, b.scale_index, b.i, b.j,
                                     b.anchor_index);
                   });
  return out;
}

}  // namespace yolopose

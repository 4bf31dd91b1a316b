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

#include "yolopose/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "yolopose/codec.hpp"
#include "yolopose/loss.hpp"

namespace yolopose {

double fd_relative_error(double analytic, double numeric) noexcept {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), kFdAbsFloor});
  return std::abs(analytic - numeric) / scale;
}

namespace {

struct Config {
  ChannelVector raw{};
  CellContext ctx;
  PoseInstance gt;
  bool matched = true;
};

Config draw(std::mt19937_64& rng, const AnchorSpec& spec,
            const KptWeights& weights) {
  using namespace channel;
  std::uniform_int_distribution<int> pick_scale(0, kNumScales - 1);
  std::uniform_int_distribution<int> pick_anchor(0, kAnchorsPerScale - 1);
  std::uniform_int_distribution<int> pick_cell(0, 9);
  std::uniform_int_distribution<int> pick_v(0, 2);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  Config c;
  const Slot slot{pick_scale(rng), pick_cell(rng), pick_cell(rng), pick_anchor(rng)};
  c.ctx = CellContext::of(spec, slot);
  const double st = c.ctx.stride;

  auto& g = c.gt;
  g.bbox = {(c.ctx.j + uniform(-0.4, 1.4)) * st, (c.ctx.i + uniform(-0.4, 1.4)) * st,
            c.ctx.anchor.w * uniform(0.3, 3.5), c.ctx.anchor.h * uniform(0.3, 3.5)};
  g.area = g.bbox.area() * uniform(0.4, 1.0);
  for (auto& k : g.keypoints) {
    k = {g.bbox.cx + uniform(-0.7, 0.7) * g.bbox.w,
         g.bbox.cy + uniform(-0.7, 0.7) * g.bbox.h, pick_v(rng)};
  }
  if (g.num_labeled() == 0) g.keypoints[0].v = 2;

  // CIoU has kinks wherever a predicted edge meets a gt edge; redraw until
  // every edge pair is at least a pixel apart so the stencil stays smooth
  auto edges_clear = [&] {
    const BBox p = decode_cell(RawCell(c.raw), c.ctx).bbox;
    for (double a : {p.x1(), p.x2()}) {
      for (double b : {g.bbox.x1(), g.bbox.x2()}) {
        if (std::abs(a - b) < 1.0) return false;
      }
    }
    for (double a : {p.y1(), p.y2()}) {
      for (double b : {g.bbox.y1(), g.bbox.y2()}) {
        if (std::abs(a - b) < 1.0) return false;
      }
    }
    return true;
  };
  do {
    for (int ch : {kX, kY, kW, kH}) c.raw[ch] = 1.5 * n01(rng);
  } while (!edges_clear());
  c.raw[kObj] = 3.0 * n01(rng);
  c.raw[kCls] = 3.0 * n01(rng);
  const double s = std::sqrt(g.area);
  for (int n = 0; n < kNumKeypoints; ++n) {
    // decoded keypoints land within a few Gaussian widths of the target so the
    // OKS terms carry a measurable gradient
    const double spread = s * weights.k[n] * uniform(0.0, 3.0);
    // offsets stay clear of the L1 kink at zero by several stencil widths
    const double margin = 8.0 * kFdStep * 2.0 * st;
    auto offset = [&] {
      const double d = spread * n01(rng);
      return std::abs(d) < margin ? std::copysign(margin, d) : d;
    };
    const double px = g.keypoints[n].x + offset();
    const double py = g.keypoints[n].y + offset();
    c.raw[kpt_x(n)] = (px / st - c.ctx.j + 0.5) / 2.0;
    c.raw[kpt_y(n)] = (py / st - c.ctx.i + 0.5) / 2.0;
    c.raw[kpt_conf(n)] = 3.0 * n01(rng);
  }
  c.matched = u01(rng) < 0.5;
  return c;
}

using SlotFn = std::function<SlotLoss(RawCell, const Config&)>;

double check_one(const SlotFn& fn, const Config& c) {
  const SlotLoss analytic = fn(RawCell(c.raw), c);
  double worst = 0.0;
  for (int ch = 0; ch < kNumChannels; ++ch) {
    ChannelVector plus = c.raw;
    ChannelVector minus = c.raw;
    plus[ch] += kFdStep;
    minus[ch] -= kFdStep;
    const double numeric =
        (fn(RawCell(plus), c).value - fn(RawCell(minus), c).value) / (2.0 * kFdStep);
    worst = std::max(worst, fd_relative_error(analytic.grad[ch], numeric));
  }
  return worst;
}

}  // namespace

std::vector<GradcheckSuite> run_gradchecks(int trials, std::uint64_t seed) {
  const AnchorSpec spec = AnchorSpec::defaults();
  const KptWeights weights = KptWeights::coco();
  const std::vector<std::pair<std::string, SlotFn>> suites = {
      {"kpts_oks",
       [&](RawCell r, const Config& c) { return loss_kpts(r, c.ctx, c.gt, weights); }},
      {"kpts_l1", [](RawCell r, const Config& c) { return loss_kpts_l1(r, c.ctx, c.gt); }},
      {"kpts_scale_l1",
       [](RawCell r, const Config& c) { return loss_kpts_scale_l1(r, c.ctx, c.gt); }},
      {"box_ciou", [](RawCell r, const Config& c) { return loss_box(r, c.ctx, c.gt.bbox); }},
      {"kpt_conf", [](RawCell r, const Config& c) { return loss_kpt_conf(r, c.gt.keypoints); }},
      {"cls", [](RawCell r, const Config& c) { return loss_cls(r, c.matched); }},
  };
  std::vector<GradcheckSuite> out;
  for (std::size_t s = 0; s < suites.size(); ++s) {
    std::mt19937_64 rng(seed * 1000003ULL + s);
    GradcheckSuite suite{suites[s].first, trials, 0, 0.0};
    for (int t = 0; t < trials; ++t) {
      const double err = check_one(suites[s].second, draw(rng, spec, weights));
      suite.max_rel_error = std::max(suite.max_rel_error, err);
      if (err < kFdRelTol) ++suite.passed;
    }
    out.push_back(std::move(suite));
  }
  return out;
}

}  // namespace yolopose

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

#include "yolopose/codec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace yolopose {

CellContext CellContext::of(const AnchorSpec& spec, const Slot& slot) {
  const auto& sc = spec.scales.at(slot.scale);
  return {slot.i, slot.j, static_cast<double>(sc.stride),
          sc.anchors.at(slot.anchor)};
}

HeadTensor HeadTensor::zeros(const AnchorSpec& spec, int input_size) {
  const auto grid = build_grid(spec, input_size);
  HeadTensor h;
  h.input_size = input_size;
  for (int s = 0; s < kNumScales; ++s) {
    auto& t = h.scales[s];
    t.rows = grid[s].rows;
    t.cols = grid[s].cols;
    t.data.assign(t.num_anchors() * kNumChannels, 0.0);
  }
  return h;
}

void HeadTensor::validate_shape(const AnchorSpec& spec) const {
  const auto grid = build_grid(spec, input_size);
  for (int s = 0; s < kNumScales; ++s) {
    const auto& t = scales[s];
    if (t.rows != grid[s].rows || t.cols != grid[s].cols ||
        t.data.size() != t.num_anchors() * kNumChannels) {
      std::ostringstream os;
      os << "head tensor: scale " << s << " has shape [3, " << t.rows << ", "
         << t.cols << ", 57] with " << t.data.size()
         << " values; expected [3, " << grid[s].rows << ", " << grid[s].cols
         << ", 57]";
      throw Error(os.str());
    }
  }
}

void HeadTensor::validate(const AnchorSpec& spec) const {
  validate_shape(spec);
  for (int s = 0; s < kNumScales; ++s) {
    for (double v : scales[s].data) {
      if (!std::isfinite(v)) {
        throw Error("head tensor: non-finite value at scale " +
                    std::to_string(s));
      }
    }
  }
}

Detection decode_cell(RawCell raw, const CellContext& ctx) {
  using namespace channel;
  Detection d;
  const double st = ctx.stride;
  d.bbox.cx = (2.0 * sigmoid(raw[kX]) - 0.5 + ctx.j) * st;
  d.bbox.cy = (2.0 * sigmoid(raw[kY]) - 0.5 + ctx.i) * st;
  const double gw = 2.0 * sigmoid(raw[kW]);
  const double gh = 2.0 * sigmoid(raw[kH]);
  d.bbox.w = gw * gw * ctx.anchor.w;
  d.bbox.h = gh * gh * ctx.anchor.h;
  d.box_conf = sigmoid(raw[kObj]);
  d.class_conf = sigmoid(raw[kCls]);
  for (int n = 0; n < kNumKeypoints; ++n) {
    auto& k = d.keypoints[n];
    k.x = (2.0 * raw[kpt_x(n)] - 0.5 + ctx.j) * st;
    k.y = (2.0 * raw[kpt_y(n)] - 0.5 + ctx.i) * st;
    k.conf = sigmoid(raw[kpt_conf(n)]);
  }
  return d;
}

std::vector<Detection> decode(const HeadTensor& heads,
                              const AnchorSpec& spec) {
  heads.validate(spec);
  std::vector<Detection> out;
  std::size_t total = 0;
  for (const auto& t : heads.scales) total += t.num_anchors();
  out.reserve(total);
  for (int s = 0; s < kNumScales; ++s) {
    const auto& t = heads.scales[s];
    for (int a = 0; a < kAnchorsPerScale; ++a) {
      for (int i = 0; i < t.rows; ++i) {
        for (int j = 0; j < t.cols; ++j) {
          const Slot slot{s, i, j, a};
          out.push_back(decode_cell(t.cell(a, i, j), CellContext::of(spec, slot)));
        }
      }
    }
  }
  return out;
}

namespace {

double logit_stable(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

EncodedTarget encode(const PoseInstance& gt, const Slot& slot,
                     const AnchorSpec& spec) {
  using namespace channel;
  const CellContext ctx = CellContext::of(spec, slot);
  const double st = ctx.stride;

  const double ox = gt.bbox.cx / st - ctx.j;
  const double oy = gt.bbox.cy / st - ctx.i;
  const double rw = gt.bbox.w / ctx.anchor.w;
  const double rh = gt.bbox.h / ctx.anchor.h;
  auto in_open = [](double v, double lo, double hi) { return v > lo && v < hi; };
  if (!in_open(ox, -0.5, 1.5) || !in_open(oy, -0.5, 1.5)) {
    std::ostringstream os;
    os << "encode: box center offset (" << ox << ", " << oy
       << ") cells is outside (-0.5, 1.5) for slot (scale " << slot.scale
       << ", row " << slot.i << ", col " << slot.j << ")";
    throw Error(os.str());
  }
  if (!in_open(rw, 0.0, 4.0) || !in_open(rh, 0.0, 4.0)) {
    std::ostringstream os;
    os << "encode: box/anchor size ratio (" << rw << ", " << rh
       << ") is outside (0, 4) for slot (scale " << slot.scale << ", anchor "
       << slot.anchor << ")";
    throw Error(os.str());
  }

  EncodedTarget t;
  t.mask.fill(true);
  t.values[kX] = logit_stable((ox + 0.5) / 2.0);
  t.values[kY] = logit_stable((oy + 0.5) / 2.0);
  t.values[kW] = logit_stable(std::sqrt(rw) / 2.0);
  t.values[kH] = logit_stable(std::sqrt(rh) / 2.0);
  t.values[kObj] = 1.0;
  t.values[kCls] = 1.0;
  for (int n = 0; n < kNumKeypoints; ++n) {
    const auto& k = gt.keypoints[n];
    if (k.labeled()) {
      t.values[kpt_x(n)] = (k.x / st - ctx.j + 0.5) / 2.0;
      t.values[kpt_y(n)] = (k.y / st - ctx.i + 0.5) / 2.0;
      t.values[kpt_conf(n)] = 1.0;
    } else {
      t.values[kpt_x(n)] = 0.0;
      t.values[kpt_y(n)] = 0.0;
      t.mask[kpt_x(n)] = false;
      t.mask[kpt_y(n)] = false;
      t.values[kpt_conf(n)] = 0.0;
    }
  }
  return t;
}

void write_target(const EncodedTarget& target,
                  std::span<double, kNumChannels> raw, double conf_logit) {
  using namespace channel;
  auto prob_to_raw = [&](double p) { return p > 0.5 ? conf_logit : -conf_logit; };
  for (int c = 0; c < kNumChannels; ++c) {
    raw[c] = target.mask[c] ? target.values[c] : 0.0;
  }
  raw[kObj] = prob_to_raw(target.values[kObj]);
  raw[kCls] = prob_to_raw(target.values[kCls]);
  for (int n = 0; n < kNumKeypoints; ++n) {
    raw[kpt_conf(n)] = prob_to_raw(target.values[kpt_conf(n)]);
  }
}

LetterboxTransform letterbox(double src_w, double src_h, double dst) {
  if (!(src_w > 0.0) || !(src_h > 0.0) || !(dst > 0.0)) {
    throw Error("letterbox: sizes must be positive");
  }
  LetterboxTransform t;
  t.src_w = src_w;
  t.src_h = src_h;
  t.dst = dst;
  t.scale = dst / std::max(src_w, src_h);
  t.pad_right = dst - src_w * t.scale;
  t.pad_bottom = dst - src_h * t.scale;
  // the longer side maps exactly onto dst
  if (src_w >= src_h) t.pad_right = 0.0;
  if (src_h >= src_w) t.pad_bottom = 0.0;
  return t;
}

Detection unletterbox(const Detection& det, const LetterboxTransform& t) {
  Detection out = det;
  out.bbox = {t.to_src(det.bbox.cx), t.to_src(det.bbox.cy),
              t.to_src(det.bbox.w), t.to_src(det.bbox.h)};
  for (auto& k : out.keypoints) {
    k.x = t.to_src(k.x);
    k.y = t.to_src(k.y);
  }
  return out;
}

PoseInstance to_letterbox(const PoseInstance& gt, const LetterboxTransform& t) {
  PoseInstance out = gt;
  out.bbox = {t.to_dst(gt.bbox.cx), t.to_dst(gt.bbox.cy), t.to_dst(gt.bbox.w),
              t.to_dst(gt.bbox.h)};
  for (auto& k : out.keypoints) {
    k.x = t.to_dst(k.x);
    k.y = t.to_dst(k.y);
  }
  out.area = gt.area * t.scale * t.scale;
  return out;
}

}  // namespace yolopose

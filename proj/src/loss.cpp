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

#include "yolopose/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace yolopose {

void LossWeights::validate() const {
  for (double w : {cls, box, kpts, kpts_conf}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error("loss weights must be finite and non-negative");
    }
  }
}

std::string_view to_string(KptLossVariant v) noexcept {
  switch (v) {
    case KptLossVariant::kOks:
      return "oks";
    case KptLossVariant::kL1:
      return "l1";
    case KptLossVariant::kScaleL1:
      return "scale_l1";
  }
  return "oks";
}

KptLossVariant parse_kpt_loss_variant(std::string_view name) {
  if (name == "oks") return KptLossVariant::kOks;
  if (name == "l1") return KptLossVariant::kL1;
  if (name == "scale_l1") return KptLossVariant::kScaleL1;
  throw Error("unknown keypoint loss '" + std::string(name) +
              "' (expected oks, l1 or scale_l1)");
}

std::optional<double> oks(std::span<const PredKeypoint, kNumKeypoints> pred,
                          const PoseInstance& gt, const KptWeights& weights) {
  if (!(gt.area > 0.0)) return std::nullopt;
  double sum = 0.0;
  int labeled = 0;
  for (int n = 0; n < kNumKeypoints; ++n) {
    const auto& g = gt.keypoints[n];
    if (!g.labeled()) continue;
    const double dx = pred[n].x - g.x;
    const double dy = pred[n].y - g.y;
    const double k = weights.k[n];
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * gt.area * k * k));
    ++labeled;
  }
  if (labeled == 0) return std::nullopt;
  return sum / labeled;
}

double bce_with_logit(double y, double t) noexcept {
  return std::max(t, 0.0) - y * t + std::log1p(std::exp(-std::abs(t)));
}

namespace {

// d(decoded keypoint coordinate) / d(raw channel)
double kpt_slope(const CellContext& ctx) noexcept { return 2.0 * ctx.stride; }

}  // namespace

SlotLoss loss_kpts(RawCell raw, const CellContext& ctx, const PoseInstance& gt,
                   const KptWeights& weights) {
  using namespace channel;
  if (!(gt.area > 0.0)) throw Error("keypoint loss: gt area must be positive");
  const int labeled = gt.num_labeled();
  if (labeled == 0) {
    throw Error("keypoint loss: OKS undefined for an instance without "
                "labeled keypoints");
  }
  const Detection d = decode_cell(raw, ctx);
  const double slope = kpt_slope(ctx);
  SlotLoss out;
  double sum = 0.0;
  for (int n = 0; n < kNumKeypoints; ++n) {
    const auto& g = gt.keypoints[n];
    if (!g.labeled()) continue;
    const double dx = d.keypoints[n].x - g.x;
    const double dy = d.keypoints[n].y - g.y;
    const double sk2 = gt.area * weights.k[n] * weights.k[n];
    const double e = std::exp(-(dx * dx + dy * dy) / (2.0 * sk2));
    sum += e;
    const double c = e / (sk2 * labeled) * slope;
    out.grad[kpt_x(n)] = c * dx;
    out.grad[kpt_y(n)] = c * dy;
  }
  out.value = 1.0 - sum / labeled;
  return out;
}

namespace {

SlotLoss l1_impl(RawCell raw, const CellContext& ctx, const PoseInstance& gt,
                 double norm) {
  using namespace channel;
  const Detection d = decode_cell(raw, ctx);
  const double slope = kpt_slope(ctx) / norm;
  auto sign = [](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); };
  SlotLoss out;
  for (int n = 0; n < kNumKeypoints; ++n) {
    const auto& g = gt.keypoints[n];
    if (!g.labeled()) continue;
    const double dx = d.keypoints[n].x - g.x;
    const double dy = d.keypoints[n].y - g.y;
    out.value += (std::abs(dx) + std::abs(dy)) / norm;
    out.grad[kpt_x(n)] = sign(dx) * slope;
    out.grad[kpt_y(n)] = sign(dy) * slope;
  }
  return out;
}

}  // namespace

SlotLoss loss_kpts_l1(RawCell raw, const CellContext& ctx,
                      const PoseInstance& gt) {
  return l1_impl(raw, ctx, gt, 1.0);
}

SlotLoss loss_kpts_scale_l1(RawCell raw, const CellContext& ctx,
                            const PoseInstance& gt) {
  if (!(gt.area > 0.0)) {
    throw Error("scale-normalized L1: gt area must be positive");
  }
  return l1_impl(raw, ctx, gt, std::sqrt(gt.area));
}

namespace {

// 1 - CIoU(pred, gt) and its gradient w.r.t. (cx, cy, w, h) of pred.
struct BoxLossGrad {
  double value = 0.0;
  double dcx = 0.0, dcy = 0.0, dw = 0.0, dh = 0.0;
};

BoxLossGrad ciou_loss_grad(const BBox& p, const BBox& g) {
  // partials of CIoU w.r.t. the pred corners and the pred size directly
  double d_x1 = 0.0, d_x2 = 0.0, d_y1 = 0.0, d_y2 = 0.0;
  double d_cx = 0.0, d_cy = 0.0, d_w = 0.0, d_h = 0.0;

  // IoU
  const double ix = std::min(p.x2(), g.x2()) - std::max(p.x1(), g.x1());
  const double iy = std::min(p.y2(), g.y2()) - std::max(p.y1(), g.y1());
  const bool overlap = ix > 0.0 && iy > 0.0;
  const double inter = overlap ? ix * iy : 0.0;
  const double uni = p.area() + g.area() - inter;
  const double iou_v = uni > 0.0 ? inter / uni : 0.0;

  // aspect term
  constexpr double kK = 4.0 / (std::numbers::pi * std::numbers::pi);
  const double hp = std::max(p.h, kAspectEps);
  const double ap = std::atan(p.w / hp);
  const double ag = std::atan(g.w / std::max(g.h, kAspectEps));
  const double v = kK * (ag - ap) * (ag - ap);
  const double den = (1.0 - iou_v) + v + kAlphaEps;

  // center distance over enclosing diagonal
  const double rx = p.cx - g.cx;
  const double ry = p.cy - g.cy;
  const double rho2 = rx * rx + ry * ry;
  const double cw = std::max(p.x2(), g.x2()) - std::min(p.x1(), g.x1());
  const double ch = std::max(p.y2(), g.y2()) - std::min(p.y1(), g.y1());
  const double c2 = cw * cw + ch * ch;
  const double dist = c2 > 0.0 ? rho2 / c2 : 0.0;

  const double ciou_v = iou_v - dist - v * v / den;

  // dC/diou and dC/dv
  const double dC_diou = 1.0 - v * v / (den * den);
  const double dC_dv = -(2.0 * v / den - v * v / (den * den));

  if (uni > 0.0) {
    const double diou_dinter = (uni + inter) / (uni * uni);
    const double diou_darea = -inter / (uni * uni);
    d_w += dC_diou * diou_darea * p.h;
    d_h += dC_diou * diou_darea * p.w;
    if (overlap) {
      const double g_inter = dC_diou * diou_dinter;
      if (p.x2() < g.x2()) d_x2 += g_inter * iy;
      if (p.x1() > g.x1()) d_x1 -= g_inter * iy;
      if (p.y2() < g.y2()) d_y2 += g_inter * ix;
      if (p.y1() > g.y1()) d_y1 -= g_inter * ix;
    }
  }

  if (c2 > 0.0) {
    const double dC_drho2 = -1.0 / c2;
    const double dC_dc2 = rho2 / (c2 * c2);
    d_cx += dC_drho2 * 2.0 * rx;
    d_cy += dC_drho2 * 2.0 * ry;
    const double g_cw = dC_dc2 * 2.0 * cw;
    const double g_ch = dC_dc2 * 2.0 * ch;
    if (p.x2() > g.x2()) d_x2 += g_cw;
    if (p.x1() < g.x1()) d_x1 -= g_cw;
    if (p.y2() > g.y2()) d_y2 += g_ch;
    if (p.y1() < g.y1()) d_y1 -= g_ch;
  }

  {
    const double dv_dap = 2.0 * kK * (ap - ag);
    const double r2 = hp * hp + p.w * p.w;
    d_w += dC_dv * dv_dap * hp / r2;
    if (p.h > kAspectEps) d_h += dC_dv * dv_dap * (-p.w / r2);
  }

  // x1 = cx - w/2, x2 = cx + w/2
  d_cx += d_x1 + d_x2;
  d_w += 0.5 * (d_x2 - d_x1);
  d_cy += d_y1 + d_y2;
  d_h += 0.5 * (d_y2 - d_y1);

  return {1.0 - ciou_v, -d_cx, -d_cy, -d_w, -d_h};
}

}  // namespace

SlotLoss loss_box(RawCell raw, const CellContext& ctx, const BBox& gt_box) {
  using namespace channel;
  if (!(gt_box.w > 0.0) || !(gt_box.h > 0.0)) {
    throw Error("box loss: degenerate gt box");
  }
  const Detection d = decode_cell(raw, ctx);
  const BoxLossGrad b = ciou_loss_grad(d.bbox, gt_box);

  const double sx = sigmoid(raw[kX]);
  const double sy = sigmoid(raw[kY]);
  const double sw = sigmoid(raw[kW]);
  const double sh = sigmoid(raw[kH]);
  SlotLoss out;
  out.value = b.value;
  out.grad[kX] = b.dcx * 2.0 * ctx.stride * sx * (1.0 - sx);
  out.grad[kY] = b.dcy * 2.0 * ctx.stride * sy * (1.0 - sy);
  // w = 4 sig(t)^2 a_w
  out.grad[kW] = b.dw * 8.0 * ctx.anchor.w * sw * sw * (1.0 - sw);
  out.grad[kH] = b.dh * 8.0 * ctx.anchor.h * sh * sh * (1.0 - sh);
  return out;
}

SlotLoss loss_kpt_conf(RawCell raw, const GtKeypoints& gt_keypoints) {
  using namespace channel;
  SlotLoss out;
  for (int n = 0; n < kNumKeypoints; ++n) {
    const double y = gt_keypoints[n].labeled() ? 1.0 : 0.0;
    const double t = raw[kpt_conf(n)];
    out.value += bce_with_logit(y, t);
    out.grad[kpt_conf(n)] = sigmoid(t) - y;
  }
  return out;
}

SlotLoss loss_cls(RawCell raw, bool matched) {
  using namespace channel;
  SlotLoss out;
  const double y = matched ? 1.0 : 0.0;
  out.value = bce_with_logit(y, raw[kObj]);
  out.grad[kObj] = sigmoid(raw[kObj]) - y;
  if (matched) {
    out.value += bce_with_logit(1.0, raw[kCls]);
    out.grad[kCls] = sigmoid(raw[kCls]) - 1.0;
  }
  return out;
}

void HeadGradient::apply(HeadTensor& target, double step) const {
  for (int s = 0; s < kNumScales; ++s) {
    auto& data = target.scales[s].data;
    const auto& g = objectness[s];
    for (std::size_t a = 0; a < g.size(); ++a) {
      data[a * kNumChannels + channel::kObj] -= step * g[a];
    }
  }
  for (const auto& [slot, g] : slots) {
    auto cell = target.cell(slot);
    for (int c = 0; c < kNumChannels; ++c) cell[c] -= step * g[c];
  }
}

HeadTensor HeadGradient::dense(const HeadTensor& like) const {
  HeadTensor out = like;
  for (auto& s : out.scales) std::fill(s.data.begin(), s.data.end(), 0.0);
  apply(out, -1.0);
  return out;
}

LossBreakdown total_loss(const HeadTensor& heads, const AnchorSpec& spec,
                         std::span<const Assignment> assignments,
                         std::span<const PoseInstance> gts,
                         const LossWeights& weights,
                         const KptWeights& kpt_weights,
                         KptLossVariant variant) {
  heads.validate_shape(spec);
  weights.validate();
  kpt_weights.validate();

  LossBreakdown out;
  std::array<std::vector<char>, kNumScales> matched;
  for (int s = 0; s < kNumScales; ++s) {
    matched[s].assign(heads.scales[s].num_anchors(), 0);
  }

  std::set<std::size_t> flagged;
  out.grad.slots.reserve(assignments.size());
  for (const auto& a : assignments) {
    if (a.gt_index >= gts.size()) {
      throw Error("total loss: assignment refers to missing gt " +
                  std::to_string(a.gt_index));
    }
    const Slot slot = a.slot();
    if (slot.scale < 0 || slot.scale >= kNumScales || slot.anchor < 0 ||
        slot.anchor >= kAnchorsPerScale || slot.i < 0 || slot.j < 0 ||
        slot.i >= heads.scales[slot.scale].rows ||
        slot.j >= heads.scales[slot.scale].cols) {
      throw Error("total loss: assignment slot outside the head grid");
    }
    const auto& t = heads.scales[slot.scale];
    const std::size_t flat = t.offset(slot.anchor, slot.i, slot.j) / kNumChannels;
    if (matched[slot.scale][flat]) {
      throw Error("total loss: slot assigned twice");
    }
    matched[slot.scale][flat] = 1;

    const PoseInstance& gt = gts[a.gt_index];
    const CellContext ctx = CellContext::of(spec, slot);
    const RawCell raw = heads.cell(slot);

    const SlotLoss cls = loss_cls(raw, true);
    const SlotLoss box = loss_box(raw, ctx, gt.bbox);
    const SlotLoss conf = loss_kpt_conf(raw, gt.keypoints);
    SlotLoss kpts;
    if (gt.num_labeled() == 0) {
      flagged.insert(a.gt_index);
    } else {
      switch (variant) {
        case KptLossVariant::kOks:
          kpts = loss_kpts(raw, ctx, gt, kpt_weights);
          break;
        case KptLossVariant::kL1:
          kpts = loss_kpts_l1(raw, ctx, gt);
          break;
        case KptLossVariant::kScaleL1:
          kpts = loss_kpts_scale_l1(raw, ctx, gt);
          break;
      }
    }

    out.cls += cls.value;
    out.box += box.value;
    out.kpts += kpts.value;
    out.kpts_conf += conf.value;

    ChannelVector g{};
    for (int c = 0; c < kNumChannels; ++c) {
      g[c] = weights.cls * cls.grad[c] + weights.box * box.grad[c] +
             weights.kpts * kpts.grad[c] + weights.kpts_conf * conf.grad[c];
    }
    out.grad.slots.emplace_back(slot, g);
  }

  for (int s = 0; s < kNumScales; ++s) {
    const auto& data = heads.scales[s].data;
    const std::size_t n = heads.scales[s].num_anchors();
    auto& g = out.grad.objectness[s];
    g.assign(n, 0.0);
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (matched[s][a]) continue;
      const double t = data[a * kNumChannels + channel::kObj];
      // BCE(0, sig(t)) = max(t, 0) + log1p(exp(-|t|))
      const double e = std::exp(-std::abs(t));
      sum += std::max(t, 0.0) + std::log1p(e);
      const double p = t >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      g[a] = weights.cls * p;
    }
    out.cls += sum;
  }

  out.total = weights.cls * out.cls + weights.box * out.box +
              weights.kpts * out.kpts + weights.kpts_conf * out.kpts_conf;
  out.flagged.assign(flagged.begin(), flagged.end());
  return out;
}

}  // namespace yolopose

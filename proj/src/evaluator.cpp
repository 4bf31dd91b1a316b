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

#include "yolopose/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "yolopose/loss.hpp"

namespace yolopose {

namespace {

constexpr double kSpacing1 = std::numeric_limits<double>::epsilon();
constexpr int kRecallPoints = 101;

bool is_ignore(const PoseInstance& g, const AreaRange& range) {
  return g.iscrowd || g.num_labeled() == 0 || !range.contains(g.area);
}

// Recall grid 0, 0.01, ..., 0.99, 1.0 built as k * 0.01, like the reference.
const std::vector<double>& recall_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g(kRecallPoints);
    for (int k = 0; k < kRecallPoints; ++k) g[k] = k * 0.01;
    g.back() = 1.0;
    return g;
  }();
  return grid;
}

struct ImageEval {
  // per threshold, per (sorted, truncated) detection
  std::vector<std::vector<bool>> matched;
  std::vector<std::vector<bool>> ignored;
  std::vector<double> scores;
  int regular_gts = 0;
};

// Core of the greedy matcher. `gts` are visited in the order given by `order`
// (regular gts first); `oks_of(d, g)` is indexed by original positions.
template <typename OksFn>
ImageMatches match_sorted(std::span<const PoseInstance> gts,
                          std::span<const Detection> dets, double threshold,
                          const AreaRange& range, OksFn&& oks_of) {
  const std::size_t G = gts.size();
  std::vector<std::size_t> order;
  order.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    if (!is_ignore(gts[g], range)) order.push_back(g);
  }
  for (std::size_t g = 0; g < G; ++g) {
    if (is_ignore(gts[g], range)) order.push_back(g);
  }

  ImageMatches out;
  out.gt_index.assign(dets.size(), -1);
  out.ignored.assign(dets.size(), false);
  std::vector<bool> gt_taken(G, false);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    double best = std::min(threshold, 1.0 - 1e-10);
    std::ptrdiff_t m = -1;
    for (std::size_t g : order) {
      if (gt_taken[g] && !gts[g].iscrowd) continue;
      // already on a regular gt and the rest are ignore gts
      if (m > -1 && !is_ignore(gts[m], range) && is_ignore(gts[g], range)) break;
      const double o = oks_of(d, g);
      if (o < best) continue;
      best = o;
      m = static_cast<std::ptrdiff_t>(g);
    }
    if (m == -1) continue;
    out.gt_index[d] = m;
    out.ignored[d] = is_ignore(gts[m], range);
    gt_taken[m] = true;
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (out.gt_index[d] == -1 && !range.contains(detection_area(dets[d]))) {
      out.ignored[d] = true;
    }
  }
  return out;
}

}  // namespace

double evaluation_oks(const Detection& det, const PoseInstance& gt,
                      const KptWeights& weights) {
  if (gt.num_labeled() > 0 && gt.area > 0.0) {
    return *oks(det.keypoints, gt, weights);
  }
  const double bw = gt.bbox.w;
  const double bh = gt.bbox.h;
  const double x0 = gt.bbox.x1() - bw;
  const double x1 = gt.bbox.x1() + 2.0 * bw;
  const double y0 = gt.bbox.y1() - bh;
  const double y1 = gt.bbox.y1() + 2.0 * bh;
  const bool any_labeled = gt.num_labeled() > 0;
  double sum = 0.0;
  int count = 0;
  for (int n = 0; n < kNumKeypoints; ++n) {
    const auto& p = det.keypoints[n];
    const auto& g = gt.keypoints[n];
    double dx = 0.0;
    double dy = 0.0;
    if (any_labeled) {
      if (!g.labeled()) continue;
      dx = p.x - g.x;
      dy = p.y - g.y;
    } else {
      dx = std::max(0.0, x0 - p.x) + std::max(0.0, p.x - x1);
      dy = std::max(0.0, y0 - p.y) + std::max(0.0, p.y - y1);
    }
    const double k2 = weights.k[n] * weights.k[n];
    sum += std::exp(-(dx * dx + dy * dy) / k2 / (gt.area + kSpacing1) / 2.0);
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

double detection_area(const Detection& det) noexcept {
  double x0 = det.keypoints[0].x, x1 = x0;
  double y0 = det.keypoints[0].y, y1 = y0;
  for (const auto& k : det.keypoints) {
    x0 = std::min(x0, k.x);
    x1 = std::max(x1, k.x);
    y0 = std::min(y0, k.y);
    y1 = std::max(y1, k.y);
  }
  return (x1 - x0) * (y1 - y0);
}

ImageMatches match_image(std::span<const PoseInstance> gts,
                         std::span<const Detection> dets, double threshold,
                         const KptWeights& weights, const AreaRange& range) {
  return match_sorted(gts, dets, threshold, range,
                      [&](std::size_t d, std::size_t g) {
                        return evaluation_oks(dets[d], gts[g], weights);
                      });
}

namespace {

struct RangeResult {
  std::vector<PrCurve> curves;
  double ap = -1.0;
  double ap50 = -1.0;
  double ap75 = -1.0;
  double ar = -1.0;
};

RangeResult evaluate_range(
    const std::vector<std::int64_t>& image_ids,
    const std::map<std::int64_t, std::vector<PoseInstance>>& gts_by_image,
    const std::map<std::int64_t, std::vector<Detection>>& dets_by_image,
    const AreaRange& range, const EvalParams& params) {
  const std::size_t T = params.oks_thresholds.size();
  std::vector<ImageEval> evals;
  int regular = 0;

  static const std::vector<PoseInstance> kNoGts;
  static const std::vector<Detection> kNoDets;
  for (auto id : image_ids) {
    auto git = gts_by_image.find(id);
    auto dit = dets_by_image.find(id);
    const auto& gts = git == gts_by_image.end() ? kNoGts : git->second;
    const auto& dets = dit == dets_by_image.end() ? kNoDets : dit->second;
    if (gts.empty() && dets.empty()) continue;

    ImageEval e;
    for (const auto& g : gts) e.regular_gts += is_ignore(g, range) ? 0 : 1;
    regular += e.regular_gts;

    // OKS matrix computed once per image
    std::vector<double> oks_m(dets.size() * gts.size());
    for (std::size_t d = 0; d < dets.size(); ++d) {
      for (std::size_t g = 0; g < gts.size(); ++g) {
        oks_m[d * gts.size() + g] =
            evaluation_oks(dets[d], gts[g], params.kpt_weights);
      }
    }
    for (const auto& d : dets) e.scores.push_back(d.score());
    for (std::size_t t = 0; t < T; ++t) {
      const ImageMatches m = match_sorted(
          gts, dets, params.oks_thresholds[t], range,
          [&](std::size_t d, std::size_t g) { return oks_m[d * gts.size() + g]; });
      std::vector<bool> hit(dets.size());
      for (std::size_t d = 0; d < dets.size(); ++d) hit[d] = m.gt_index[d] >= 0;
      e.matched.push_back(std::move(hit));
      e.ignored.push_back(m.ignored);
    }
    evals.push_back(std::move(e));
  }

  RangeResult out;
  const auto& grid = recall_grid();
  if (regular == 0) {
    for (double thr : params.oks_thresholds) {
      out.curves.push_back({thr, std::vector<double>(kRecallPoints, -1.0), -1.0});
    }
    return out;
  }

  // detection order across images: stable sort on descending score
  struct Entry {
    double score;
    std::size_t image;
    std::size_t det;
  };
  std::vector<Entry> entries;
  for (std::size_t im = 0; im < evals.size(); ++im) {
    for (std::size_t d = 0; d < evals[im].scores.size(); ++d) {
      entries.push_back({evals[im].scores[d], im, d});
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.score > b.score; });

  double ap_sum = 0.0;
  double ar_sum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t nd = entries.size();
    std::vector<double> rc(nd), pr(nd);
    double tp = 0.0, fp = 0.0;
    for (std::size_t k = 0; k < nd; ++k) {
      const auto& en = entries[k];
      const bool hit = evals[en.image].matched[t][en.det];
      const bool ign = evals[en.image].ignored[t][en.det];
      if (hit && !ign) tp += 1.0;
      if (!hit && !ign) fp += 1.0;
      rc[k] = tp / regular;
      pr[k] = tp / (fp + tp + kSpacing1);
    }
    PrCurve curve;
    curve.oks_threshold = params.oks_thresholds[t];
    curve.recall = nd ? rc.back() : 0.0;
    for (std::size_t k = nd; k-- > 1;) {
      if (pr[k] > pr[k - 1]) pr[k - 1] = pr[k];
    }
    curve.precision.assign(kRecallPoints, 0.0);
    for (int r = 0; r < kRecallPoints; ++r) {
      const auto it = std::lower_bound(rc.begin(), rc.end(), grid[r]);
      const std::size_t pi = static_cast<std::size_t>(it - rc.begin());
      if (pi < nd) curve.precision[r] = pr[pi];
    }
    double mean = 0.0;
    for (double p : curve.precision) mean += p;
    mean /= kRecallPoints;
    ap_sum += mean;
    ar_sum += curve.recall;
    if (std::abs(curve.oks_threshold - 0.5) < 1e-12) out.ap50 = mean;
    if (std::abs(curve.oks_threshold - 0.75) < 1e-12) out.ap75 = mean;
    out.curves.push_back(std::move(curve));
  }
  out.ap = ap_sum / T;
  out.ar = ar_sum / T;
  return out;
}

}  // namespace

EvalReport evaluate(const Dataset& gt, std::span<const Detection> dets,
                    const AreaRange& area_range, const EvalParams& params) {
  if (params.oks_thresholds.empty()) {
    throw Error("evaluate: no OKS thresholds");
  }
  if (params.max_detections <= 0) {
    throw Error("evaluate: max_detections must be positive");
  }
  params.kpt_weights.validate();

  std::vector<std::int64_t> image_ids;
  for (const auto& im : gt.images) image_ids.push_back(im.id);
  std::sort(image_ids.begin(), image_ids.end());
  image_ids.erase(std::unique(image_ids.begin(), image_ids.end()),
                  image_ids.end());

  std::map<std::int64_t, std::vector<PoseInstance>> gts_by_image;
  for (const auto& g : gt.instances) {
    if (!std::binary_search(image_ids.begin(), image_ids.end(), g.image_id)) {
      throw Error("evaluate: annotation " + std::to_string(g.id) +
                  " refers to unknown image " + std::to_string(g.image_id));
    }
    gts_by_image[g.image_id].push_back(g);
  }
  std::map<std::int64_t, std::vector<Detection>> dets_by_image;
  for (const auto& d : dets) {
    if (!std::binary_search(image_ids.begin(), image_ids.end(), d.image_id)) {
      throw Error("evaluate: detection refers to unknown image " +
                  std::to_string(d.image_id));
    }
    dets_by_image[d.image_id].push_back(d);
  }
  for (auto& [id, v] : dets_by_image) {
    std::stable_sort(v.begin(), v.end(), [](const Detection& a, const Detection& b) {
      return a.score() > b.score();
    });
    if (v.size() > static_cast<std::size_t>(params.max_detections)) {
      v.resize(params.max_detections);
    }
  }

  RangeResult main =
      evaluate_range(image_ids, gts_by_image, dets_by_image, area_range, params);
  RangeResult large = evaluate_range(image_ids, gts_by_image, dets_by_image,
                                     AreaRange::large(), params);

  EvalReport report;
  report.ap = main.ap;
  report.ap50 = main.ap50;
  report.ap75 = main.ap75;
  report.ar = main.ar;
  report.ap_large = large.ap;
  report.curves = std::move(main.curves);
  return report;
}

}  // namespace yolopose

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

#include "yolopose/fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>

namespace yolopose {

void SynthConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (num_images < 0) throw Error("synth: num_images must be >= 0");
  if (min_persons < 0 || max_persons < min_persons) {
    throw Error("synth: invalid persons-per-image range");
  }
  if (image_size <= 0) throw Error("synth: image_size must be positive");
  if (!(min_height > 0.0) || max_height < min_height) {
    throw Error("synth: invalid height range");
  }
  if (max_height > 0.95 * image_size) {
    throw Error("synth: max_height does not fit inside the image");
  }
  if (!prob(occlusion_rate) || !prob(out_of_view_rate) ||
      !prob(outside_box_rate) || !prob(max_overlap)) {
    throw Error("synth: rates must lie in [0, 1]");
  }
}

namespace {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};
Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

// Values written to JSON carry 6 significant digits; keep the in-memory set
// on exactly those values.
double quantize(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", r);
  return std::strtod(buf, nullptr);
}

// Keypoints of an upright person with the pelvis at the origin, y down.
std::array<Vec2, kNumKeypoints> stick_figure(std::mt19937_64& rng, double H) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double lean = 0.08 * n01(rng);
  const Vec2 up{std::sin(lean), -std::cos(lean)};
  const Vec2 right{std::cos(lean), std::sin(lean)};
  const double facing = u01(rng) < 0.5 ? 1.0 : -1.0;
  // limb direction at angle theta away from "down", bending outwards on `side`
  auto limb = [&](double theta, double side) {
    return std::cos(theta) * (-1.0 * up) + (std::sin(theta) * side) * right;
  };

  std::array<Vec2, kNumKeypoints> k{};
  const Vec2 pelvis{0.0, 0.0};
  const Vec2 neck = pelvis + (0.30 * H) * up;
  const double tilt = 0.15 * n01(rng);
  const Vec2 head_dir{std::sin(lean + tilt), -std::cos(lean + tilt)};
  const Vec2 nose = neck + (0.11 * H) * head_dir;
  k[0] = nose;
  for (int s = 0; s < 2; ++s) {
    // COCO "left" keypoints sit on the image right for a person facing us
    const double side = (s == 0 ? 1.0 : -1.0) * facing;
    k[1 + s] = nose + (0.03 * H) * up + (0.025 * H * side) * right;
    k[3 + s] = nose + (0.01 * H) * up + (0.055 * H * side) * right;
    const Vec2 shoulder = neck + (0.11 * H * side) * right;
    k[5 + s] = shoulder;
    const double upper = -0.2 + 1.6 * u01(rng);
    const Vec2 elbow = shoulder + (0.17 * H) * limb(upper, side);
    k[7 + s] = elbow;
    const double fore = upper + (-0.3 + 1.9 * u01(rng));
    k[9 + s] = elbow + (0.15 * H) * limb(fore, side);
    const Vec2 hip = pelvis + (0.08 * H * side) * right;
    k[11 + s] = hip;
    const double thigh = 0.1 + 0.15 * n01(rng);
    const Vec2 knee = hip + (0.24 * H) * limb(thigh, side);
    k[13 + s] = knee;
    const double shin = thigh - 0.1 + 0.2 * n01(rng);
    k[15 + s] = knee + (0.24 * H) * limb(shin, side);
  }
  return k;
}

struct Extent {
  double x0, y0, x1, y1;
};

Extent extent_of(const std::array<Vec2, kNumKeypoints>& k, int skip) {
  Extent e{1e300, 1e300, -1e300, -1e300};
  for (int n = 0; n < kNumKeypoints; ++n) {
    if (n == skip) continue;
    e.x0 = std::min(e.x0, k[n].x);
    e.y0 = std::min(e.y0, k[n].y);
    e.x1 = std::max(e.x1, k[n].x);
    e.y1 = std::max(e.y1, k[n].y);
  }
  return e;
}

}  // namespace

Dataset synth(const SynthConfig& cfg, const AnchorSpec& spec) {
  cfg.validate();
  spec.validate();
  build_grid(spec, cfg.image_size);

  // a typical person box (height H, width H / 2) must match some anchor at
  // both ends of the height range
  for (double H : {cfg.min_height, cfg.max_height}) {
    const BBox probe{0.0, 0.0, 0.5 * H, H};
    bool ok = false;
    for (const auto& sc : spec.scales) {
      for (const auto& a : sc.anchors) ok = ok || anchor_matches(probe, a, 4.0);
    }
    if (!ok) {
      throw Error("synth: person height " + std::to_string(H) +
                  " px cannot be matched by any anchor");
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> persons(cfg.min_persons, cfg.max_persons);

  Dataset out;
  std::int64_t next_ann = 1;
  for (int im = 0; im < cfg.num_images; ++im) {
    ImageInfo info;
    info.id = im + 1;
    info.width = cfg.image_size;
    info.height = cfg.image_size;
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%06d.png", im + 1);
    info.file_name = name;
    out.images.push_back(info);

    const int count = persons(rng);
    std::vector<PoseInstance> placed;
    for (int p = 0; p < count; ++p) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        const double H = cfg.min_height *
                         std::pow(cfg.max_height / cfg.min_height, u01(rng));
        auto k = stick_figure(rng, H);
        int outside = -1;
        if (u01(rng) < cfg.outside_box_rate) outside = u01(rng) < 0.5 ? 9 : 10;
        Extent e = extent_of(k, outside);
        e.y0 -= 0.06 * H;
        e.x0 -= 0.03 * H;
        e.x1 += 0.03 * H;
        e.y1 += 0.03 * H;
        if (outside >= 0) {
          // push the wrist past the nearest vertical box side
          const double margin = 0.08 * H;
          k[outside].x = k[outside].x >= 0.5 * (e.x0 + e.x1) ? e.x1 + margin
                                                              : e.x0 - margin;
        }
        const double bw = e.x1 - e.x0;
        const double bh = e.y1 - e.y0;
        if (bw >= cfg.image_size - 1 || bh >= cfg.image_size - 1) continue;
        const double ox = u01(rng) * (cfg.image_size - 1 - bw) - e.x0;
        const double oy = u01(rng) * (cfg.image_size - 1 - bh) - e.y0;

        PoseInstance inst;
        inst.image_id = info.id;
        const double bx = quantize(e.x0 + ox);
        const double by = quantize(e.y0 + oy);
        const double qw = quantize(bw);
        const double qh = quantize(bh);
        inst.bbox = BBox::from_top_left(bx, by, qw, qh);
        inst.area = quantize(qw * qh);
        for (int n = 0; n < kNumKeypoints; ++n) {
          auto& g = inst.keypoints[n];
          if (u01(rng) < cfg.out_of_view_rate) {
            g = {0.0, 0.0, 0};
          } else {
            g = {quantize(k[n].x + ox), quantize(k[n].y + oy),
                 u01(rng) < cfg.occlusion_rate ? 1 : 2};
          }
        }

        bool clash = false;
        for (const auto& q : placed) {
          clash = clash || iou(q.bbox, inst.bbox) > cfg.max_overlap;
        }
        if (clash) continue;

        std::vector<PoseInstance> trial = placed;
        trial.push_back(inst);
        const auto assigned = assign(trial, spec, cfg.image_size);
        std::vector<bool> covered(trial.size(), false);
        for (const auto& a : assigned) covered[a.gt_index] = true;
        if (std::find(covered.begin(), covered.end(), false) != covered.end()) {
          continue;
        }
        placed.push_back(inst);
        break;
      }
    }
    for (auto& inst : placed) {
      inst.id = next_ann++;
      out.instances.push_back(inst);
    }
  }
  return out;
}

HeadTensor render_heads(std::span<const PoseInstance> gts,
                        const AnchorSpec& spec, int input_size,
                        double conf_logit) {
  HeadTensor heads = HeadTensor::zeros(spec, input_size);
  for (auto& s : heads.scales) {
    for (std::size_t a = 0; a < s.num_anchors(); ++a) {
      s.data[a * kNumChannels + channel::kObj] = -conf_logit;
    }
  }
  for (const auto& a : assign(gts, spec, input_size)) {
    write_target(encode(gts[a.gt_index], a.slot(), spec), heads.cell(a.slot()),
                 conf_logit);
  }
  return heads;
}

std::string_view to_string(Schedule s) noexcept {
  return s == Schedule::kCosine ? "cosine" : "constant";
}

Schedule parse_schedule(std::string_view name) {
  if (name == "constant") return Schedule::kConstant;
  if (name == "cosine") return Schedule::kCosine;
  throw Error("unknown schedule '" + std::string(name) +
              "' (expected constant or cosine)");
}

void FitConfig::validate() const {
  if (steps < 0) throw Error("fit: steps must be non-negative");
  if (!(learning_rate > 0.0)) throw Error("fit: learning rate must be positive");
  if (!(divergence_factor > 1.0)) {
    throw Error("fit: divergence factor must exceed 1");
  }
  loss_weights.validate();
  kpt_weights.validate();
  postprocess.validate();
}

double scheduled_rate(const FitConfig& cfg, int step) noexcept {
  if (cfg.schedule == Schedule::kConstant || cfg.steps <= 0) {
    return cfg.learning_rate;
  }
  const double progress = static_cast<double>(step) / cfg.steps;
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

int input_size_for(const ImageInfo& image, const AnchorSpec& spec) {
  if (image.width <= 0 || image.height <= 0) {
    throw Error("image " + std::to_string(image.id) + " has no size");
  }
  const int m = spec.max_stride();
  const int side = std::max(image.width, image.height);
  return (side + m - 1) / m * m;
}

namespace {

struct ImageProblem {
  std::vector<PoseInstance> gts;  // letterboxed
  std::vector<Assignment> assignments;
  LetterboxTransform transform;
};

}  // namespace

FitResult fit(const Dataset& data, const AnchorSpec& spec, const FitConfig& cfg) {
  cfg.validate();
  spec.validate();

  std::vector<ImageProblem> problems;
  FitResult result;
  std::size_t total_assignments = 0;
  for (const auto& image : data.images) {
    ImageProblem p;
    const int input = input_size_for(image, spec);
    p.transform = letterbox(image.width, image.height, input);
    for (const auto& g : data.instances) {
      if (g.image_id == image.id && !g.iscrowd) {
        p.gts.push_back(to_letterbox(g, p.transform));
      }
    }
    p.assignments = assign(p.gts, spec, input, cfg.assign_options);
    total_assignments += p.assignments.size();
    result.heads.push_back(HeadTensor::zeros(spec, input));
    result.transforms.push_back(p.transform);
    problems.push_back(std::move(p));
  }
  if (total_assignments == 0) {
    throw Error("fit: no instance could be assigned to an anchor");
  }

  double initial_total = 0.0;
  result.trajectory.reserve(cfg.steps + 1);
  for (int step = 0; step <= cfg.steps; ++step) {
    LossRecord rec{step};
    std::vector<HeadGradient> grads;
    grads.reserve(problems.size());
    for (std::size_t im = 0; im < problems.size(); ++im) {
      LossBreakdown b = total_loss(result.heads[im], spec,
                                   problems[im].assignments, problems[im].gts,
                                   cfg.loss_weights, cfg.kpt_weights,
                                   cfg.kpt_loss);
      rec.cls += b.cls;
      rec.box += b.box;
      rec.kpts += b.kpts;
      rec.kpts_conf += b.kpts_conf;
      rec.total += b.total;
      grads.push_back(std::move(b.grad));
    }
    result.trajectory.push_back(rec);
    if (step == 0) initial_total = rec.total;
    if (!std::isfinite(rec.total) ||
        rec.total > cfg.divergence_factor * initial_total) {
      std::ostringstream os;
      os << "fit: diverged at step " << step << " (total loss " << rec.total
         << ", initial " << initial_total << ")";
      throw DivergenceError(os.str());
    }
    if (step == cfg.steps) break;
    const double rate = scheduled_rate(cfg, step);
    for (std::size_t im = 0; im < problems.size(); ++im) {
      grads[im].apply(result.heads[im], rate);
    }
  }

  for (std::size_t im = 0; im < problems.size(); ++im) {
    auto dets = postprocess(decode(result.heads[im], spec), cfg.postprocess,
                            problems[im].transform);
    for (auto& d : dets) {
      d.image_id = data.images[im].id;
      result.detections.push_back(d);
    }
  }
  result.report = evaluate(data, result.detections, AreaRange::all(), cfg.eval);
  return result;
}

std::vector<AblationRow> ablate(const Dataset& data, const AnchorSpec& spec,
                                const FitConfig& base) {
  std::vector<AblationRow> rows;
  for (auto variant : {KptLossVariant::kOks, KptLossVariant::kScaleL1,
                       KptLossVariant::kL1}) {
    FitConfig cfg = base;
    cfg.kpt_loss = variant;
    const FitResult r = fit(data, spec, cfg);
    rows.push_back({variant, r.report.ap, r.report.ap50, r.report.ap75,
                    r.report.ar, r.trajectory.back().total});
  }
  return rows;
}

}  // namespace yolopose

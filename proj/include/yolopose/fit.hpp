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
// Desk-scale fitting harness. Raw head channels are optimized directly by
// gradient descent on the pose loss, with no network in between, so the loss
// mathematics can be checked end to end on synthetic scenes.
// ============================================================================

#include <cstdint>
#include <string_view>
#include <vector>

#include "yolopose/assigner.hpp"
#include "yolopose/codec.hpp"
#include "yolopose/core.hpp"
#include "yolopose/evaluator.hpp"
#include "yolopose/loss.hpp"
#include "yolopose/postprocess.hpp"

namespace yolopose {

/// Raised by fit when the total loss leaves the configured envelope.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int num_images = 10;
  int min_persons = 1;
  int max_persons = 4;
  /// Square image side; must be a multiple of the largest stride.
  int image_size = 640;
  /// Person height range in pixels, sampled log-uniformly.
  double min_height = 60.0;
  double max_height = 360.0;
  /// Probability that a keypoint is labeled but occluded (v = 1).
  double occlusion_rate = 0.1;
  /// Probability that a keypoint is out of view (v = 0).
  double out_of_view_rate = 0.0;
  /// Probability that an instance has one wrist placed outside its box.
  double outside_box_rate = 0.0;
  /// Maximum box IoU between persons of the same image.
  double max_overlap = 0.3;

  void validate() const;
};

/// Deterministic set of images with articulated stick-figure persons. Every
/// instance gets at least one anchor assignment under `spec`. All coordinates
/// are quantized to 0.01 px so the set survives a JSON round trip unchanged.
///
/// Throws Error when the height range cannot be matched by any anchor.
Dataset synth(const SynthConfig& cfg, const AnchorSpec& spec);

/// A head tensor whose decode reproduces the given instances of one image:
/// assigned slots hold their encoded targets, every other anchor a strongly
/// negative objectness.
HeadTensor render_heads(std::span<const PoseInstance> gts,
                        const AnchorSpec& spec, int input_size,
                        double conf_logit = 12.0);

enum class Schedule { kConstant, kCosine };

std::string_view to_string(Schedule s) noexcept;
Schedule parse_schedule(std::string_view name);

struct FitConfig {
  int steps = 2000;
  double learning_rate = 0.05;
  Schedule schedule = Schedule::kConstant;
  KptLossVariant kpt_loss = KptLossVariant::kOks;
  LossWeights loss_weights;
  KptWeights kpt_weights = KptWeights::coco();
  AssignOptions assign_options;
  PostprocessConfig postprocess;
  EvalParams eval;
  /// Abort when the total loss exceeds this multiple of its initial value.
  double divergence_factor = 10.0;

  void validate() const;
};

struct LossRecord {
  int step = 0;
  double cls = 0.0;
  double box = 0.0;
  double kpts = 0.0;
  double kpts_conf = 0.0;
  double total = 0.0;
};

struct FitResult {
  /// Loss before every update and after the last one: steps + 1 records.
  std::vector<LossRecord> trajectory;
  /// Raw channels after the last update, one per image in `Dataset::images`
  /// order.
  std::vector<HeadTensor> heads;
  std::vector<LetterboxTransform> transforms;
  /// Post-processed detections in source-image coordinates.
  std::vector<Detection> detections;
  EvalReport report;
};

/// Learning rate at `step` of `steps` under the configured schedule.
double scheduled_rate(const FitConfig& cfg, int step) noexcept;

/// Square network input used for an image: the longer side rounded up to a
/// multiple of the largest stride.
int input_size_for(const ImageInfo& image, const AnchorSpec& spec);

/// Runs gradient descent from all-zero raw channels.
/// Throws DivergenceError on divergence and Error when no instance can be
/// assigned.
FitResult fit(const Dataset& data, const AnchorSpec& spec, const FitConfig& cfg);

struct AblationRow {
  KptLossVariant variant = KptLossVariant::kOks;
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ar = 0.0;
  double final_total = 0.0;
};

/// One fit per keypoint-loss variant (oks, scale_l1, l1) under otherwise
/// identical configuration.
std::vector<AblationRow> ablate(const Dataset& data, const AnchorSpec& spec,
                                const FitConfig& base);

}  // namespace yolopose

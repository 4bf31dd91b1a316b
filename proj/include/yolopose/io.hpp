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
// File formats: COCO keypoint annotations, COCO-style keypoint results, head
// tensor manifests, evaluation reports, loss trajectories and ablation tables.
//
// JSON floats are written at 6 significant digits with stable key order, so
// every emission is byte-deterministic. Head tensors are stored as raw
// little-endian float32, one file per scale, described by a JSON manifest:
//
//   {"input_size": 640, "image_id": 1, "src_width": 640, "src_height": 480,
//    "scales": [{"stride": 8, "anchors": [[19, 27], ...],
//                "file": "000001_s0.bin", "shape": [3, 80, 80, 57]}, ...]}
//
// image_id, src_width and src_height are optional.
// ============================================================================

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "yolopose/codec.hpp"
#include "yolopose/core.hpp"
#include "yolopose/evaluator.hpp"
#include "yolopose/fit.hpp"

namespace yolopose {

/// Malformed or inconsistent file contents. The message locates the problem.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file that cannot be opened, read or written.
class FileError : public Error {
 public:
  using Error::Error;
};

/// Rounds to 6 significant digits, the precision of every JSON emission.
[[nodiscard]] double round6(double v);

// ----------------------------------------------------------------------------
// COCO keypoint annotations
// ----------------------------------------------------------------------------
Dataset parse_coco(std::string_view text);
std::string dump_coco(const Dataset& data);
Dataset load_coco(const std::filesystem::path& path);
void save_coco(const std::filesystem::path& path, const Dataset& data);

// ----------------------------------------------------------------------------
// Keypoint results: {image_id, category_id, bbox, keypoints[51], score}. The
// third slot of each keypoint triple carries the predicted confidence.
// On load the score becomes box_conf (class_conf = 1).
// ----------------------------------------------------------------------------
std::vector<Detection> parse_results(std::string_view text);
std::string dump_results(std::span<const Detection> dets);
std::vector<Detection> load_results(const std::filesystem::path& path);
void save_results(const std::filesystem::path& path,
                  std::span<const Detection> dets);

// ----------------------------------------------------------------------------
// Head tensor manifests
// ----------------------------------------------------------------------------
struct HeadFile {
  AnchorSpec spec;
  HeadTensor heads;
  std::optional<std::int64_t> image_id;
  std::optional<double> src_width;
  std::optional<double> src_height;

  /// Letterbox from the recorded source size, identity when absent.
  [[nodiscard]] LetterboxTransform transform() const;
};

/// Reads a manifest and its per-scale binaries (paths relative to the
/// manifest). Shape or length disagreements name the offending scale.
HeadFile load_head_file(const std::filesystem::path& manifest);

/// Writes `<dir>/<stem>.json` and `<dir>/<stem>_s<k>.bin`.
void save_head_file(const std::filesystem::path& dir, std::string_view stem,
                    const HeadFile& file);

// ----------------------------------------------------------------------------
// Reports and tables
// ----------------------------------------------------------------------------
std::string dump_report(const EvalReport& report);
EvalReport parse_report(std::string_view text);

/// Header `step,cls,box,kpts,kpts_conf,total`, one row per record.
std::string dump_trajectory(std::span<const LossRecord> trajectory);

std::string dump_ablation(std::span<const AblationRow> rows,
                          const FitConfig& cfg);

/// COCO-style summary, one fixed-format line per metric. `area` labels the
/// range the main metrics were computed over.
std::string summary_lines(const EvalReport& report, std::string_view area,
                          int max_detections);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace yolopose

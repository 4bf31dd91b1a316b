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

// Central finite-difference checks of every analytic slot-loss gradient on
// seeded random configurations.

#include <cstdint>
#include <string>
#include <vector>

namespace yolopose {

inline constexpr double kFdStep = 1e-4;
inline constexpr double kFdRelTol = 1e-4;
inline constexpr double kFdAbsFloor = 1e-7;

/// |a - n| / max(|a|, |n|, kFdAbsFloor)
[[nodiscard]] double fd_relative_error(double analytic, double numeric) noexcept;

struct GradcheckSuite {
  std::string name;
  int trials = 0;
  /// Trials in which every one of the 57 channels met kFdRelTol.
  int passed = 0;
  double max_rel_error = 0.0;

  [[nodiscard]] bool ok() const noexcept { return trials > 0 && passed == trials; }
};

/// Suites kpts_oks, kpts_l1, kpts_scale_l1, box_ciou, kpt_conf, cls, each over
/// `trials` configurations drawn from `seed`.
std::vector<GradcheckSuite> run_gradchecks(int trials, std::uint64_t seed);

}  // namespace yolopose

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

// yolopose: decode, eval, synth, fit, ablate and gradcheck from the shell.
//
// Options may also come from a TOML file given with --config; flags on the
// command line win over the file, the file over built-in defaults. Failures
// print one JSON line {"error": kind, "message": text} to stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "yolopose/codec.hpp"
#include "yolopose/evaluator.hpp"
#include "yolopose/fit.hpp"
#include "yolopose/gradcheck.hpp"
#include "yolopose/io.hpp"
#include "yolopose/postprocess.hpp"

namespace fs = std::filesystem;
using namespace yolopose;

namespace {

enum Exit : int {
  kOk = 0,
  kFailed = 1,
  kUsage = 2,
  kBadInput = 3,
  kDiverged = 4,
};

int report_error(std::string_view kind, std::string_view message, int code) {
  const nlohmann::json line = {{"error", kind}, {"message", message}};
  std::cerr << line.dump() << '\n';
  return code;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FileError("cannot create directory '" + dir.string() + "': " + ec.message());
}

struct DecodeArgs {
  std::vector<std::string> manifests;
  PostprocessConfig post;
  std::string out;
};

void run_decode(const DecodeArgs& a) {
  a.post.validate();
  std::vector<Detection> all;
  for (std::size_t n = 0; n < a.manifests.size(); ++n) {
    const HeadFile f = load_head_file(a.manifests[n]);
    auto dets = postprocess(decode(f.heads, f.spec), a.post, f.transform());
    for (auto& d : dets) {
      d.image_id = f.image_id.value_or(static_cast<std::int64_t>(n) + 1);
      all.push_back(d);
    }
  }
  save_results(a.out, all);
  std::printf("decoded %zu detections from %zu manifests\n", all.size(),
              a.manifests.size());
}

struct EvalArgs {
  std::string gt;
  std::string dt;
  std::string out;
  std::string area = "all";
  EvalParams params;
};

void run_eval(const EvalArgs& a) {
  const Dataset data = load_coco(a.gt);
  const auto dets = load_results(a.dt);
  const AreaRange range = a.area == "large" ? AreaRange::large() : AreaRange::all();
  const EvalReport report = evaluate(data, dets, range, a.params);
  write_text(a.out, dump_report(report));
  std::fputs(summary_lines(report, a.area, a.params.max_detections).c_str(), stdout);
}

struct SynthArgs {
  SynthConfig cfg;
  std::string out;
  bool heads = true;
};

void run_synth(const SynthArgs& a) {
  const AnchorSpec spec = AnchorSpec::defaults();
  const Dataset data = synth(a.cfg, spec);
  const fs::path dir(a.out);
  ensure_dir(dir);
  save_coco(dir / "gt.json", data);
  std::size_t written = 0;
  if (a.heads) {
    ensure_dir(dir / "heads");
    for (const auto& im : data.images) {
      std::vector<PoseInstance> gts;
      for (const auto& g : data.instances) {
        if (g.image_id == im.id) gts.push_back(g);
      }
      HeadFile f;
      f.spec = spec;
      f.heads = render_heads(gts, spec, input_size_for(im, spec));
      f.image_id = im.id;
      f.src_width = im.width;
      f.src_height = im.height;
      save_head_file(dir / "heads", fs::path(im.file_name).stem().string(), f);
      ++written;
    }
  }
  std::printf("wrote %zu images, %zu instances, %zu head manifests to %s\n",
              data.images.size(), data.instances.size(), written,
              dir.string().c_str());
}

struct FitArgs {
  std::string gt;
  std::string loss = "oks";
  std::string schedule = "constant";
  FitConfig cfg;
  std::string out;
};

FitConfig fit_config(const FitArgs& a) {
  FitConfig cfg = a.cfg;
  cfg.kpt_loss = parse_kpt_loss_variant(a.loss);
  cfg.schedule = parse_schedule(a.schedule);
  return cfg;
}

void run_fit(const FitArgs& a) {
  const Dataset data = load_coco(a.gt);
  const FitConfig cfg = fit_config(a);
  const FitResult r = fit(data, AnchorSpec::defaults(), cfg);
  const fs::path dir(a.out);
  ensure_dir(dir);
  write_text(dir / "trajectory.csv", dump_trajectory(r.trajectory));
  save_results(dir / "dets.json", r.detections);
  write_text(dir / "report.json", dump_report(r.report));
  std::fputs(summary_lines(r.report, "all", cfg.eval.max_detections).c_str(), stdout);
}

void run_ablate(const FitArgs& a) {
  const Dataset data = load_coco(a.gt);
  const FitConfig cfg = fit_config(a);
  const auto rows = ablate(data, AnchorSpec::defaults(), cfg);
  write_text(a.out, dump_ablation(rows, cfg));
  for (const auto& r : rows) {
    std::printf("%-9s AP %.3f  AP50 %.3f  AP75 %.3f  AR %.3f\n",
                std::string(to_string(r.variant)).c_str(), r.ap, r.ap50, r.ap75, r.ar);
  }
}

struct GradcheckArgs {
  int trials = 100;
  std::uint64_t seed = 0;
};

int run_gradcheck(const GradcheckArgs& a) {
  if (a.trials <= 0) throw Error("gradcheck: --trials must be positive");
  const auto suites = run_gradchecks(a.trials, a.seed);
  std::vector<std::string> failed;
  for (const auto& s : suites) {
    std::printf("%-14s %d/%d passed  max relative error %.1e\n", s.name.c_str(),
                s.passed, s.trials, s.max_rel_error);
    if (!s.ok()) failed.push_back(s.name);
  }
  if (failed.empty()) return kOk;
  std::string names;
  for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
  return report_error("gradcheck_failed", "failing suites: " + names, kFailed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"YOLO-style pose decoding, loss, evaluation and fitting"};
  app.set_config("--config", "", "TOML file supplying option values");
  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "Print the effective configuration and exit");
  app.require_subcommand(1);
  app.fallthrough();

  DecodeArgs dec;
  auto* decode_cmd = app.add_subcommand("decode", "Head tensor manifests to a results file");
  decode_cmd->add_option("--manifest", dec.manifests, "Head manifest (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  decode_cmd->add_option("--conf", dec.post.conf_threshold, "Score threshold")
      ->capture_default_str();
  decode_cmd->add_option("--iou", dec.post.nms_iou_threshold, "NMS IoU threshold")
      ->capture_default_str();
  decode_cmd->add_option("--kpt-conf", dec.post.kpt_conf_threshold,
                         "Keypoint confidence threshold")
      ->capture_default_str();
  decode_cmd->add_option("--max-det", dec.post.max_detections, "Detections kept per image")
      ->capture_default_str();
  decode_cmd->add_option("--out", dec.out, "Results JSON")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "OKS AP/AR of a results file");
  eval_cmd->add_option("--gt", ev.gt, "COCO keypoint annotations")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--dt", ev.dt, "Results file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", ev.out, "Report JSON")->required();
  eval_cmd->add_option("--area-range", ev.area, "all or large")
      ->check(CLI::IsMember({"all", "large"}))
      ->capture_default_str();
  eval_cmd->add_option("--max-det", ev.params.max_detections, "Detections per image")
      ->capture_default_str();

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic annotations and head tensors");
  synth_cmd->add_option("--seed", sy.cfg.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--images", sy.cfg.num_images, "Number of images")
      ->capture_default_str();
  synth_cmd->add_option("--min-persons", sy.cfg.min_persons)->capture_default_str();
  synth_cmd->add_option("--max-persons", sy.cfg.max_persons)->capture_default_str();
  synth_cmd->add_option("--image-size", sy.cfg.image_size)->capture_default_str();
  synth_cmd->add_option("--min-height", sy.cfg.min_height)->capture_default_str();
  synth_cmd->add_option("--max-height", sy.cfg.max_height)->capture_default_str();
  synth_cmd->add_option("--occlusion-rate", sy.cfg.occlusion_rate)->capture_default_str();
  synth_cmd->add_option("--out-of-view-rate", sy.cfg.out_of_view_rate)->capture_default_str();
  synth_cmd->add_option("--outside-box-rate", sy.cfg.outside_box_rate)->capture_default_str();
  synth_cmd->add_flag("--heads,!--no-heads", sy.heads, "Write head tensor files")->capture_default_str();
  synth_cmd->add_option("--out", sy.out, "Output directory")->required();

  FitArgs fa;
  auto add_fit_options = [&](CLI::App* cmd) {
    cmd->add_option("--gt", fa.gt, "COCO keypoint annotations")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--steps", fa.cfg.steps, "Gradient steps")->capture_default_str();
    cmd->add_option("--lr", fa.cfg.learning_rate, "Base learning rate")->capture_default_str();
    cmd->add_option("--schedule", fa.schedule, "constant or cosine")
        ->check(CLI::IsMember({"constant", "cosine"}))
        ->capture_default_str();
    cmd->add_flag("--neighbor-cells", fa.cfg.assign_options.neighbor_cells,
                  "Also assign the two nearest neighbouring cells");
  };
  auto* fit_cmd = app.add_subcommand("fit", "Gradient descent on raw head channels");
  add_fit_options(fit_cmd);
  fit_cmd->add_option("--loss", fa.loss, "oks, l1 or scale_l1")
      ->check(CLI::IsMember({"oks", "l1", "scale_l1"}))
      ->capture_default_str();
  fit_cmd->add_option("--out", fa.out, "Output directory")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "Fit once per keypoint loss");
  add_fit_options(ablate_cmd);
  ablate_cmd->add_option("--out", fa.out, "Table JSON")->required();

  GradcheckArgs gc;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck_cmd->add_option("--trials", gc.trials, "Configurations per suite")
      ->capture_default_str();
  gradcheck_cmd->add_option("--seed", gc.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), kUsage);
  }
  if (print_config) {
    std::cout << app.config_to_str(true, false);
    return kOk;
  }

  try {
    if (*decode_cmd) run_decode(dec);
    if (*eval_cmd) run_eval(ev);
    if (*synth_cmd) run_synth(sy);
    if (*fit_cmd) run_fit(fa);
    if (*ablate_cmd) run_ablate(fa);
    if (*gradcheck_cmd) return run_gradcheck(gc);
  } catch (const FormatError& e) {
    return report_error("format", e.what(), kBadInput);
  } catch (const FileError& e) {
    return report_error("io", e.what(), kBadInput);
  } catch (const DivergenceError& e) {
    return report_error("divergence", e.what(), kDiverged);
  } catch (const Error& e) {
    return report_error("invalid_argument", e.what(), kUsage);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), kFailed);
  }
  return kOk;
}

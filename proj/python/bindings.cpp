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


#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>

#include "yolopose/assigner.hpp"
#include "yolopose/codec.hpp"
#include "yolopose/core.hpp"
#include "yolopose/evaluator.hpp"
#include "yolopose/fit.hpp"
#include "yolopose/gradcheck.hpp"
#include "yolopose/io.hpp"
#include "yolopose/loss.hpp"
#include "yolopose/postprocess.hpp"

namespace py = pybind11;
using namespace yolopose;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ChannelVector to_channels(const Array& raw) {
  if (raw.ndim() != 1 || raw.shape(0) != kNumChannels) {
    throw Error("raw cell must be a vector of " + std::to_string(kNumChannels) + " values");
  }
  ChannelVector out{};
  std::copy(raw.data(), raw.data() + kNumChannels, out.begin());
  return out;
}

py::tuple slot_loss(const SlotLoss& l) {
  return py::make_tuple(l.value, Array(kNumChannels, l.grad.data()));
}

HeadTensor heads_from_arrays(const std::vector<Array>& scales, int input_size,
                             const AnchorSpec& spec) {
  if (scales.size() != kNumScales) throw Error("expected 4 scale arrays");
  HeadTensor h = HeadTensor::zeros(spec, input_size);
  for (int s = 0; s < kNumScales; ++s) {
    auto& t = h.scales[s];
    const Array& a = scales[s];
    if (a.ndim() != 4 || a.shape(0) != kAnchorsPerScale || a.shape(1) != t.rows ||
        a.shape(2) != t.cols || a.shape(3) != kNumChannels) {
      throw Error("scale " + std::to_string(s) + ": expected shape [3, " +
                  std::to_string(t.rows) + ", " + std::to_string(t.cols) + ", 57]");
    }
    std::copy(a.data(), a.data() + a.size(), t.data.begin());
  }
  h.validate(spec);
  return h;
}

std::vector<Array> heads_to_arrays(const HeadTensor& h) {
  std::vector<Array> out;
  for (const auto& t : h.scales) {
    Array a({kAnchorsPerScale, t.rows, t.cols, kNumChannels});
    std::copy(t.data.begin(), t.data.end(), a.mutable_data());
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "YOLO-style pose decoding, losses, post-processing, evaluation and fitting";

  auto& base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<FileError>(m, "FileError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

  m.attr("NUM_KEYPOINTS") = kNumKeypoints;
  m.attr("NUM_CHANNELS") = kNumChannels;

  py::class_<BBox>(m, "BBox")
      .def(py::init<>())
      .def(py::init<double, double, double, double>(), py::arg("cx"), py::arg("cy"),
           py::arg("w"), py::arg("h"))
      .def_static("from_top_left", &BBox::from_top_left)
      .def_readwrite("cx", &BBox::cx)
      .def_readwrite("cy", &BBox::cy)
      .def_readwrite("w", &BBox::w)
      .def_readwrite("h", &BBox::h)
      .def_property_readonly("area", &BBox::area)
      .def(py::self == py::self)
      .def("__repr__", [](const BBox& b) {
        return "BBox(cx=" + std::to_string(b.cx) + ", cy=" + std::to_string(b.cy) +
               ", w=" + std::to_string(b.w) + ", h=" + std::to_string(b.h) + ")";
      });

  py::class_<GtKeypoint>(m, "GtKeypoint")
      .def(py::init<>())
      .def(py::init<double, double, int>(), py::arg("x"), py::arg("y"), py::arg("v"))
      .def_readwrite("x", &GtKeypoint::x)
      .def_readwrite("y", &GtKeypoint::y)
      .def_readwrite("v", &GtKeypoint::v);

  py::class_<PoseInstance>(m, "PoseInstance")
      .def(py::init<>())
      .def_readwrite("bbox", &PoseInstance::bbox)
      .def_readwrite("keypoints", &PoseInstance::keypoints)
      .def_readwrite("area", &PoseInstance::area)
      .def_readwrite("image_id", &PoseInstance::image_id)
      .def_readwrite("id", &PoseInstance::id)
      .def_readwrite("iscrowd", &PoseInstance::iscrowd)
      .def_property_readonly("num_labeled", &PoseInstance::num_labeled);

  py::class_<PredKeypoint>(m, "PredKeypoint")
      .def(py::init<>())
      .def(py::init<double, double, double, bool>(), py::arg("x"), py::arg("y"),
           py::arg("conf"), py::arg("present") = true)
      .def_readwrite("x", &PredKeypoint::x)
      .def_readwrite("y", &PredKeypoint::y)
      .def_readwrite("conf", &PredKeypoint::conf)
      .def_readwrite("present", &PredKeypoint::present);

  py::class_<Detection>(m, "Detection")
      .def(py::init<>())
      .def_readwrite("bbox", &Detection::bbox)
      .def_readwrite("box_conf", &Detection::box_conf)
      .def_readwrite("class_conf", &Detection::class_conf)
      .def_readwrite("keypoints", &Detection::keypoints)
      .def_readwrite("image_id", &Detection::image_id)
      .def_property_readonly("score", &Detection::score);

  py::class_<ImageInfo>(m, "ImageInfo")
      .def(py::init<>())
      .def(py::init<std::int64_t, int, int, std::string>(), py::arg("id"), py::arg("width"),
           py::arg("height"), py::arg("file_name") = "")
      .def_readwrite("id", &ImageInfo::id)
      .def_readwrite("width", &ImageInfo::width)
      .def_readwrite("height", &ImageInfo::height)
      .def_readwrite("file_name", &ImageInfo::file_name);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("images", &Dataset::images)
      .def_readwrite("instances", &Dataset::instances);

  py::class_<AnchorShape>(m, "AnchorShape")
      .def_readwrite("w", &AnchorShape::w)
      .def_readwrite("h", &AnchorShape::h);
  py::class_<ScaleSpec>(m, "ScaleSpec")
      .def_readwrite("stride", &ScaleSpec::stride)
      .def_readwrite("anchors", &ScaleSpec::anchors);
  py::class_<AnchorSpec>(m, "AnchorSpec")
      .def_static("defaults", &AnchorSpec::defaults)
      .def_readwrite("scales", &AnchorSpec::scales);
  py::class_<KptWeights>(m, "KptWeights")
      .def_static("coco", &KptWeights::coco)
      .def_readwrite("k", &KptWeights::k);

  py::class_<Slot>(m, "Slot")
      .def(py::init<int, int, int, int>(), py::arg("scale"), py::arg("i"), py::arg("j"),
           py::arg("anchor"))
      .def_readwrite("scale", &Slot::scale)
      .def_readwrite("i", &Slot::i)
      .def_readwrite("j", &Slot::j)
      .def_readwrite("anchor", &Slot::anchor);

  py::class_<LetterboxTransform>(m, "LetterboxTransform")
      .def_static("identity", &LetterboxTransform::identity)
      .def_readonly("scale", &LetterboxTransform::scale)
      .def_readonly("pad_right", &LetterboxTransform::pad_right)
      .def_readonly("pad_bottom", &LetterboxTransform::pad_bottom);

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("ciou", &ciou, py::arg("a"), py::arg("b"));
  m.def("letterbox", &letterbox, py::arg("src_w"), py::arg("src_h"), py::arg("dst"));
  m.def("unletterbox", &unletterbox, py::arg("det"), py::arg("transform"));

  m.def(
      "decode_cell",
      [](const Array& raw, const Slot& slot, const AnchorSpec& spec) {
        const ChannelVector c = to_channels(raw);
        return decode_cell(RawCell(c), CellContext::of(spec, slot));
      },
      py::arg("raw"), py::arg("slot"), py::arg("spec") = AnchorSpec::defaults());
  m.def(
      "encode",
      [](const PoseInstance& gt, const Slot& slot, const AnchorSpec& spec) {
        const EncodedTarget t = encode(gt, slot, spec);
        return py::make_tuple(Array(kNumChannels, t.values.data()),
                              py::array_t<bool>(kNumChannels, t.mask.data()));
      },
      py::arg("gt"), py::arg("slot"), py::arg("spec") = AnchorSpec::defaults());
  m.def(
      "decode",
      [](const std::vector<Array>& scales, int input_size, const AnchorSpec& spec) {
        return decode(heads_from_arrays(scales, input_size, spec), spec);
      },
      py::arg("scales"), py::arg("input_size"), py::arg("spec") = AnchorSpec::defaults());

  m.def(
      "assign",
      [](const std::vector<PoseInstance>& gts, int input_size, bool neighbor_cells,
         const AnchorSpec& spec) {
        std::vector<py::tuple> out;
        for (const auto& a : assign(gts, spec, input_size, {4.0, neighbor_cells})) {
          out.push_back(py::make_tuple(Slot{a.slot()}, a.gt_index));
        }
        return out;
      },
      py::arg("gts"), py::arg("input_size"), py::arg("neighbor_cells") = false,
      py::arg("spec") = AnchorSpec::defaults());

  m.def(
      "oks",
      [](const std::array<PredKeypoint, kNumKeypoints>& pred, const PoseInstance& gt,
         const KptWeights& weights) { return oks(pred, gt, weights); },
      py::arg("pred"), py::arg("gt"), py::arg("weights") = KptWeights::coco());
  m.def(
      "loss_kpts",
      [](const Array& raw, const Slot& slot, const PoseInstance& gt, const std::string& variant,
         const AnchorSpec& spec) {
        const ChannelVector c = to_channels(raw);
        const CellContext ctx = CellContext::of(spec, slot);
        switch (parse_kpt_loss_variant(variant)) {
          case KptLossVariant::kL1:
            return slot_loss(loss_kpts_l1(RawCell(c), ctx, gt));
          case KptLossVariant::kScaleL1:
            return slot_loss(loss_kpts_scale_l1(RawCell(c), ctx, gt));
          case KptLossVariant::kOks:
            break;
        }
        return slot_loss(loss_kpts(RawCell(c), ctx, gt, KptWeights::coco()));
      },
      py::arg("raw"), py::arg("slot"), py::arg("gt"), py::arg("variant") = "oks",
      py::arg("spec") = AnchorSpec::defaults());
  m.def(
      "loss_box",
      [](const Array& raw, const Slot& slot, const BBox& gt_box, const AnchorSpec& spec) {
        const ChannelVector c = to_channels(raw);
        return slot_loss(loss_box(RawCell(c), CellContext::of(spec, slot), gt_box));
      },
      py::arg("raw"), py::arg("slot"), py::arg("gt_box"), py::arg("spec") = AnchorSpec::defaults());
  m.def(
      "loss_kpt_conf",
      [](const Array& raw, const PoseInstance& gt) {
        const ChannelVector c = to_channels(raw);
        return slot_loss(loss_kpt_conf(RawCell(c), gt.keypoints));
      },
      py::arg("raw"), py::arg("gt"));
  m.def(
      "loss_cls",
      [](const Array& raw, bool matched) {
        const ChannelVector c = to_channels(raw);
        return slot_loss(loss_cls(RawCell(c), matched));
      },
      py::arg("raw"), py::arg("matched"));

  py::class_<PostprocessConfig>(m, "PostprocessConfig")
      .def(py::init<>())
      .def_readwrite("conf_threshold", &PostprocessConfig::conf_threshold)
      .def_readwrite("nms_iou_threshold", &PostprocessConfig::nms_iou_threshold)
      .def_readwrite("kpt_conf_threshold", &PostprocessConfig::kpt_conf_threshold)
      .def_readwrite("max_detections", &PostprocessConfig::max_detections);
  m.def("nms", &nms, py::arg("dets"), py::arg("iou_threshold") = 0.65);
  m.def("postprocess", &postprocess, py::arg("dets"), py::arg("config") = PostprocessConfig{},
        py::arg("transform") = LetterboxTransform::identity(640));

  py::class_<AreaRange>(m, "AreaRange")
      .def_static("all", &AreaRange::all)
      .def_static("medium", &AreaRange::medium)
      .def_static("large", &AreaRange::large)
      .def_readwrite("lo", &AreaRange::lo)
      .def_readwrite("hi", &AreaRange::hi);
  py::class_<EvalParams>(m, "EvalParams")
      .def(py::init<>())
      .def_readwrite("oks_thresholds", &EvalParams::oks_thresholds)
      .def_readwrite("max_detections", &EvalParams::max_detections);
  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("ap", &EvalReport::ap)
      .def_readonly("ap50", &EvalReport::ap50)
      .def_readonly("ap75", &EvalReport::ap75)
      .def_readonly("ap_large", &EvalReport::ap_large)
      .def_readonly("ar", &EvalReport::ar);
  m.def("evaluation_oks", &evaluation_oks, py::arg("det"), py::arg("gt"),
        py::arg("weights") = KptWeights::coco());
  m.def(
      "evaluate",
      [](const Dataset& gt, const std::vector<Detection>& dets, const AreaRange& range,
         const EvalParams& params) { return evaluate(gt, dets, range, params); },
      py::arg("gt"), py::arg("dets"),
        py::arg("area_range") = AreaRange::all(), py::arg("params") = EvalParams{});

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("num_images", &SynthConfig::num_images)
      .def_readwrite("min_persons", &SynthConfig::min_persons)
      .def_readwrite("max_persons", &SynthConfig::max_persons)
      .def_readwrite("image_size", &SynthConfig::image_size)
      .def_readwrite("min_height", &SynthConfig::min_height)
      .def_readwrite("max_height", &SynthConfig::max_height)
      .def_readwrite("occlusion_rate", &SynthConfig::occlusion_rate)
      .def_readwrite("out_of_view_rate", &SynthConfig::out_of_view_rate)
      .def_readwrite("outside_box_rate", &SynthConfig::outside_box_rate)
      .def_readwrite("max_overlap", &SynthConfig::max_overlap);
  m.def("synth", &synth, py::arg("config") = SynthConfig{},
        py::arg("spec") = AnchorSpec::defaults());
  m.def(
      "render_heads",
      [](const std::vector<PoseInstance>& gts, int input_size, const AnchorSpec& spec) {
        return heads_to_arrays(render_heads(gts, spec, input_size));
      },
      py::arg("gts"), py::arg("input_size"), py::arg("spec") = AnchorSpec::defaults());

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("steps", &FitConfig::steps)
      .def_readwrite("learning_rate", &FitConfig::learning_rate)
      .def_property(
          "schedule", [](const FitConfig& c) { return std::string(to_string(c.schedule)); },
          [](FitConfig& c, const std::string& s) { c.schedule = parse_schedule(s); })
      .def_property(
          "kpt_loss", [](const FitConfig& c) { return std::string(to_string(c.kpt_loss)); },
          [](FitConfig& c, const std::string& s) { c.kpt_loss = parse_kpt_loss_variant(s); })
      .def_readwrite("postprocess", &FitConfig::postprocess)
      .def_readwrite("divergence_factor", &FitConfig::divergence_factor);
  py::class_<LossRecord>(m, "LossRecord")
      .def_readonly("step", &LossRecord::step)
      .def_readonly("cls", &LossRecord::cls)
      .def_readonly("box", &LossRecord::box)
      .def_readonly("kpts", &LossRecord::kpts)
      .def_readonly("kpts_conf", &LossRecord::kpts_conf)
      .def_readonly("total", &LossRecord::total);
  py::class_<FitResult>(m, "FitResult")
      .def_readonly("trajectory", &FitResult::trajectory)
      .def_readonly("detections", &FitResult::detections)
      .def_readonly("report", &FitResult::report);
  m.def("fit", &fit, py::arg("data"), py::arg("spec") = AnchorSpec::defaults(),
        py::arg("config") = FitConfig{}, py::call_guard<py::gil_scoped_release>());
  m.def(
      "ablate",
      [](const Dataset& data, const FitConfig& cfg, const AnchorSpec& spec) {
        std::vector<py::dict> rows;
        for (const auto& r : ablate(data, spec, cfg)) {
          py::dict d;
          d["variant"] = std::string(to_string(r.variant));
          d["ap"] = r.ap;
          d["ap50"] = r.ap50;
          d["ap75"] = r.ap75;
          d["ar"] = r.ar;
          d["final_total"] = r.final_total;
          rows.push_back(d);
        }
        return rows;
      },
      py::arg("data"), py::arg("config") = FitConfig{}, py::arg("spec") = AnchorSpec::defaults());

  py::class_<GradcheckSuite>(m, "GradcheckSuite")
      .def_readonly("name", &GradcheckSuite::name)
      .def_readonly("trials", &GradcheckSuite::trials)
      .def_readonly("passed", &GradcheckSuite::passed)
      .def_readonly("max_rel_error", &GradcheckSuite::max_rel_error)
      .def_property_readonly("ok", &GradcheckSuite::ok);
  m.def("run_gradchecks", &run_gradchecks, py::arg("trials") = 100, py::arg("seed") = 0);

  m.def("parse_coco", &parse_coco, py::arg("text"));
  m.def("dump_coco", &dump_coco, py::arg("data"));
  m.def("parse_results", &parse_results, py::arg("text"));
  m.def(
      "dump_results", [](const std::vector<Detection>& dets) { return dump_results(dets); },
      py::arg("dets"));
}

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

#include "yolopose/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace yolopose {

using Json = nlohmann::ordered_json;

double round6(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FileError("write to '" + path.string() + "' failed");
}

namespace {

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

// Runs `fn` and reports any JSON type or key error at `where`.
template <typename Fn>
auto located(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw FormatError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError(where + ": missing field '" + key + "'");
  }
  return *it;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json number(double v) { return Json(round6(v)); }

std::string annotation_where(std::size_t index, const Json& ann) {
  std::string where = "annotations[" + std::to_string(index) + "]";
  if (ann.is_object()) {
    auto it = ann.find("id");
    if (it != ann.end() && it->is_number_integer()) {
      where += " (id " + std::to_string(it->get<std::int64_t>()) + ")";
    }
  }
  return where;
}

}  // namespace

// ----------------------------------------------------------------------------
// COCO annotations
// ----------------------------------------------------------------------------
Dataset parse_coco(std::string_view text) {
  const Json root = parse_json(text, "annotation file");
  if (!root.is_object()) throw FormatError("annotation file: expected an object");

  Dataset data;
  std::set<std::int64_t> image_ids;
  const Json& images = require(root, "images", "annotation file");
  if (!images.is_array()) throw FormatError("annotation file: 'images' is not an array");
  for (std::size_t n = 0; n < images.size(); ++n) {
    const std::string where = "images[" + std::to_string(n) + "]";
    const Json& im = images[n];
    ImageInfo info = located(where, [&] {
      ImageInfo r;
      r.id = require(im, "id", where).get<std::int64_t>();
      r.width = require(im, "width", where).get<int>();
      r.height = require(im, "height", where).get<int>();
      if (auto it = im.find("file_name"); it != im.end()) {
        r.file_name = it->get<std::string>();
      }
      return r;
    });
    if (info.width <= 0 || info.height <= 0) {
      throw FormatError(where + ": width and height must be positive");
    }
    if (!image_ids.insert(info.id).second) {
      throw FormatError(where + ": duplicate image id " + std::to_string(info.id));
    }
    data.images.push_back(std::move(info));
  }

  std::int64_t person_id = 1;
  if (auto cats = root.find("categories"); cats != root.end()) {
    if (!cats->is_array()) throw FormatError("annotation file: 'categories' is not an array");
    bool found = false;
    for (std::size_t n = 0; n < cats->size(); ++n) {
      const std::string where = "categories[" + std::to_string(n) + "]";
      const Json& c = (*cats)[n];
      located(where, [&] {
        if (require(c, "name", where).get<std::string>() == "person") {
          person_id = require(c, "id", where).get<std::int64_t>();
          found = true;
        }
      });
    }
    if (!found) throw FormatError("annotation file: no 'person' category");
  }

  const Json& anns = require(root, "annotations", "annotation file");
  if (!anns.is_array()) throw FormatError("annotation file: 'annotations' is not an array");
  for (std::size_t n = 0; n < anns.size(); ++n) {
    const Json& a = anns[n];
    const std::string where = annotation_where(n, a);
    PoseInstance g = located(where, [&] {
      PoseInstance r;
      r.id = require(a, "id", where).get<std::int64_t>();
      r.image_id = require(a, "image_id", where).get<std::int64_t>();
      if (auto it = a.find("category_id"); it != a.end()) {
        const auto cat = it->get<std::int64_t>();
        if (cat != person_id) {
          throw FormatError(where + ": unknown category " + std::to_string(cat));
        }
      }
      const Json& bbox = require(a, "bbox", where);
      if (!bbox.is_array() || bbox.size() != 4) {
        throw FormatError(where + ": bbox must hold 4 numbers");
      }
      r.bbox = BBox::from_top_left(bbox[0].get<double>(), bbox[1].get<double>(),
                                   bbox[2].get<double>(), bbox[3].get<double>());
      const Json& kp = require(a, "keypoints", where);
      if (!kp.is_array() || kp.size() != 3 * kNumKeypoints) {
        throw FormatError(where + ": keypoints has " +
                          std::to_string(kp.is_array() ? kp.size() : 0) +
                          " numbers, expected 51");
      }
      for (int k = 0; k < kNumKeypoints; ++k) {
        auto& p = r.keypoints[k];
        p.x = kp[3 * k].get<double>();
        p.y = kp[3 * k + 1].get<double>();
        const double v = kp[3 * k + 2].get<double>();
        if (v != 0.0 && v != 1.0 && v != 2.0) {
          throw FormatError(where + ": keypoint " + std::to_string(k) +
                            " has visibility outside {0, 1, 2}");
        }
        p.v = static_cast<int>(v);
      }
      auto area = a.find("area");
      r.area = area != a.end() ? area->get<double>() : r.bbox.area();
      if (auto it = a.find("iscrowd"); it != a.end()) {
        r.iscrowd = it->is_boolean() ? it->get<bool>() : it->get<int>() != 0;
      }
      return r;
    });
    if (!(g.bbox.w >= 0.0) || !(g.bbox.h >= 0.0) || !(g.area >= 0.0)) {
      throw FormatError(where + ": negative box size or area");
    }
    if (!image_ids.contains(g.image_id)) {
      throw FormatError(where + ": unknown image id " + std::to_string(g.image_id));
    }
    data.instances.push_back(g);
  }
  return data;
}

std::string dump_coco(const Dataset& data) {
  Json root;
  Json images = Json::array();
  for (const auto& im : data.images) {
    images.push_back({{"id", im.id},
                      {"width", im.width},
                      {"height", im.height},
                      {"file_name", im.file_name}});
  }
  Json anns = Json::array();
  for (const auto& g : data.instances) {
    Json kp = Json::array();
    for (const auto& p : g.keypoints) {
      kp.push_back(number(p.x));
      kp.push_back(number(p.y));
      kp.push_back(p.v);
    }
    anns.push_back({{"id", g.id},
                    {"image_id", g.image_id},
                    {"category_id", 1},
                    {"bbox",
                     {number(g.bbox.x1()), number(g.bbox.y1()),
                      number(g.bbox.w), number(g.bbox.h)}},
                    {"area", number(g.area)},
                    {"iscrowd", g.iscrowd ? 1 : 0},
                    {"num_keypoints", g.num_labeled()},
                    {"keypoints", kp}});
  }
  Json names = Json::array();
  for (auto n : kKeypointNames) names.push_back(std::string(n));
  Json skeleton = Json::array();
  for (const auto& e : kSkeleton) skeleton.push_back({e[0], e[1]});
  root["images"] = std::move(images);
  root["annotations"] = std::move(anns);
  root["categories"] = Json::array({{{"id", 1},
                                     {"name", "person"},
                                     {"supercategory", "person"},
                                     {"keypoints", names},
                                     {"skeleton", skeleton}}});
  return dump(root);
}

Dataset load_coco(const std::filesystem::path& path) {
  return parse_coco(read_text(path));
}

void save_coco(const std::filesystem::path& path, const Dataset& data) {
  write_text(path, dump_coco(data));
}

// ----------------------------------------------------------------------------
// Results
// ----------------------------------------------------------------------------
std::vector<Detection> parse_results(std::string_view text) {
  const Json root = parse_json(text, "results file");
  if (!root.is_array()) throw FormatError("results file: expected an array");
  std::vector<Detection> dets;
  dets.reserve(root.size());
  for (std::size_t n = 0; n < root.size(); ++n) {
    const std::string where = "results[" + std::to_string(n) + "]";
    const Json& r = root[n];
    dets.push_back(located(where, [&] {
      Detection d;
      d.image_id = require(r, "image_id", where).get<std::int64_t>();
      if (auto it = r.find("category_id"); it != r.end() && it->get<std::int64_t>() != 1) {
        throw FormatError(where + ": unknown category " +
                          std::to_string(it->get<std::int64_t>()));
      }
      const double score = require(r, "score", where).get<double>();
      if (!(score >= 0.0 && score <= 1.0)) {
        throw FormatError(where + ": score outside [0, 1]");
      }
      d.box_conf = score;
      d.class_conf = 1.0;
      const Json& kp = require(r, "keypoints", where);
      if (!kp.is_array() || kp.size() != 3 * kNumKeypoints) {
        throw FormatError(where + ": keypoints has " +
                          std::to_string(kp.is_array() ? kp.size() : 0) +
                          " numbers, expected 51");
      }
      for (int k = 0; k < kNumKeypoints; ++k) {
        d.keypoints[k] = {kp[3 * k].get<double>(), kp[3 * k + 1].get<double>(),
                          kp[3 * k + 2].get<double>(), true};
      }
      if (auto it = r.find("bbox"); it != r.end()) {
        if (!it->is_array() || it->size() != 4) {
          throw FormatError(where + ": bbox must hold 4 numbers");
        }
        d.bbox = BBox::from_top_left((*it)[0].get<double>(), (*it)[1].get<double>(),
                                     (*it)[2].get<double>(), (*it)[3].get<double>());
      }
      return d;
    }));
  }
  return dets;
}

std::string dump_results(std::span<const Detection> dets) {
  Json root = Json::array();
  for (const auto& d : dets) {
    Json kp = Json::array();
    for (const auto& p : d.keypoints) {
      kp.push_back(number(p.x));
      kp.push_back(number(p.y));
      kp.push_back(number(p.conf));
    }
    root.push_back({{"image_id", d.image_id},
                    {"category_id", 1},
                    {"bbox",
                     {number(d.bbox.x1()), number(d.bbox.y1()),
                      number(d.bbox.w), number(d.bbox.h)}},
                    {"keypoints", kp},
                    {"score", number(d.score())}});
  }
  return dump(root);
}

std::vector<Detection> load_results(const std::filesystem::path& path) {
  return parse_results(read_text(path));
}

void save_results(const std::filesystem::path& path,
                  std::span<const Detection> dets) {
  write_text(path, dump_results(dets));
}

// ----------------------------------------------------------------------------
// Head tensors
// ----------------------------------------------------------------------------
LetterboxTransform HeadFile::transform() const {
  if (src_width && src_height) {
    return letterbox(*src_width, *src_height, heads.input_size);
  }
  return LetterboxTransform::identity(heads.input_size);
}

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) |
        (v >> 24);
  }
  return v;
}

std::vector<double> read_f32(const std::filesystem::path& path,
                             const std::string& where, std::size_t expected,
                             const std::string& shape) {
  const std::string bytes = read_text(path);
  if (bytes.size() != expected * 4) {
    std::ostringstream os;
    os << where << ": file '" << path.filename().string() << "' holds "
       << bytes.size() << " bytes (" << bytes.size() / 4.0
       << " float32 values); shape " << shape << " needs " << expected;
    throw FormatError(os.str());
  }
  std::vector<double> out(expected);
  for (std::size_t n = 0; n < expected; ++n) {
    std::uint32_t u;
    std::memcpy(&u, bytes.data() + 4 * n, 4);
    out[n] = std::bit_cast<float>(to_little(u));
  }
  return out;
}

}  // namespace

HeadFile load_head_file(const std::filesystem::path& manifest) {
  const std::string name = "manifest '" + manifest.filename().string() + "'";
  const Json root = parse_json(read_text(manifest), name);
  HeadFile f;
  located(name, [&] {
    f.heads.input_size = require(root, "input_size", name).get<int>();
    if (auto it = root.find("image_id"); it != root.end()) {
      f.image_id = it->get<std::int64_t>();
    }
    if (auto it = root.find("src_width"); it != root.end()) f.src_width = it->get<double>();
    if (auto it = root.find("src_height"); it != root.end()) f.src_height = it->get<double>();
  });
  if (f.src_width.has_value() != f.src_height.has_value()) {
    throw FormatError(name + ": src_width and src_height must appear together");
  }
  const Json& scales = require(root, "scales", name);
  if (!scales.is_array() || scales.size() != kNumScales) {
    throw FormatError(name + ": expected 4 scales");
  }
  for (int s = 0; s < kNumScales; ++s) {
    const std::string where = name + " scale " + std::to_string(s);
    const Json& sc = scales[s];
    located(where, [&] {
      f.spec.scales[s].stride = require(sc, "stride", where).get<int>();
      const Json& anchors = require(sc, "anchors", where);
      if (!anchors.is_array() || anchors.size() != kAnchorsPerScale) {
        throw FormatError(where + ": expected 3 anchors");
      }
      for (int a = 0; a < kAnchorsPerScale; ++a) {
        f.spec.scales[s].anchors[a] = {anchors[a].at(0).get<double>(),
                                       anchors[a].at(1).get<double>()};
      }
      const Json& shape = require(sc, "shape", where);
      if (!shape.is_array() || shape.size() != 4 ||
          shape[0].get<int>() != kAnchorsPerScale ||
          shape[3].get<int>() != kNumChannels || shape[1].get<int>() <= 0 ||
          shape[2].get<int>() <= 0) {
        throw FormatError(where + ": shape " + shape.dump() +
                          " is not [3, rows, cols, 57]");
      }
      auto& t = f.heads.scales[s];
      t.rows = shape[1].get<int>();
      t.cols = shape[2].get<int>();
      const auto file = manifest.parent_path() /
                        require(sc, "file", where).get<std::string>();
      t.data = read_f32(file, where, t.num_anchors() * kNumChannels, shape.dump());
    });
  }
  try {
    f.spec.validate();
    f.heads.validate(f.spec);
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(name + ": " + e.what());
  }
  return f;
}

void save_head_file(const std::filesystem::path& dir, std::string_view stem,
                    const HeadFile& file) {
  Json root;
  root["input_size"] = file.heads.input_size;
  if (file.image_id) root["image_id"] = *file.image_id;
  if (file.src_width) root["src_width"] = number(*file.src_width);
  if (file.src_height) root["src_height"] = number(*file.src_height);
  Json scales = Json::array();
  for (int s = 0; s < kNumScales; ++s) {
    const auto& sc = file.spec.scales[s];
    const auto& t = file.heads.scales[s];
    const std::string bin = std::string(stem) + "_s" + std::to_string(s) + ".bin";
    Json anchors = Json::array();
    for (const auto& a : sc.anchors) anchors.push_back({number(a.w), number(a.h)});
    scales.push_back({{"stride", sc.stride},
                      {"anchors", anchors},
                      {"file", bin},
                      {"shape", {kAnchorsPerScale, t.rows, t.cols, kNumChannels}}});
    std::string bytes(t.data.size() * 4, '\0');
    for (std::size_t n = 0; n < t.data.size(); ++n) {
      const std::uint32_t u =
          to_little(std::bit_cast<std::uint32_t>(static_cast<float>(t.data[n])));
      std::memcpy(bytes.data() + 4 * n, &u, 4);
    }
    write_text(dir / bin, bytes);
  }
  root["scales"] = std::move(scales);
  write_text(dir / (std::string(stem) + ".json"), dump(root));
}

// ----------------------------------------------------------------------------
// Reports and tables
// ----------------------------------------------------------------------------
std::string dump_report(const EvalReport& report) {
  Json curves = Json::array();
  for (const auto& c : report.curves) {
    Json p = Json::array();
    for (double v : c.precision) p.push_back(number(v));
    curves.push_back({{"oks_threshold", number(c.oks_threshold)},
                      {"recall", number(c.recall)},
                      {"precision", p}});
  }
  Json root = {{"ap", number(report.ap)},
               {"ap50", number(report.ap50)},
               {"ap75", number(report.ap75)},
               {"ap_large", number(report.ap_large)},
               {"ar", number(report.ar)},
               {"curves", curves}};
  return dump(root);
}

EvalReport parse_report(std::string_view text) {
  const Json root = parse_json(text, "report");
  return located("report", [&] {
    EvalReport r;
    r.ap = require(root, "ap", "report").get<double>();
    r.ap50 = require(root, "ap50", "report").get<double>();
    r.ap75 = require(root, "ap75", "report").get<double>();
    r.ap_large = require(root, "ap_large", "report").get<double>();
    r.ar = require(root, "ar", "report").get<double>();
    for (const auto& c : require(root, "curves", "report")) {
      PrCurve pc;
      pc.oks_threshold = c.at("oks_threshold").get<double>();
      pc.recall = c.at("recall").get<double>();
      pc.precision = c.at("precision").get<std::vector<double>>();
      r.curves.push_back(std::move(pc));
    }
    return r;
  });
}

std::string dump_trajectory(std::span<const LossRecord> trajectory) {
  std::string out = "step,cls,box,kpts,kpts_conf,total\n";
  char buf[256];
  for (const auto& r : trajectory) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.step,
                  r.cls, r.box, r.kpts, r.kpts_conf, r.total);
    out += buf;
  }
  return out;
}

std::string dump_ablation(std::span<const AblationRow> rows,
                          const FitConfig& cfg) {
  Json table = Json::array();
  for (const auto& r : rows) {
    table.push_back({{"variant", std::string(to_string(r.variant))},
                     {"ap", number(r.ap)},
                     {"ap50", number(r.ap50)},
                     {"ap75", number(r.ap75)},
                     {"ar", number(r.ar)},
                     {"final_total", number(r.final_total)}});
  }
  Json root = {{"steps", cfg.steps},
               {"learning_rate", number(cfg.learning_rate)},
               {"schedule", std::string(to_string(cfg.schedule))},
               {"rows", table}};
  return dump(root);
}

std::string summary_lines(const EvalReport& report, std::string_view area,
                          int max_detections) {
  struct Line {
    const char* kind;
    const char* oks;
    std::string_view area;
    double value;
  };
  const Line lines[] = {
      {"Average Precision  (AP)", "0.50:0.95", area, report.ap},
      {"Average Precision  (AP)", "0.50     ", area, report.ap50},
      {"Average Precision  (AP)", "0.75     ", area, report.ap75},
      {"Average Precision  (AP)", "0.50:0.95", "large", report.ap_large},
      {"Average Recall     (AR)", "0.50:0.95", area, report.ar},
  };
  std::string out;
  char buf[160];
  for (const auto& l : lines) {
    std::snprintf(buf, sizeof buf,
                  " %s @[ OKS=%s | area=%6.*s | maxDets=%3d ] = %.3f\n", l.kind,
                  l.oks, static_cast<int>(l.area.size()), l.area.data(),
                  max_detections, l.value);
    out += buf;
  }
  return out;
}

}  // namespace yolopose

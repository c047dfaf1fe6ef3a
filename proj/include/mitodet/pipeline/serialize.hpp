#pragma once

// JSON forms of the library's exchange records.

#include <string>
#include <vector>

#include <json.hpp>

#include "mitodet/annotation.hpp"
#include "mitodet/errors.hpp"
#include "mitodet/evaluation.hpp"
#include "mitodet/geometry.hpp"
#include "mitodet/imaging.hpp"
#include "mitodet/losses.hpp"
#include "mitodet/tiling.hpp"

namespace mitodet::pipeline {

using Json = nlohmann::json;

/// Parses JSON text, reporting syntax errors with their line number.
inline Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ValidationError(source + ":" + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
  }
}

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + ": expected a number");
  return j.get<double>();
}

inline BoundingBox box_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ValidationError(where + ": expected [x1, y1, x2, y2]");
  BoundingBox b{number(j[0], where), number(j[1], where), number(j[2], where), number(j[3], where)};
  if (!b.valid()) throw ValidationError(where + ": box must satisfy x2 > x1 and y2 > y1");
  return b;
}

inline Json box_to(const BoundingBox& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

}  // namespace detail

// --- stain profile ---------------------------------------------------------

inline Json to_json(const imaging::StainProfile& p) {
  Json vectors = Json::array();
  for (const auto& v : p.stain_vectors()) vectors.push_back({v.x(), v.y(), v.z()});
  return {{"stain_vectors", vectors},
          {"max_concentrations", {p.max_concentrations()[0], p.max_concentrations()[1]}}};
}

inline imaging::StainProfile stain_profile_from_json(const Json& j) {
  const auto& vectors = detail::require(j, "stain_vectors", "stain profile");
  const auto& maxima = detail::require(j, "max_concentrations", "stain profile");
  if (!vectors.is_array() || vectors.size() != 2 || !maxima.is_array() || maxima.size() != 2) {
    throw ValidationError("stain profile: expected two stain vectors and two max concentrations");
  }
  std::array<imaging::Vec3, 2> v;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& row = vectors[k];
    const std::string where = "stain_vectors[" + std::to_string(k) + "]";
    if (!row.is_array() || row.size() != 3) throw ValidationError(where + ": expected [r, g, b]");
    v[k] = imaging::Vec3(detail::number(row[0], where), detail::number(row[1], where), detail::number(row[2], where));
  }
  return imaging::StainProfile(v[0], v[1], detail::number(maxima[0], "max_concentrations[0]"),
                               detail::number(maxima[1], "max_concentrations[1]"));
}

// --- tile plan ---------------------------------------------------------------

inline Json to_json(const tiling::TilePlan& plan) {
  Json origins = Json::array();
  for (const auto& o : plan.origins) origins.push_back({o.x, o.y});
  return {{"slide_width", plan.slide_width}, {"slide_height", plan.slide_height}, {"tile_size", plan.tile_size},
          {"stride", plan.stride},           {"origins", origins}};
}

inline tiling::TilePlan tile_plan_from_json(const Json& j) {
  tiling::TilePlan plan;
  plan.slide_width = detail::require(j, "slide_width", "tile plan").get<int>();
  plan.slide_height = detail::require(j, "slide_height", "tile plan").get<int>();
  plan.tile_size = detail::require(j, "tile_size", "tile plan").get<int>();
  plan.stride = detail::require(j, "stride", "tile plan").get<int>();
  const bool padded = plan.slide_width < plan.tile_size || plan.slide_height < plan.tile_size;
  for (const auto& o : detail::require(j, "origins", "tile plan")) {
    plan.origins.push_back({o.at(0).get<int>(), o.at(1).get<int>()});
    plan.padded.push_back(padded);
  }
  return plan;
}

// --- ground truth objects ---------------------------------------------------

inline Json to_json(const std::vector<annotation::GroundTruthObject>& objects) {
  Json arr = Json::array();
  for (const auto& obj : objects) {
    const auto& s = obj.shape;
    Json params;
    if (s.kind == annotation::ShapeKind::Circle) {
      params = {{"radius", s.radius}};
    } else {
      params = {{"a", s.semi_axis_a}, {"b", s.semi_axis_b}, {"theta", s.orientation_deg}};
    }
    arr.push_back({{"kind", s.kind == annotation::ShapeKind::Circle ? "circle" : "ellipse"},
                   {"center", {s.center.x, s.center.y}},
                   {"params", params},
                   {"bbox", detail::box_to(obj.bbox)}});
  }
  return {{"objects", arr}};
}

/// Ground-truth boxes from an objects file ({"objects": [{"bbox": ...}]}) or a plain {"boxes": [...]}.
inline std::vector<BoundingBox> boxes_from_json(const Json& j) {
  std::vector<BoundingBox> boxes;
  if (j.is_object() && j.contains("boxes")) {
    for (std::size_t i = 0; i < j["boxes"].size(); ++i) {
      boxes.push_back(detail::box_from(j["boxes"][i], "boxes[" + std::to_string(i) + "]"));
    }
    return boxes;
  }
  const auto& objects = detail::require(j, "objects", "ground truth");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string where = "objects[" + std::to_string(i) + "].bbox";
    boxes.push_back(detail::box_from(detail::require(objects[i], "bbox", where), where));
  }
  return boxes;
}

// --- detections ---------------------------------------------------------------

struct DetectionFile {
  std::string slide_id;
  std::vector<Detection> detections;
};

inline Json to_json(const DetectionFile& file) {
  Json arr = Json::array();
  for (const auto& d : file.detections) {
    Json item = {{"x", d.centroid.x}, {"y", d.centroid.y}, {"confidence", d.confidence}};
    if (d.box) item["box"] = detail::box_to(*d.box);
    arr.push_back(item);
  }
  return {{"slide_id", file.slide_id}, {"detections", arr}};
}

inline DetectionFile detections_from_json(const Json& j) {
  DetectionFile file;
  if (j.is_object() && j.contains("slide_id")) {
    if (!j["slide_id"].is_string()) throw ValidationError("slide_id: expected a string");
    file.slide_id = j["slide_id"].get<std::string>();
  }
  const auto& arr = detail::require(j, "detections", "detections file");
  if (!arr.is_array()) throw ValidationError("detections: expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "detections[" + std::to_string(i) + "]";
    const auto& item = arr[i];
    Detection d;
    d.centroid = {detail::number(detail::require(item, "x", where), where + ".x"),
                  detail::number(detail::require(item, "y", where), where + ".y")};
    d.confidence = item.contains("confidence") ? detail::number(item["confidence"], where + ".confidence") : 1.0;
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) throw ValidationError(where + ".confidence: outside [0, 1]");
    if (item.contains("box") && !item["box"].is_null()) {
      d.box = detail::box_from(item["box"], where + ".box");
      if (distance(d.box->center(), d.centroid) > 0.5) {
        throw ValidationError(where + ": centroid is not the center of its box");
      }
    }
    file.detections.push_back(d);
  }
  return file;
}

// --- metrics -------------------------------------------------------------------

inline Json to_json(const evaluation::SlideEvaluation& e) {
  return {{"tp", e.match.tp},
          {"fp", e.match.fp},
          {"fn", e.match.fn},
          {"precision", e.metrics.precision},
          {"recall", e.metrics.recall},
          {"f_score", e.metrics.f_score},
          {"activity_score_pred", e.activity_score_pred},
          {"activity_score_gt", e.activity_score_gt}};
}

// --- anchors and RPN targets ------------------------------------------------------

inline const char* ratio_name(geometry::AspectRatio r) {
  switch (r) {
    case geometry::AspectRatio::OneToTwo: return "1:2";
    case geometry::AspectRatio::OneToOne: return "1:1";
    case geometry::AspectRatio::TwoToOne: return "2:1";
  }
  return "1:1";
}

inline const char* label_name(geometry::RpnLabel l) {
  switch (l) {
    case geometry::RpnLabel::Positive: return "positive";
    case geometry::RpnLabel::Negative: return "negative";
    case geometry::RpnLabel::Ignore: return "ignore";
  }
  return "ignore";
}

inline Json anchors_to_json(const std::vector<geometry::Anchor>& anchors,
                            const std::vector<geometry::RpnTarget>& targets) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto& a = anchors[i];
    Json item = {{"index", i},
                 {"grid", {a.grid_x, a.grid_y}},
                 {"scale", a.scale},
                 {"ratio", ratio_name(a.ratio)},
                 {"box", detail::box_to(a.box)}};
    if (i < targets.size()) {
      const auto& t = targets[i];
      item["label"] = label_name(t.label);
      item["max_iou"] = t.max_iou;
      if (t.gt_index) item["gt_index"] = *t.gt_index;
      if (t.deltas) item["deltas"] = {t.deltas->tx, t.deltas->ty, t.deltas->tw, t.deltas->th};
    }
    arr.push_back(item);
  }
  return arr;
}

// --- gradient verification ------------------------------------------------------------

inline Json to_json(const std::vector<losses::GradCheckReport>& reports) {
  Json arr = Json::array();
  bool all = true;
  for (const auto& r : reports) {
    arr.push_back({{"op", r.op}, {"trials", r.trials}, {"max_rel_err", r.max_rel_err}, {"pass", r.pass}});
    all = all && r.pass;
  }
  return {{"reports", arr}, {"pass", all}};
}

}  // namespace mitodet::pipeline

#include "nuce/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/core.h>
#include <json.hpp>

#include "nuce/errors.hpp"

namespace nuce {

Box::Box(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  const bool finite = std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max);
  if (!finite || !(x_max > x_min) || !(y_max > y_min)) {
    throw ValueError(fmt::format("degenerate box ({}, {}, {}, {})", x_min, y_min, x_max, y_max));
  }
}

void DetectionSet::validate() const {
  for (const auto& p : predictions) {
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
      throw ValueError(fmt::format("image '{}': confidence {} outside [0, 1]", image_id, p.confidence));
    }
  }
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double ih = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

MatchResult match_detections(std::span<const DetectionSet> sets, double iou_thresh) {
  MatchResult result;
  std::vector<std::vector<bool>> taken(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    sets[s].validate();
    taken[s].assign(sets[s].ground_truth.size(), false);
    result.total_ground_truth += sets[s].ground_truth.size();
    for (std::size_t p = 0; p < sets[s].predictions.size(); ++p) {
      result.entries.push_back({s, p, sets[s].predictions[p].confidence, false, MatchResult::npos});
    }
  }
  std::stable_sort(result.entries.begin(), result.entries.end(),
                   [](const auto& a, const auto& b) { return a.confidence > b.confidence; });

  for (auto& e : result.entries) {
    const auto& set = sets[e.image];
    const Box& pred = set.predictions[e.prediction].box;
    double best = -1.0;
    std::size_t best_gt = MatchResult::npos;
    for (std::size_t g = 0; g < set.ground_truth.size(); ++g) {
      if (taken[e.image][g]) continue;
      const double overlap = iou(pred, set.ground_truth[g]);
      if (overlap > best) {
        best = overlap;
        best_gt = g;
      }
    }
    if (best_gt != MatchResult::npos && best >= iou_thresh) {
      taken[e.image][best_gt] = true;
      e.true_positive = true;
      e.gt_index = best_gt;
    }
  }
  return result;
}

double average_precision(std::span<const DetectionSet> sets, double iou_thresh) {
  const MatchResult m = match_detections(sets, iou_thresh);
  if (m.total_ground_truth == 0) throw DataError("average_precision: no ground-truth boxes");
  const std::size_t n = m.entries.size();
  if (n == 0) return 0.0;

  std::vector<double> precision(n);
  std::vector<double> recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.entries[i].true_positive) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(m.total_ground_truth);
  }
  for (std::size_t i = n - 1; i > 0; --i) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

MapSuite map_suite(std::span<const DetectionSet> sets) {
  MapSuite out;
  out.map25 = average_precision(sets, 0.25);
  out.map50 = average_precision(sets, 0.50);
  out.map75 = average_precision(sets, 0.75);
  double acc = 0.0;
  for (int step = 0; step < 10; ++step) acc += average_precision(sets, 0.50 + 0.05 * step);
  out.map = acc / 10.0;
  return out;
}

std::vector<int> cascade_gate(std::span<const double> probs, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError(fmt::format("cascade_gate: tau {} outside [0, 1]", tau));
  std::vector<int> decisions(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) {
      throw ValueError(fmt::format("cascade_gate: probability {} at index {} outside [0, 1]", probs[i], i));
    }
    decisions[i] = probs[i] >= tau ? 1 : 0;
  }
  return decisions;
}

double gate_score(const DetectionSet& set) {
  if (set.frame_score >= 0.0) return set.frame_score;
  double best = 0.0;
  for (const auto& p : set.predictions) best = std::max(best, p.confidence);
  return best;
}

namespace {

Box parse_box(const nlohmann::json& j, std::size_t expected, std::size_t line) {
  if (!j.is_array() || j.size() != expected) {
    throw InputError(fmt::format("line {}: box must be an array of {} numbers", line, expected));
  }
  for (std::size_t n = 0; n < 4; ++n) {
    if (!j[n].is_number()) throw InputError(fmt::format("line {}: box coordinates must be numbers", line));
  }
  try {
    return Box(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
  } catch (const ValueError& e) {
    throw InputError(fmt::format("line {}: {}", line, e.what()));
  }
}

}  // namespace

std::vector<DetectionSet> load_detections_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("{}: cannot open file", path.string()));
  std::vector<DetectionSet> sets;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line, e.what()));
    }
    if (!j.is_object() || !j.contains("image") || !j["image"].is_string()) {
      throw InputError(fmt::format("{}:{}: expected an object with a string \"image\"", path.string(), line));
    }
    DetectionSet set;
    set.image_id = j["image"].get<std::string>();
    if (j.contains("gt")) {
      if (!j["gt"].is_array()) throw InputError(fmt::format("{}:{}: \"gt\" must be an array", path.string(), line));
      for (const auto& b : j["gt"]) set.ground_truth.push_back(parse_box(b, 4, line));
    }
    if (j.contains("pred")) {
      if (!j["pred"].is_array()) throw InputError(fmt::format("{}:{}: \"pred\" must be an array", path.string(), line));
      for (const auto& b : j["pred"]) {
        if (!b.is_array() || b.size() != 5 || !b[4].is_number()) {
          throw InputError(fmt::format("{}:{}: prediction must be [x0,y0,x1,y1,conf]", path.string(), line));
        }
        const Box box = parse_box(b, 5, line);
        const double conf = b[4].get<double>();
        if (!(conf >= 0.0 && conf <= 1.0)) {
          throw InputError(fmt::format("{}:{}: confidence {} outside [0, 1]", path.string(), line, conf));
        }
        set.predictions.push_back({box, conf});
      }
    }
    if (j.contains("score")) {
      if (!j["score"].is_number()) throw InputError(fmt::format("{}:{}: \"score\" must be a number", path.string(), line));
      set.frame_score = j["score"].get<double>();
      if (!(set.frame_score >= 0.0 && set.frame_score <= 1.0)) {
        throw InputError(fmt::format("{}:{}: score outside [0, 1]", path.string(), line));
      }
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace nuce

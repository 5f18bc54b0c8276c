#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nuce/matrix.hpp"

namespace nuce {

/// Axis-aligned box in pixel coordinates with strictly positive area.
class Box {
 public:
  /// Throws ValueError unless x_max > x_min and y_max > y_min (all finite).
  Box(double x_min, double y_min, double x_max, double y_max);

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }
  double area() const { return (x_max_ - x_min_) * (y_max_ - y_min_); }

 private:
  double x_min_, y_min_, x_max_, y_max_;
};

struct ScoredBox {
  Box box;
  double confidence;
};

/// Ground truth and predictions for one image of the single "CS" class.
struct DetectionSet {
  std::string image_id;
  std::vector<Box> ground_truth;
  std::vector<ScoredBox> predictions;
  /// Optional frame-level classifier probability used by the cascade gate;
  /// negative when absent.
  double frame_score = -1.0;

  void validate() const;
};

double iou(const Box& a, const Box& b);

/// Outcome of greedy matching at one IoU threshold, predictions listed in
/// evaluation order (descending confidence, ties by insertion order).
struct MatchResult {
  struct Entry {
    std::size_t image;
    std::size_t prediction;
    double confidence;
    bool true_positive;
    /// Index of the matched ground-truth box within its image, or npos.
    std::size_t gt_index;
  };
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<Entry> entries;
  std::size_t total_ground_truth = 0;
};

MatchResult match_detections(std::span<const DetectionSet> sets, double iou_thresh);

/// All-points interpolated AP: the precision envelope is made monotone
/// non-increasing and integrated exactly over recall. Throws DataError
/// when there is no ground truth.
double average_precision(std::span<const DetectionSet> sets, double iou_thresh);

struct MapSuite {
  /// Mean of AP over IoU 0.50, 0.55, ..., 0.95.
  double map = 0.0;
  double map25 = 0.0;
  double map50 = 0.0;
  double map75 = 0.0;
};

MapSuite map_suite(std::span<const DetectionSet> sets);

/// decision_i = 1 iff probs_i >= tau.
std::vector<int> cascade_gate(std::span<const double> probs, double tau);
inline std::vector<int> cascade_gate(const DenseVector& probs, double tau) { return cascade_gate(probs.data(), tau); }

/// Score the gate sees for an image: frame_score when present, otherwise
/// the highest prediction confidence (0 with no predictions).
double gate_score(const DetectionSet& set);

/// One image per line: {"image": str, "gt": [[x0,y0,x1,y1],...],
/// "pred": [[x0,y0,x1,y1,conf],...]} with an optional "score" field.
/// Throws InputError on malformed input.
std::vector<DetectionSet> load_detections_jsonl(const std::filesystem::path& path);

}  // namespace nuce

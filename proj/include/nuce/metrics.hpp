#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nuce {

/// K x K counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes)
      : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const { return num_classes_; }
  std::uint64_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * num_classes_ + predicted];
  }
  std::uint64_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * num_classes_ + predicted]; }

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t true_count(std::size_t k) const;
  std::uint64_t predicted_count(std::size_t k) const;

 private:
  std::size_t num_classes_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t num_classes);

enum class Averaging { Macro, Weighted };

struct ClassScores {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::uint64_t> support;
};

/// Per-class precision/recall/F1. A zero denominator yields 0.
ClassScores per_class_scores(const ConfusionMatrix& cm);

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

/// Macro: unweighted class mean. Weighted: mean weighted by true-class
/// support. F1 is averaged per class, not recombined from averaged P and R.
Prf1 prf1(const ConfusionMatrix& cm, Averaging averaging);

struct MetricBundle {
  double accuracy = 0.0;
  Prf1 macro;
  Prf1 weighted;
};

MetricBundle evaluate_classification(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                     std::size_t num_classes);

}  // namespace nuce

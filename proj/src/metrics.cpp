#include "nuce/metrics.hpp"

#include <fmt/core.h>

#include "nuce/errors.hpp"

namespace nuce {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t n = 0;
  for (std::size_t k = 0; k < num_classes_; ++k) n += (*this)(k, k);
  return n;
}

std::uint64_t ConfusionMatrix::true_count(std::size_t k) const {
  std::uint64_t n = 0;
  for (std::size_t p = 0; p < num_classes_; ++p) n += (*this)(k, p);
  return n;
}

std::uint64_t ConfusionMatrix::predicted_count(std::size_t k) const {
  std::uint64_t n = 0;
  for (std::size_t t = 0; t < num_classes_; ++t) n += (*this)(t, k);
  return n;
}

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw ShapeError(fmt::format("confusion: {} labels vs {} predictions", truth.size(), predicted.size()));
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes) {
      throw ValueError(fmt::format("confusion: label out of range at index {}", i));
    }
    ++cm.at(truth[i], predicted[i]);
  }
  return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassScores per_class_scores(const ConfusionMatrix& cm) {
  const std::size_t K = cm.num_classes();
  ClassScores s;
  s.precision.resize(K);
  s.recall.resize(K);
  s.f1.resize(K);
  s.support.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::uint64_t tp = cm(k, k);
    s.support[k] = cm.true_count(k);
    s.precision[k] = ratio(tp, cm.predicted_count(k));
    s.recall[k] = ratio(tp, s.support[k]);
    const double pr = s.precision[k] + s.recall[k];
    s.f1[k] = pr == 0.0 ? 0.0 : 2.0 * s.precision[k] * s.recall[k] / pr;
  }
  return s;
}

Prf1 prf1(const ConfusionMatrix& cm, Averaging averaging) {
  const std::uint64_t total = cm.total();
  if (cm.num_classes() == 0 || total == 0) throw DataError("prf1: empty confusion matrix");
  const ClassScores s = per_class_scores(cm);
  const std::size_t K = cm.num_classes();

  Prf1 out;
  out.accuracy = ratio(cm.trace(), total);
  for (std::size_t k = 0; k < K; ++k) {
    const double w = averaging == Averaging::Macro ? 1.0 / static_cast<double>(K) : ratio(s.support[k], total);
    out.precision += w * s.precision[k];
    out.recall += w * s.recall[k];
    out.f1 += w * s.f1[k];
  }
  return out;
}

MetricBundle evaluate_classification(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                     std::size_t num_classes) {
  const ConfusionMatrix cm = confusion(truth, predicted, num_classes);
  MetricBundle m;
  m.macro = prf1(cm, Averaging::Macro);
  m.weighted = prf1(cm, Averaging::Weighted);
  m.accuracy = m.macro.accuracy;
  return m;
}

}  // namespace nuce

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "nuce/data.hpp"
#include "nuce/losses.hpp"
#include "nuce/matrix.hpp"
#include "nuce/metrics.hpp"

namespace nuce {

/// Optional tanh feature extractor followed by a linear head, plus the
/// class anchors used by the contraction term.
struct ModelParams {
  std::optional<DenseMatrix> extractor;  // d_in x d
  DenseVector extractor_bias;            // d, empty without an extractor
  DenseMatrix head_W;                    // K x d
  AnchorSet anchors;                     // K x d

  std::size_t input_dim() const { return extractor ? extractor->rows() : head_W.cols(); }
  std::size_t embed_dim() const { return head_W.cols(); }
  std::size_t num_classes() const { return head_W.rows(); }
  void validate() const;

  bool operator==(const ModelParams& other) const;
};

struct ForwardResult {
  DenseMatrix H;
  DenseMatrix P;
};

/// H = tanh(X * extractor + bias) (or X itself without an extractor),
/// P = softmax(H W^T).
ForwardResult forward(const ModelParams& params, const DenseMatrix& X);
/// Argmax class of every row.
std::vector<std::size_t> predict(const ModelParams& params, const DenseMatrix& X);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// First and second moment estimates for one parameter block.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr);

/// base_lr * 0.5 * (1 + cos(pi * epoch / total)), for 0 <= epoch < total.
double cosine_lr(std::size_t epoch, std::size_t total, double base_lr);

enum class Schedule { Constant, Cosine };

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  Schedule schedule = Schedule::Cosine;
  std::size_t early_stop_patience = 3;
  std::uint64_t seed = 0;
  /// Width of the tanh extractor; 0 feeds inputs straight to the head.
  std::size_t hidden_dim = 16;
  LossConfig loss;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double train_loss = 0.0;  // mean of minibatch losses
  MetricBundle validation;
  /// Mean ||h_i - a_{y_i}|| over the training rows after the epoch.
  double mean_anchor_distance = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> history;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  double best_val_macro_f1 = 0.0;
  /// Parameters from best_epoch.
  ModelParams params;
};

/// Minibatch Adam on split.train with early stopping on the validation
/// macro-F1 of split.val. Deterministic for a given cfg.seed.
TrainReport train(const GroupedDataset& data, const FoldSplit& split, const TrainConfig& cfg);
/// Trains and validates on every row of `data`.
TrainReport train(const GroupedDataset& data, const TrainConfig& cfg);

nlohmann::json model_to_json(const ModelParams& params);
ModelParams model_from_json(const nlohmann::json& doc);
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace nuce

#include "nuce/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/core.h>

#include "nuce/errors.hpp"

namespace nuce {

void ModelParams::validate() const {
  const std::size_t d = head_W.cols();
  const std::size_t K = head_W.rows();
  if (K == 0 || d == 0) throw ShapeError("model: empty classifier head");
  if (extractor) {
    if (extractor->cols() != d) throw ShapeError("model: extractor width differs from head input width");
    if (extractor_bias.size() != d) throw ShapeError("model: extractor bias length differs from width");
  } else if (!extractor_bias.empty()) {
    throw ShapeError("model: bias given without an extractor");
  }
  if (anchors.anchors.rows() != K || anchors.anchors.cols() != d) throw ShapeError("model: anchors must be K x d");
  require_finite(head_W.data(), "model head");
  require_finite(anchors.anchors.data(), "model anchors");
  require_finite(extractor_bias.data(), "model bias");
  if (extractor) require_finite(extractor->data(), "model extractor");
}

bool ModelParams::operator==(const ModelParams& other) const {
  return extractor == other.extractor && extractor_bias == other.extractor_bias && head_W == other.head_W &&
         anchors.anchors == other.anchors.anchors;
}

namespace {

DenseMatrix embed(const ModelParams& params, const DenseMatrix& X) {
  if (X.cols() != params.input_dim()) {
    throw ShapeError(fmt::format("forward: input has {} columns, model expects {}", X.cols(), params.input_dim()));
  }
  if (!params.extractor) return X;
  DenseMatrix H = matmul(X, *params.extractor);
  for (std::size_t i = 0; i < H.rows(); ++i) {
    auto row = H.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = std::tanh(row[j] + params.extractor_bias[j]);
  }
  return H;
}

void fill_normal(std::span<double> values, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (double& v : values) v = normal(rng);
}

// a_k := mean of class-k rows of H; classes absent from H get N(0, 0.01^2).
void init_anchors(AnchorSet& anchors, const DenseMatrix& H, std::span<const std::size_t> labels,
                  std::mt19937_64& rng) {
  const std::size_t K = anchors.num_classes();
  const std::size_t d = anchors.dim();
  std::vector<std::size_t> counts(K, 0);
  DenseMatrix sums(K, d);
  for (std::size_t i = 0; i < H.rows(); ++i) {
    ++counts[labels[i]];
    auto s = sums.row(labels[i]);
    const auto h = H.row(i);
    for (std::size_t j = 0; j < d; ++j) s[j] += h[j];
  }
  for (std::size_t k = 0; k < K; ++k) {
    auto a = anchors.anchors.row(k);
    if (counts[k] == 0) {
      fill_normal(a, 0.01, rng);
      continue;
    }
    const auto s = sums.row(k);
    for (std::size_t j = 0; j < d; ++j) a[j] = s[j] / static_cast<double>(counts[k]);
  }
}

double mean_anchor_distance(const ModelParams& params, const DenseMatrix& X, std::span<const std::size_t> labels) {
  const DenseMatrix H = embed(params, X);
  double acc = 0.0;
  for (std::size_t i = 0; i < H.rows(); ++i) {
    const auto h = H.row(i);
    const auto a = params.anchors.anchors.row(labels[i]);
    double sq = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) sq += (h[j] - a[j]) * (h[j] - a[j]);
    acc += std::sqrt(sq);
  }
  return H.rows() == 0 ? 0.0 : acc / static_cast<double>(H.rows());
}

}  // namespace

ForwardResult forward(const ModelParams& params, const DenseMatrix& X) {
  ForwardResult out;
  out.H = embed(params, X);
  out.P = softmax_rows(matmul_transposed(out.H, params.head_W));
  return out;
}

std::vector<std::size_t> predict(const ModelParams& params, const DenseMatrix& X) {
  const DenseMatrix P = forward(params, X).P;
  std::vector<std::size_t> out(P.rows());
  for (std::size_t i = 0; i < P.rows(); ++i) out[i] = argmax_row(P.row(i));
  return out;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: state, parameter and gradient sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(kAdamBeta1, t);
  const double correction2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t n = 0; n < params.size(); ++n) {
    state.m[n] = kAdamBeta1 * state.m[n] + (1.0 - kAdamBeta1) * grads[n];
    state.v[n] = kAdamBeta2 * state.v[n] + (1.0 - kAdamBeta2) * grads[n] * grads[n];
    const double m_hat = state.m[n] / correction1;
    const double v_hat = state.v[n] / correction2;
    params[n] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
  }
}

double cosine_lr(std::size_t epoch, std::size_t total, double base_lr) {
  if (epoch >= total) throw ConfigError(fmt::format("cosine_lr: epoch {} is not below total {}", epoch, total));
  const double progress = static_cast<double>(epoch) / static_cast<double>(total);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  loss.validate();
}

TrainReport train(const GroupedDataset& data, const FoldSplit& split, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.size() == 0 || split.train.empty()) throw DataError("train: empty training split");
  if (split.val.empty()) throw DataError("train: empty validation split");

  const std::size_t K = std::max<std::size_t>(data.num_classes(), 2);
  const std::size_t d_in = data.dim();
  const DenseMatrix X_train = gather_rows(data.features, split.train);
  const DenseMatrix X_val = gather_rows(data.features, split.val);
  std::vector<std::size_t> y_train(split.train.size());
  std::vector<std::size_t> y_val(split.val.size());
  for (std::size_t n = 0; n < split.train.size(); ++n) y_train[n] = data.labels[split.train[n]];
  for (std::size_t n = 0; n < split.val.size(); ++n) y_val[n] = data.labels[split.val[n]];

  std::vector<std::size_t> class_counts(K, 0);
  for (std::size_t y : y_train) ++class_counts[y];
  for (std::size_t k = 0; k < K; ++k) {
    if (class_counts[k] == 0) throw DataError(fmt::format("train: class {} has no training samples", k));
  }

  std::mt19937_64 rng(cfg.seed);
  ModelParams params;
  std::size_t d = d_in;
  if (cfg.hidden_dim > 0) {
    d = cfg.hidden_dim;
    params.extractor = DenseMatrix(d_in, d);
    fill_normal(params.extractor->data(), 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
    params.extractor_bias = DenseVector(d);
  }
  params.head_W = DenseMatrix(K, d);
  fill_normal(params.head_W.data(), 1.0 / std::sqrt(static_cast<double>(d)), rng);
  params.anchors.anchors = DenseMatrix(K, d);

  AdamState adam_extractor(params.extractor ? params.extractor->size() : 0);
  AdamState adam_bias(params.extractor_bias.size());
  AdamState adam_head(params.head_W.size());
  AdamState adam_anchors(params.anchors.anchors.size());

  TrainReport report;
  report.best_val_macro_f1 = -1.0;
  std::size_t stale_epochs = 0;
  bool anchors_ready = false;
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.schedule == Schedule::Cosine ? cosine_lr(epoch, cfg.epochs, cfg.learning_rate)
                                                       : cfg.learning_rate;
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const DenseMatrix Xb = gather_rows(X_train, rows);
      std::vector<std::size_t> yb(rows.size());
      for (std::size_t n = 0; n < rows.size(); ++n) yb[n] = y_train[rows[n]];

      const DenseMatrix H = embed(params, Xb);
      if (!anchors_ready) {
        init_anchors(params.anchors, H, yb, rng);
        anchors_ready = true;
      }
      const LossOutput loss = evaluate_loss(H, params.head_W, one_hot(yb, K), params.anchors, cfg.loss);
      loss_sum += loss.total;
      ++batches;

      if (params.extractor) {
        // Back through tanh: dL/dpre = dL/dH * (1 - H^2).
        DenseMatrix grad_pre = loss.grad_H;
        for (std::size_t n = 0; n < grad_pre.size(); ++n) {
          const double h = H.data()[n];
          grad_pre.data()[n] *= 1.0 - h * h;
        }
        const DenseMatrix grad_extractor = transposed_matmul(Xb, grad_pre);
        std::vector<double> grad_bias(d, 0.0);
        for (std::size_t i = 0; i < grad_pre.rows(); ++i) {
          const auto g = grad_pre.row(i);
          for (std::size_t j = 0; j < d; ++j) grad_bias[j] += g[j];
        }
        adam_step(adam_extractor, params.extractor->data(), grad_extractor.data(), lr);
        adam_step(adam_bias, params.extractor_bias.data(), grad_bias, lr);
      }
      adam_step(adam_head, params.head_W.data(), loss.grad_W.data(), lr);
      if (!loss.grad_A.empty()) adam_step(adam_anchors, params.anchors.anchors.data(), loss.grad_A.data(), lr);
    }

    EpochRecord record;
    record.epoch = epoch + 1;
    record.learning_rate = lr;
    record.train_loss = loss_sum / static_cast<double>(batches);
    record.validation = evaluate_classification(y_val, predict(params, X_val), K);
    record.mean_anchor_distance = mean_anchor_distance(params, X_train, y_train);
    report.history.push_back(record);
    report.stopped_epoch = record.epoch;

    if (record.validation.macro.f1 > report.best_val_macro_f1) {
      report.best_val_macro_f1 = record.validation.macro.f1;
      report.best_epoch = record.epoch;
      report.params = params;
      stale_epochs = 0;
    } else if (++stale_epochs >= cfg.early_stop_patience) {
      break;
    }
  }
  return report;
}

TrainReport train(const GroupedDataset& data, const TrainConfig& cfg) {
  FoldSplit all;
  all.train.resize(data.size());
  std::iota(all.train.begin(), all.train.end(), 0);
  all.val = all.train;
  return train(data, all, cfg);
}

namespace {

nlohmann::json matrix_json(const DenseMatrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::vector<double>(m.data().begin(), m.data().end())}};
}

DenseMatrix matrix_from(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("values")) {
    throw InputError(fmt::format("model: '{}' must be an object with rows, cols and values", name));
  }
  try {
    return DenseMatrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                       j.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("model: '{}': {}", name, e.what()));
  } catch (const std::invalid_argument& e) {
    throw InputError(fmt::format("model: '{}': {}", name, e.what()));
  }
}

}  // namespace

nlohmann::json model_to_json(const ModelParams& params) {
  nlohmann::json doc;
  doc["format"] = "nuce-model";
  doc["version"] = 1;
  doc["input_dim"] = params.input_dim();
  doc["embed_dim"] = params.embed_dim();
  doc["num_classes"] = params.num_classes();
  doc["extractor"] = params.extractor ? matrix_json(*params.extractor) : nlohmann::json(nullptr);
  doc["extractor_bias"] =
      std::vector<double>(params.extractor_bias.data().begin(), params.extractor_bias.data().end());
  doc["head_W"] = matrix_json(params.head_W);
  doc["anchors"] = matrix_json(params.anchors.anchors);
  return doc;
}

ModelParams model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "nuce-model") throw InputError("model: not a nuce-model document");
  ModelParams params;
  if (doc.contains("extractor") && !doc["extractor"].is_null()) {
    params.extractor = matrix_from(doc["extractor"], "extractor");
    try {
      params.extractor_bias = DenseVector(doc.at("extractor_bias").get<std::vector<double>>());
    } catch (const std::exception& e) {
      throw InputError(fmt::format("model: 'extractor_bias': {}", e.what()));
    }
  }
  params.head_W = matrix_from(doc.value("head_W", nlohmann::json()), "head_W");
  params.anchors.anchors = matrix_from(doc.value("anchors", nlohmann::json()), "anchors");
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return params;
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot open for writing", path.string()));
  out << model_to_json(params).dump(1) << '\n';
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("{}: cannot open model file", path.string()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return model_from_json(doc);
}

}  // namespace nuce

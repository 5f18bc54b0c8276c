#include "nuce/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/core.h>

#include "nuce/errors.hpp"

namespace nuce {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Nuce: return "nuce";
    case LossKind::CrossEntropy: return "cross_entropy";
    case LossKind::Focal: return "focal";
    case LossKind::Center: return "center";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "nuce") return LossKind::Nuce;
  if (name == "cross_entropy" || name == "ce") return LossKind::CrossEntropy;
  if (name == "focal") return LossKind::Focal;
  if (name == "center") return LossKind::Center;
  throw ConfigError(fmt::format("unknown loss kind '{}'", name));
}

void LossConfig::validate() const {
  if (!(lambda_r >= 0.0) || !std::isfinite(lambda_r)) throw ConfigError("lambda_r must be finite and >= 0");
  if (!(lambda_c >= 0.0) || !std::isfinite(lambda_c)) throw ConfigError("lambda_c must be finite and >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be finite and >= 0");
}

namespace {

void check_gamma(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be finite and >= 0");
}

// (1 - q)^gamma with 0^0 == 1.
double modulator(double one_minus_q, double gamma) {
  if (gamma == 0.0) return 1.0;
  return std::pow(std::max(one_minus_q, 0.0), gamma);
}

// Validates shapes and one-hot rows; returns the label of every row.
std::vector<std::size_t> check_inputs(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y,
                                      const DenseMatrix* anchors) {
  const std::size_t B = H.rows();
  const std::size_t d = H.cols();
  const std::size_t K = W.rows();
  if (B == 0) throw ShapeError("loss: empty batch");
  if (K == 0) throw ShapeError("loss: classifier has no classes");
  if (W.cols() != d) throw ShapeError(fmt::format("loss: W is {}x{}, features have d={}", W.rows(), W.cols(), d));
  if (Y.rows() != B || Y.cols() != K) {
    throw ShapeError(fmt::format("loss: Y is {}x{}, expected {}x{}", Y.rows(), Y.cols(), B, K));
  }
  if (anchors != nullptr && (anchors->rows() != K || anchors->cols() != d)) {
    throw ShapeError(fmt::format("loss: anchors are {}x{}, expected {}x{}", anchors->rows(), anchors->cols(), K, d));
  }
  std::vector<std::size_t> labels(B);
  for (std::size_t i = 0; i < B; ++i) {
    std::size_t ones = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const double v = Y(i, k);
      if (v == 1.0) {
        ++ones;
        labels[i] = k;
      } else if (v != 0.0) {
        throw ValueError(fmt::format("loss: Y row {} is not one-hot", i));
      }
    }
    if (ones != 1) throw ValueError(fmt::format("loss: Y row {} is not one-hot", i));
  }
  return labels;
}

// Softmax of W h_i written into `p`.
void row_probabilities(std::span<const double> h, const DenseMatrix& W, std::span<double> p) {
  const std::size_t K = W.rows();
  for (std::size_t k = 0; k < K; ++k) p[k] = dot(h, W.row(k));
  const double mx = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : p) v /= total;
}

// Shared per-sample kernel for weighted cross-entropy plus contraction.
// When `fixed_weights` is non-empty it replaces the computed uncertainty
// weights; gradients are skipped when `with_grads` is false.
LossOutput weighted_contractive(const DenseMatrix& H, const DenseMatrix& W, std::span<const std::size_t> labels,
                                const DenseMatrix& anchors, double lambda_r, double lambda_c, double gamma,
                                std::span<const double> fixed_weights, bool with_grads) {
  const std::size_t B = H.rows();
  const std::size_t d = H.cols();
  const std::size_t K = W.rows();
  const double inv_b = 1.0 / static_cast<double>(B);

  LossOutput out;
  if (with_grads) {
    out.grad_H = DenseMatrix(B, d);
    out.grad_W = DenseMatrix(K, d);
    out.grad_A = DenseMatrix(K, d);
  }

  std::vector<double> p(K);
  double risk = 0.0;
  double contract = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const auto h = H.row(i);
    const std::size_t y = labels[i];
    row_probabilities(h, W, p);
    const double weight = fixed_weights.empty()
                              ? modulator(1.0 - p[argmax_row(std::span<const double>(p))], gamma)
                              : fixed_weights[i];
    risk -= weight * std::log(std::max(p[y], kProbabilityFloor));

    const auto a = anchors.row(y);
    double dist_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) dist_sq += (h[j] - a[j]) * (h[j] - a[j]);
    contract += dist_sq;

    if (!with_grads) continue;
    auto gh = out.grad_H.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      const double gu = lambda_r * inv_b * weight * (p[k] - (k == y ? 1.0 : 0.0));
      auto gw = out.grad_W.row(k);
      const auto wk = W.row(k);
      for (std::size_t j = 0; j < d; ++j) {
        gw[j] += gu * h[j];
        gh[j] += gu * wk[j];
      }
    }
    auto ga = out.grad_A.row(y);
    for (std::size_t j = 0; j < d; ++j) {
      const double pull = lambda_c * inv_b * (h[j] - a[j]);
      gh[j] += pull;
      ga[j] -= pull;
    }
  }
  out.risk_term = risk * inv_b;
  out.contract_term = contract * 0.5 * inv_b;
  out.total = lambda_r * out.risk_term + lambda_c * out.contract_term;
  return out;
}

}  // namespace

DenseMatrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes) {
  DenseMatrix y(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw ValueError(fmt::format("one_hot: label {} at row {} is not below K={}", labels[i], i, num_classes));
    }
    y(i, labels[i]) = 1.0;
  }
  return y;
}

DenseVector uncertainty_weights(const DenseMatrix& p, double gamma) {
  check_gamma(gamma);
  DenseVector w(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto row = p.row(i);
    w[i] = modulator(1.0 - row[argmax_row(row)], gamma);
  }
  return w;
}

LossOutput nuce_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y, const AnchorSet& A,
                     const LossConfig& cfg) {
  cfg.validate();
  const auto labels = check_inputs(H, W, Y, &A.anchors);
  return weighted_contractive(H, W, labels, A.anchors, cfg.lambda_r, cfg.lambda_c, cfg.gamma, {}, true);
}

double nuce_value_with_weights(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y,
                               const AnchorSet& A, const LossConfig& cfg, std::span<const double> weights) {
  cfg.validate();
  const auto labels = check_inputs(H, W, Y, &A.anchors);
  if (weights.size() != H.rows()) throw ShapeError("nuce_value_with_weights: one weight per row required");
  return weighted_contractive(H, W, labels, A.anchors, cfg.lambda_r, cfg.lambda_c, cfg.gamma, weights, false).total;
}

LossOutput nuce_loss_matrix_form(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y,
                                 const AnchorSet& A, const LossConfig& cfg) {
  cfg.validate();
  check_inputs(H, W, Y, &A.anchors);
  const std::size_t B = H.rows();
  const std::size_t K = W.rows();
  const double inv_b = 1.0 / static_cast<double>(B);

  const DenseMatrix P = softmax_rows(matmul_transposed(H, W));
  const DenseVector omega = uncertainty_weights(P, cfg.gamma);

  DenseMatrix log_p(B, K);
  for (std::size_t n = 0; n < P.size(); ++n) log_p.data()[n] = std::log(std::max(P.data()[n], kProbabilityFloor));

  // diag(Y log(P)^T): the log-probability of each row's true class.
  const DenseMatrix YlogPt = matmul_transposed(Y, log_p);
  double weighted = 0.0;
  for (std::size_t i = 0; i < B; ++i) weighted += omega[i] * YlogPt(i, i);

  const DenseMatrix residual = subtract(H, matmul(Y, A.anchors));

  LossOutput out;
  out.risk_term = -inv_b * weighted;
  out.contract_term = 0.5 * inv_b * frobenius_sq(residual);
  out.total = cfg.lambda_r * out.risk_term + cfg.lambda_c * out.contract_term;

  // dL/dU = (lambda_r / B) diag(w) (P - Y)
  DenseMatrix grad_u = subtract(P, Y);
  for (std::size_t i = 0; i < B; ++i) {
    const double s = cfg.lambda_r * inv_b * omega[i];
    for (double& v : grad_u.row(i)) v *= s;
  }
  out.grad_W = transposed_matmul(grad_u, H);
  out.grad_H = matmul(grad_u, W);
  const DenseMatrix pull = scaled(residual, cfg.lambda_c * inv_b);
  for (std::size_t n = 0; n < pull.size(); ++n) out.grad_H.data()[n] += pull.data()[n];
  out.grad_A = scaled(transposed_matmul(Y, pull), -1.0);
  return out;
}

LossOutput cross_entropy_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y) {
  const auto labels = check_inputs(H, W, Y, nullptr);
  const DenseMatrix no_anchors(W.rows(), W.cols());
  LossOutput out = weighted_contractive(H, W, labels, no_anchors, 1.0, 0.0, 0.0, {}, true);
  out.contract_term = 0.0;
  out.total = out.risk_term;
  out.grad_A = DenseMatrix();
  return out;
}

LossOutput focal_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y, double gamma) {
  check_gamma(gamma);
  const auto labels = check_inputs(H, W, Y, nullptr);
  const std::size_t B = H.rows();
  const std::size_t d = H.cols();
  const std::size_t K = W.rows();
  const double inv_b = 1.0 / static_cast<double>(B);

  LossOutput out;
  out.grad_H = DenseMatrix(B, d);
  out.grad_W = DenseMatrix(K, d);

  std::vector<double> p(K);
  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const auto h = H.row(i);
    const std::size_t y = labels[i];
    row_probabilities(h, W, p);
    const double py = std::max(p[y], kProbabilityFloor);
    const double log_py = std::log(py);
    const double q = 1.0 - p[y];
    total -= modulator(q, gamma) * log_py;

    // d/dp_y of -(1-p)^g log p, then chain through dp_y/du_k = p_y (delta_yk - p_k).
    double dfdp = -modulator(q, gamma) / py;
    if (gamma != 0.0 && q > 0.0) dfdp += gamma * std::pow(q, gamma - 1.0) * log_py;

    auto gh = out.grad_H.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      const double gu = inv_b * dfdp * p[y] * ((k == y ? 1.0 : 0.0) - p[k]);
      auto gw = out.grad_W.row(k);
      const auto wk = W.row(k);
      for (std::size_t j = 0; j < d; ++j) {
        gw[j] += gu * h[j];
        gh[j] += gu * wk[j];
      }
    }
  }
  out.risk_term = total * inv_b;
  out.total = out.risk_term;
  return out;
}

LossOutput center_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y, const AnchorSet& centers,
                       double lambda_center) {
  if (!(lambda_center >= 0.0) || !std::isfinite(lambda_center)) {
    throw ConfigError("center loss weight must be finite and >= 0");
  }
  const auto labels = check_inputs(H, W, Y, &centers.anchors);
  return weighted_contractive(H, W, labels, centers.anchors, 1.0, lambda_center, 0.0, {}, true);
}

LossOutput evaluate_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y, const AnchorSet& A,
                         const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::Nuce: return nuce_loss(H, W, Y, A, cfg);
    case LossKind::CrossEntropy: return cross_entropy_loss(H, W, Y);
    case LossKind::Focal: return focal_loss(H, W, Y, cfg.gamma);
    case LossKind::Center: return center_loss(H, W, Y, A, cfg.lambda_c);
  }
  throw ConfigError("unhandled loss kind");
}

}  // namespace nuce

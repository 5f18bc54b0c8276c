#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "nuce/matrix.hpp"

namespace nuce {

enum class LossKind { Nuce, CrossEntropy, Focal, Center };

std::string_view to_string(LossKind kind);
/// Accepts "nuce", "cross_entropy" (or "ce"), "focal", "center".
LossKind parse_loss_kind(std::string_view name);

/// Coefficients shared by every loss. `lambda_c` doubles as the center-loss
/// weight when kind == Center; `gamma` is the focal exponent when kind ==
/// Focal.
struct LossConfig {
  double lambda_r = 1.0;
  double lambda_c = 0.5;
  double gamma = 2.0;
  LossKind kind = LossKind::Nuce;

  void validate() const;
};

/// Learnable per-class anchors, one row per class (K x d).
struct AnchorSet {
  DenseMatrix anchors;

  std::size_t num_classes() const { return anchors.rows(); }
  std::size_t dim() const { return anchors.cols(); }
};

struct LossOutput {
  double total = 0.0;
  double risk_term = 0.0;
  double contract_term = 0.0;
  DenseMatrix grad_H;
  DenseMatrix grad_W;
  /// K x d for NUCE and center loss; 0 x 0 when the loss has no anchors.
  DenseMatrix grad_A;
};

/// Probabilities below this floor are clamped before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// One-hot B x K encoding of class indices.
DenseMatrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes);

/// w_i = (1 - max_k p_ik)^gamma, with 0^0 taken as 1.
DenseVector uncertainty_weights(const DenseMatrix& p, double gamma);

/// NUCE evaluated sample by sample.
///
/// total = lambda_r * risk + lambda_c * contract where
///   risk     = -(1/B) sum_i w_i log p_{i,y_i}
///   contract = (1/2B) sum_i ||h_i - a_{y_i}||^2
/// The uncertainty weights w_i are constants for differentiation: the
/// returned gradients are those of a weighted cross-entropy with fixed
/// weights plus the contraction term.
LossOutput nuce_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y,
                     const AnchorSet& A, const LossConfig& cfg);

/// The same objective through whole-matrix operations:
/// risk = -(1/B) w^T diag(Y log(P)^T), contract = (1/2B) ||H - YA||_F^2.
LossOutput nuce_loss_matrix_form(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y,
                                 const AnchorSet& A, const LossConfig& cfg);

/// NUCE value with caller-supplied uncertainty weights. Differentiating this
/// numerically with `weights` held fixed reproduces nuce_loss's gradients.
double nuce_value_with_weights(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y,
                               const AnchorSet& A, const LossConfig& cfg,
                               std::span<const double> weights);

LossOutput cross_entropy_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y);

/// -(1/B) sum_i (1 - p_{i,y_i})^gamma log p_{i,y_i}, modulating factor
/// differentiated.
LossOutput focal_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y, double gamma);

/// Cross-entropy plus (lambda_center / 2B) sum_i ||h_i - c_{y_i}||^2.
LossOutput center_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y,
                       const AnchorSet& centers, double lambda_center);

/// Dispatches on cfg.kind. Anchors are ignored by CrossEntropy and Focal.
LossOutput evaluate_loss(const DenseMatrix& H, const DenseMatrix& W, const DenseMatrix& Y,
                         const AnchorSet& A, const LossConfig& cfg);

}  // namespace nuce

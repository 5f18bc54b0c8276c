#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace nuce {

struct GradCheckOptions {
  std::uint64_t seed = 0;
  std::size_t instances = 20;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Test hook: "<loss>:<block>" (e.g. "nuce:W") adds an error to that
  /// block's analytic gradient so the check must fail.
  std::string perturb;
};

struct GradCheckRow {
  std::string loss;   // nuce, nuce_matrix, cross_entropy, focal, center
  std::string block;  // H, W, A
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  bool all_pass = true;
};

/// |a - n| / max(|a|, |n|, 1e-6): relative error with a floor so that
/// entries that are zero up to rounding do not dominate.
double gradient_relative_error(double analytic, double numeric);

/// Compares every loss's analytic gradients with central differences on
/// `instances` random problems (B <= 8, d <= 6, K <= 4). NUCE's
/// uncertainty weights are held at their unperturbed values.
GradCheckReport run_gradcheck(const GradCheckOptions& opts);

}  // namespace nuce

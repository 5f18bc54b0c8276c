#include "nuce/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "nuce/errors.hpp"
#include "nuce/losses.hpp"

namespace nuce {

double gradient_relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

namespace {

struct Instance {
  DenseMatrix H, W, Y;
  AnchorSet A;
  LossConfig cfg;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> batch(1, 8), width(1, 6), classes(2, 4);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t B = batch(rng), d = width(rng), K = classes(rng);
  Instance inst;
  inst.H = DenseMatrix(B, d);
  inst.W = DenseMatrix(K, d);
  inst.A.anchors = DenseMatrix(K, d);
  for (double& v : inst.H.data()) v = normal(rng);
  for (double& v : inst.W.data()) v = normal(rng);
  for (double& v : inst.A.anchors.data()) v = normal(rng);
  std::uniform_int_distribution<std::size_t> label(0, K - 1);
  std::vector<std::size_t> labels(B);
  for (auto& y : labels) y = label(rng);
  inst.Y = one_hot(labels, K);
  inst.cfg.lambda_r = 0.5 + unit(rng);
  inst.cfg.lambda_c = unit(rng);
  inst.cfg.gamma = 3.0 * unit(rng);
  return inst;
}

using ValueFn = std::function<double(const Instance&)>;

// Max relative error between `analytic` and central differences of `value`
// with respect to the block selected by `block_of`.
double compare_block(Instance inst, const DenseMatrix& analytic, DenseMatrix& (*block_of)(Instance&),
                     const ValueFn& value, double step) {
  DenseMatrix& block = block_of(inst);
  double worst = 0.0;
  for (std::size_t n = 0; n < block.size(); ++n) {
    const double saved = block.data()[n];
    block.data()[n] = saved + step;
    const double up = value(inst);
    block.data()[n] = saved - step;
    const double down = value(inst);
    block.data()[n] = saved;
    const double numeric = (up - down) / (2.0 * step);
    worst = std::max(worst, gradient_relative_error(analytic.data()[n], numeric));
  }
  return worst;
}

DenseMatrix& block_H(Instance& i) { return i.H; }
DenseMatrix& block_W(Instance& i) { return i.W; }
DenseMatrix& block_A(Instance& i) { return i.A.anchors; }

struct LossCase {
  const char* name;
  bool has_anchors;
  std::function<LossOutput(const Instance&)> analytic;
  // Value with any non-differentiated quantities frozen at `base`.
  std::function<ValueFn(const Instance& base)> value_at;
};

std::vector<LossCase> loss_cases() {
  auto nuce_value = [](const Instance& base) -> ValueFn {
    const DenseMatrix P = softmax_rows(matmul_transposed(base.H, base.W));
    const DenseVector weights = uncertainty_weights(P, base.cfg.gamma);
    return [weights](const Instance& i) { return nuce_value_with_weights(i.H, i.W, i.Y, i.A, i.cfg, weights.data()); };
  };
  return {
      {"nuce", true, [](const Instance& i) { return nuce_loss(i.H, i.W, i.Y, i.A, i.cfg); }, nuce_value},
      {"nuce_matrix", true, [](const Instance& i) { return nuce_loss_matrix_form(i.H, i.W, i.Y, i.A, i.cfg); },
       nuce_value},
      {"cross_entropy", false, [](const Instance& i) { return cross_entropy_loss(i.H, i.W, i.Y); },
       [](const Instance&) -> ValueFn {
         return [](const Instance& i) { return cross_entropy_loss(i.H, i.W, i.Y).total; };
       }},
      {"focal", false, [](const Instance& i) { return focal_loss(i.H, i.W, i.Y, i.cfg.gamma); },
       [](const Instance&) -> ValueFn {
         return [](const Instance& i) { return focal_loss(i.H, i.W, i.Y, i.cfg.gamma).total; };
       }},
      {"center", true, [](const Instance& i) { return center_loss(i.H, i.W, i.Y, i.A, i.cfg.lambda_c); },
       [](const Instance&) -> ValueFn {
         return [](const Instance& i) { return center_loss(i.H, i.W, i.Y, i.A, i.cfg.lambda_c).total; };
       }},
  };
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& opts) {
  if (opts.instances == 0) throw ConfigError("gradcheck: at least one instance required");
  if (!(opts.step > 0.0)) throw ConfigError("gradcheck: step must be positive");

  std::mt19937_64 rng(opts.seed);
  std::vector<Instance> instances;
  for (std::size_t n = 0; n < opts.instances; ++n) instances.push_back(random_instance(rng));

  GradCheckReport report;
  for (const auto& lc : loss_cases()) {
    struct BlockCase {
      const char* name;
      DenseMatrix& (*select)(Instance&);
      DenseMatrix LossOutput::*grad;
    };
    std::vector<BlockCase> blocks = {{"H", block_H, &LossOutput::grad_H}, {"W", block_W, &LossOutput::grad_W}};
    if (lc.has_anchors) blocks.push_back({"A", block_A, &LossOutput::grad_A});

    for (const auto& bc : blocks) {
      double worst = 0.0;
      for (const auto& inst : instances) {
        DenseMatrix analytic = lc.analytic(inst).*bc.grad;
        if (opts.perturb == std::string(lc.name) + ":" + bc.name) analytic.data()[0] += 1e-3;
        worst = std::max(worst, compare_block(inst, analytic, bc.select, lc.value_at(inst), opts.step));
      }
      const bool pass = worst < opts.tolerance;
      report.rows.push_back({lc.name, bc.name, worst, pass});
      report.all_pass = report.all_pass && pass;
    }
  }
  return report;
}

}  // namespace nuce

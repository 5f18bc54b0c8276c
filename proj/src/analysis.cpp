#include "nuce/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/core.h>

#include "nuce/errors.hpp"

namespace nuce {

namespace {

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::vector<double> multiply(const DenseMatrix& C, std::span<const double> v) {
  std::vector<double> out(C.rows());
  for (std::size_t i = 0; i < C.rows(); ++i) out[i] = dot(C.row(i), v);
  return out;
}

void remove_component(std::vector<double>& v, std::span<const double> unit) {
  const double proj = dot(v, unit);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] -= proj * unit[j];
}

void fix_sign(std::vector<double>& v) {
  std::size_t big = 0;
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (std::abs(v[j]) > std::abs(v[big])) big = j;
  }
  if (v[big] < 0.0) {
    for (double& x : v) x = -x;
  }
}

// Dominant eigenpair of the PSD matrix C restricted to the complement of
// `against` (already-found unit eigenvectors).
std::pair<std::vector<double>, double> dominant_eigenpair(const DenseMatrix& C,
                                                          const std::vector<std::vector<double>>& against) {
  const std::size_t d = C.rows();
  std::vector<double> v(d);
  for (std::size_t j = 0; j < d; ++j) v[j] = std::sqrt(std::max(C(j, j), 0.0)) + 1e-3 * static_cast<double>(j + 1);
  for (const auto& u : against) remove_component(v, u);
  if (norm(v) < 1e-12) {
    // Start vector lies in the span already found; take the least-covered basis vector.
    std::size_t pick = 0;
    double least = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      double covered = 0.0;
      for (const auto& u : against) covered += u[j] * u[j];
      if (covered < least) {
        least = covered;
        pick = j;
      }
    }
    std::fill(v.begin(), v.end(), 0.0);
    v[pick] = 1.0;
    for (const auto& u : against) remove_component(v, u);
  }
  double n = norm(v);
  for (double& x : v) x /= n;

  double scale = 0.0;
  for (std::size_t j = 0; j < d; ++j) scale += std::abs(C(j, j));
  for (std::size_t iter = 0; iter < kPowerIterationMaxIters; ++iter) {
    std::vector<double> w = multiply(C, v);
    for (const auto& u : against) remove_component(w, u);
    n = norm(w);
    if (n <= 1e-14 * scale) break;  // remaining spectrum is numerically zero
    double change = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      w[j] /= n;
      change += (w[j] - v[j]) * (w[j] - v[j]);
    }
    v = std::move(w);
    if (std::sqrt(change) < kPowerIterationTolerance) break;
  }
  for (const auto& u : against) remove_component(v, u);
  n = norm(v);
  for (double& x : v) x /= n;
  const double eigenvalue = std::max(0.0, dot(v, multiply(C, v)));
  return {v, eigenvalue};
}

}  // namespace

ProjectionResult pca_2d(const DenseMatrix& H) {
  const std::size_t N = H.rows();
  const std::size_t d = H.cols();
  if (N < 3 || d < 2) throw ShapeError(fmt::format("pca_2d: need N >= 3 and d >= 2, got {}x{}", N, d));

  ProjectionResult out;
  out.mean = DenseVector(d);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += H(i, j);
  }
  for (std::size_t j = 0; j < d; ++j) out.mean[j] /= static_cast<double>(N);

  DenseMatrix centered(N, d);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered(i, j) = H(i, j) - out.mean[j];
  }
  DenseMatrix C = transposed_matmul(centered, centered);
  for (double& v : C.data()) v /= static_cast<double>(N - 1);
  double trace = 0.0;
  for (std::size_t j = 0; j < d; ++j) trace += C(j, j);
  if (trace == 0.0) throw DataError("pca_2d: all rows are identical");

  std::vector<std::vector<double>> found;
  out.components = DenseMatrix(2, d);
  for (std::size_t c = 0; c < 2; ++c) {
    auto [vec, value] = dominant_eigenpair(C, found);
    fix_sign(vec);
    std::copy(vec.begin(), vec.end(), out.components.row(c).begin());
    out.explained_variance[c] = value;
    found.push_back(std::move(vec));
  }
  out.projected = matmul_transposed(centered, out.components);
  return out;
}

ClusterStats cluster_stats(const DenseMatrix& H, std::span<const std::size_t> labels, const AnchorSet& anchors) {
  const std::size_t K = anchors.num_classes();
  if (labels.size() != H.rows()) throw ShapeError("cluster_stats: one label per row required");
  if (anchors.dim() != H.cols()) throw ShapeError("cluster_stats: anchor width differs from feature width");

  ClusterStats stats;
  std::vector<double> sums(K, 0.0);
  std::vector<std::size_t> counts(K, 0);
  for (std::size_t i = 0; i < H.rows(); ++i) {
    const std::size_t y = labels[i];
    if (y >= K) throw ValueError(fmt::format("cluster_stats: label {} has no anchor", y));
    const auto h = H.row(i);
    const auto a = anchors.anchors.row(y);
    double sq = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) sq += (h[j] - a[j]) * (h[j] - a[j]);
    sums[y] += std::sqrt(sq);
    ++counts[y];
  }
  stats.mean_intra_dist.resize(K);
  double max_intra = -1.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (counts[k] == 0) {
      stats.missing_classes.push_back(k);
      continue;
    }
    stats.mean_intra_dist[k] = sums[k] / static_cast<double>(counts[k]);
    max_intra = std::max(max_intra, *stats.mean_intra_dist[k]);
  }

  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = a + 1; b < K; ++b) {
      double sq = 0.0;
      for (std::size_t j = 0; j < anchors.dim(); ++j) {
        const double diff = anchors.anchors(a, j) - anchors.anchors(b, j);
        sq += diff * diff;
      }
      const double dist = std::sqrt(sq);
      if (!stats.min_inter_anchor_dist || dist < *stats.min_inter_anchor_dist) stats.min_inter_anchor_dist = dist;
    }
  }

  if (!stats.min_inter_anchor_dist || max_intra < 0.0) {
    stats.ratio_kind = ClusterStats::Ratio::Undefined;
  } else if (max_intra == 0.0) {
    stats.ratio_kind = ClusterStats::Ratio::Infinite;
  } else {
    stats.ratio_kind = ClusterStats::Ratio::Finite;
    stats.fisher_ratio = *stats.min_inter_anchor_dist / max_intra;
  }
  return stats;
}

AnchorSet class_centroids(const DenseMatrix& H, std::span<const std::size_t> labels, std::size_t num_classes) {
  if (labels.size() != H.rows()) throw ShapeError("class_centroids: one label per row required");
  AnchorSet out{DenseMatrix(num_classes, H.cols())};
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < H.rows(); ++i) {
    if (labels[i] >= num_classes) throw ValueError("class_centroids: label out of range");
    auto c = out.anchors.row(labels[i]);
    const auto h = H.row(i);
    for (std::size_t j = 0; j < h.size(); ++j) c[j] += h[j];
    ++counts[labels[i]];
  }
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (counts[k] == 0) continue;
    for (double& v : out.anchors.row(k)) v /= static_cast<double>(counts[k]);
  }
  return out;
}

nlohmann::json to_json(const ClusterStats& stats) {
  nlohmann::json j;
  nlohmann::json intra = nlohmann::json::array();
  for (const auto& v : stats.mean_intra_dist) intra.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  j["mean_intra_dist"] = intra;
  j["missing_classes"] = stats.missing_classes;
  j["min_inter_anchor_dist"] =
      stats.min_inter_anchor_dist ? nlohmann::json(*stats.min_inter_anchor_dist) : nlohmann::json(nullptr);
  switch (stats.ratio_kind) {
    case ClusterStats::Ratio::Finite:
      j["fisher_ratio"] = stats.fisher_ratio;
      j["fisher_ratio_kind"] = "finite";
      break;
    case ClusterStats::Ratio::Infinite:
      j["fisher_ratio"] = nullptr;
      j["fisher_ratio_kind"] = "infinite";
      break;
    case ClusterStats::Ratio::Undefined:
      j["fisher_ratio"] = nullptr;
      j["fisher_ratio_kind"] = "undefined";
      break;
  }
  return j;
}

void write_projection_csv(const ProjectionResult& proj, std::span<const std::size_t> labels,
                          const std::filesystem::path& path) {
  if (labels.size() != proj.projected.rows()) throw ShapeError("write_projection_csv: one label per row required");
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot open for writing", path.string()));
  out << "pc1,pc2,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << fmt::format("{},{},{}\n", proj.projected(i, 0), proj.projected(i, 1), labels[i]);
  }
}

void write_projection_svg(const ProjectionResult& proj, std::span<const std::size_t> labels,
                          const std::filesystem::path& path) {
  if (labels.size() != proj.projected.rows()) throw ShapeError("write_projection_svg: one label per row required");
  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  constexpr double kSize = 480.0;
  constexpr double kMargin = 20.0;

  double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x = proj.projected(i, 0);
    const double y = proj.projected(i, 1);
    if (i == 0 || x < lo_x) lo_x = x;
    if (i == 0 || x > hi_x) hi_x = x;
    if (i == 0 || y < lo_y) lo_y = y;
    if (i == 0 || y > hi_y) hi_y = y;
  }
  const double span_x = std::max(hi_x - lo_x, 1e-12);
  const double span_y = std::max(hi_y - lo_y, 1e-12);

  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot open for writing", path.string()));
  out << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">)",
                     kSize)
      << '\n';
  out << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
  // Majority classes first so rare points stay visible on top.
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
  for (std::size_t i : order) {
    const double cx = kMargin + (proj.projected(i, 0) - lo_x) / span_x * (kSize - 2 * kMargin);
    const double cy = kSize - kMargin - (proj.projected(i, 1) - lo_y) / span_y * (kSize - 2 * kMargin);
    out << fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="2" fill="{}" fill-opacity="0.6"/>)", cx, cy,
                       kPalette[labels[i] % std::size(kPalette)])
        << '\n';
  }
  out << "</svg>\n";
}

}  // namespace nuce

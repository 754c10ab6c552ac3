#include "demnet/loss_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace demnet {

double rmse(const Tensor& pred, const Tensor& gt) {
  if (!pred.same_shape(gt)) {
    throw std::invalid_argument("rmse: shapes " + shape_str(pred.shape()) +
                                " and " + shape_str(gt.shape()) + " differ");
  }
  if (pred.empty()) throw std::invalid_argument("rmse: empty tensors");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - gt[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

Tensor mse_grad(const Tensor& pred, const Tensor& gt) {
  if (!pred.same_shape(gt)) {
    throw std::invalid_argument("mse_grad: shapes " + shape_str(pred.shape()) +
                                " and " + shape_str(gt.shape()) + " differ");
  }
  if (pred.empty()) throw std::invalid_argument("mse_grad: empty tensors");
  Tensor grad = Tensor::zeros_like(pred);
  double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    grad[i] = scale * (pred[i] - gt[i]);
  }
  return grad;
}

EvalReport binned_error(const std::vector<Tensor>& preds,
                        const std::vector<Tensor>& gts, int n_bins) {
  if (preds.size() != gts.size() || preds.empty()) {
    throw std::invalid_argument("binned_error: need matching non-empty lists");
  }
  if (n_bins < 1) throw std::invalid_argument("binned_error: n_bins < 1");

  EvalReport report;
  report.per_image_rmse.reserve(preds.size());
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    report.per_image_rmse.push_back(rmse(preds[i], gts[i]));
    for (std::size_t j = 0; j < gts[i].size(); ++j) {
      double g = gts[i][j];
      if (!std::isfinite(g) || !std::isfinite(preds[i][j])) {
        throw std::invalid_argument("binned_error: non-finite elevation");
      }
      if (first) {
        lo = hi = g;
        first = false;
      } else {
        lo = std::min(lo, g);
        hi = std::max(hi, g);
      }
    }
  }
  double total = 0.0;
  for (double r : report.per_image_rmse) total += r;
  report.mean_rmse = total / static_cast<double>(report.per_image_rmse.size());

  if (hi == lo) n_bins = 1;  // degenerate GT range: single bin
  report.bin_edges.resize(static_cast<std::size_t>(n_bins) + 1);
  for (int b = 0; b <= n_bins; ++b) {
    report.bin_edges[static_cast<std::size_t>(b)] =
        lo + (hi - lo) * static_cast<double>(b) / n_bins;
  }
  report.bin_mean_abs_error.assign(static_cast<std::size_t>(n_bins), 0.0);
  report.bin_counts.assign(static_cast<std::size_t>(n_bins), 0);

  double width = (hi - lo) / n_bins;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts[i].size(); ++j) {
      double g = gts[i][j];
      int b = width > 0.0 ? static_cast<int>((g - lo) / width) : 0;
      // The last bin is right-closed; clamp g == hi into it.
      b = std::clamp(b, 0, n_bins - 1);
      report.bin_mean_abs_error[static_cast<std::size_t>(b)] +=
          std::fabs(preds[i][j] - g);
      report.bin_counts[static_cast<std::size_t>(b)] += 1;
    }
  }
  for (int b = 0; b < n_bins; ++b) {
    auto ub = static_cast<std::size_t>(b);
    if (report.bin_counts[ub] > 0) {
      report.bin_mean_abs_error[ub] /=
          static_cast<double>(report.bin_counts[ub]);
    }
  }
  return report;
}

std::vector<double> range_profile(const Tensor& dem, int range_index) {
  if (dem.rank() != 2 && !(dem.rank() == 3 && dem.dim(2) == 1)) {
    throw std::invalid_argument("range_profile: expected (H, W) or (H, W, 1)");
  }
  int h = dem.dim(0), w = dem.dim(1);
  if (range_index < 0 || range_index >= h) {
    throw std::invalid_argument("range_profile: range index " +
                                std::to_string(range_index) +
                                " outside [0, " + std::to_string(h) + ")");
  }
  std::vector<double> profile(static_cast<std::size_t>(w));
  for (int j = 0; j < w; ++j) {
    profile[static_cast<std::size_t>(j)] =
        dem[static_cast<std::size_t>(range_index) * w + j];
  }
  return profile;
}

}  // namespace demnet

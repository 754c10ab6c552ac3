#ifndef DEMNET_LOSS_METRICS_HPP
#define DEMNET_LOSS_METRICS_HPP

#include <cstddef>
#include <vector>

#include "demnet/tensor.hpp"

namespace demnet {

/// sqrt(mean((pred - gt)^2)), in the units of the inputs (meters here).
double rmse(const Tensor& pred, const Tensor& gt);

/// Gradient of mean squared error wrt pred: (2/T)(pred - gt), T = element
/// count. Training descends MSE; reported numbers are always RMSE (same
/// minimizer, bounded derivative at zero error).
Tensor mse_grad(const Tensor& pred, const Tensor& gt);

struct EvalReport {
  std::vector<double> per_image_rmse;
  double mean_rmse = 0.0;  // mean of per_image_rmse
  /// n_bins + 1 uniform edges over [min GT, max GT]; last bin is
  /// right-closed. Degenerate range (max == min) collapses to one bin.
  std::vector<double> bin_edges;
  /// Mean |pred - gt| of the pixels whose GT falls in the bin; 0 for
  /// empty bins (count 0 disambiguates).
  std::vector<double> bin_mean_abs_error;
  std::vector<std::size_t> bin_counts;
};

/// Per-image RMSE plus an elevation-binned absolute error breakdown over
/// the pooled pixels. preds and gts pair up elementwise.
EvalReport binned_error(const std::vector<Tensor>& preds,
                        const std::vector<Tensor>& gts, int n_bins = 100);

/// Elevation sequence along azimuth (axis 1) at a fixed range row.
/// Accepts (H, W) or (H, W, 1) tensors.
std::vector<double> range_profile(const Tensor& dem, int range_index);

}  // namespace demnet

#endif  // DEMNET_LOSS_METRICS_HPP

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "demnet/loss_metrics.hpp"
#include "demnet/rng.hpp"
#include "oracles.hpp"

using namespace demnet;
using namespace demnet::test;

TEST_SUITE("loss_metrics") {

TEST_CASE("rmse on known offsets") {
  Tensor a({2, 2}, {1.0, 2.0, 3.0, 4.0});
  Tensor b({2, 2}, {2.0, 3.0, 4.0, 5.0});
  CHECK(rmse(a, b) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rmse(a, a) == 0.0);
}

TEST_CASE("rmse matches the independent accumulator on random data") {
  Tensor p = random_tensor({37, 23}, 1, 5.0);
  Tensor g = random_tensor({37, 23}, 2, 5.0);
  CHECK(rel_diff(rmse(p, g), rmse_oracle(p, g)) < 1e-14);
}

TEST_CASE("rmse rejects shape mismatches") {
  Tensor a({2, 2});
  Tensor b({2, 3});
  CHECK_THROWS_AS(rmse(a, b), std::invalid_argument);
}

TEST_CASE("mse_grad is (2/T)(pred - gt)") {
  Tensor p({1, 2}, {3.0, 5.0});
  Tensor g({1, 2}, {1.0, 1.0});
  Tensor grad = mse_grad(p, g);
  CHECK(grad[0] == doctest::Approx(2.0 / 2.0 * 2.0).epsilon(1e-15));
  CHECK(grad[1] == doctest::Approx(2.0 / 2.0 * 4.0).epsilon(1e-15));
}

TEST_CASE("mse_grad matches finite differences of the mean squared error") {
  Tensor p = random_tensor({4, 5}, 3);
  Tensor g = random_tensor({4, 5}, 4);
  auto mse = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += (p[i] - g[i]) * (p[i] - g[i]);
    }
    return acc / static_cast<double>(p.size());
  };
  Tensor analytic = mse_grad(p, g);
  CHECK(fd_check(p, analytic, mse) < 1e-6);
}

TEST_CASE("binned_error hand case") {
  // One image, GT spanning [0, 4): bins split at 2 with n_bins = 2.
  Tensor gt({1, 4}, {0.0, 1.0, 3.0, 4.0});
  Tensor pred({1, 4}, {0.5, 1.0, 2.0, 6.0});
  EvalReport r = binned_error({pred}, {gt}, 2);
  REQUIRE(r.per_image_rmse.size() == 1);
  CHECK(r.mean_rmse == doctest::Approx(r.per_image_rmse[0]).epsilon(1e-15));
  REQUIRE(r.bin_edges.size() == 3);
  CHECK(r.bin_edges[0] == 0.0);
  CHECK(r.bin_edges[1] == 2.0);
  CHECK(r.bin_edges[2] == 4.0);
  // Bin 0 holds GT {0, 1} with |err| {0.5, 0}; bin 1 holds {3, 4} with
  // |err| {1, 2}; the max lands in the last bin (right-closed).
  CHECK(r.bin_counts == std::vector<std::size_t>{2, 2});
  CHECK(r.bin_mean_abs_error[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(r.bin_mean_abs_error[1] == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("empty bins report zero error and zero count") {
  Tensor gt({1, 3}, {0.0, 0.1, 10.0});
  Tensor pred({1, 3}, {1.0, 1.1, 11.0});
  EvalReport r = binned_error({pred}, {gt}, 5);
  bool saw_empty = false;
  for (std::size_t b = 0; b < r.bin_counts.size(); ++b) {
    if (r.bin_counts[b] == 0) {
      saw_empty = true;
      CHECK(r.bin_mean_abs_error[b] == 0.0);
    }
  }
  CHECK(saw_empty);
}

TEST_CASE("degenerate GT range collapses to one bin") {
  Tensor gt({2, 2});
  gt.fill(7.0);
  Tensor pred({2, 2}, {6.0, 7.0, 8.0, 7.0});
  EvalReport r = binned_error({pred}, {gt}, 100);
  REQUIRE(r.bin_counts.size() == 1);
  CHECK(r.bin_counts[0] == 4);
  CHECK(r.bin_mean_abs_error[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("binning agrees with a brute-force regrouping") {
  std::vector<Tensor> preds, gts;
  for (int i = 0; i < 3; ++i) {
    preds.push_back(random_tensor({9, 11}, 100 + i, 4.0));
    gts.push_back(random_tensor({9, 11}, 200 + i, 4.0));
  }
  const int n_bins = 10;
  EvalReport r = binned_error(preds, gts, n_bins);
  REQUIRE(r.bin_edges.size() == static_cast<std::size_t>(n_bins) + 1);
  for (int b = 0; b < n_bins; ++b) {
    double lo = r.bin_edges[static_cast<std::size_t>(b)];
    double hi = r.bin_edges[static_cast<std::size_t>(b) + 1];
    std::size_t count = 0;
    double abs_sum = 0.0;
    for (std::size_t img = 0; img < gts.size(); ++img) {
      for (std::size_t i = 0; i < gts[img].size(); ++i) {
        double g = gts[img][i];
        bool in = (b == n_bins - 1) ? (g >= lo && g <= hi)
                                    : (g >= lo && g < hi);
        if (in) {
          count += 1;
          abs_sum += std::abs(preds[img][i] - g);
        }
      }
    }
    CHECK(r.bin_counts[static_cast<std::size_t>(b)] == count);
    double want = count ? abs_sum / static_cast<double>(count) : 0.0;
    CHECK(r.bin_mean_abs_error[static_cast<std::size_t>(b)] ==
          doctest::Approx(want).epsilon(1e-12));
  }
  std::size_t total = 0;
  for (std::size_t c : r.bin_counts) total += c;
  CHECK(total == 3 * 9 * 11);
}

TEST_CASE("constant-mean predictor RMSE equals the per-image std") {
  for (int img = 0; img < 4; ++img) {
    Tensor gt = random_tensor({12, 13}, 300 + img, 3.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) mean += gt[i];
    mean /= static_cast<double>(gt.size());
    Tensor pred(gt.shape());
    pred.fill(mean);
    double var = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      var += (gt[i] - mean) * (gt[i] - mean);
    }
    double stddev = std::sqrt(var / static_cast<double>(gt.size()));
    CHECK(rmse(pred, gt) == doctest::Approx(stddev).epsilon(1e-12));
  }
}

TEST_CASE("range_profile slices one range row along azimuth") {
  Tensor dem({3, 5});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) dem.at(i, j) = 10.0 * i + j;
  }
  std::vector<double> p = range_profile(dem, 1);
  REQUIRE(p.size() == 5);
  for (int j = 0; j < 5; ++j) CHECK(p[static_cast<std::size_t>(j)] == 10.0 + j);

  Tensor dem3({3, 5, 1}, dem.values());
  CHECK(range_profile(dem3, 2) ==
        std::vector<double>{20.0, 21.0, 22.0, 23.0, 24.0});

  CHECK_THROWS_AS(range_profile(dem, 3), std::invalid_argument);
  CHECK_THROWS_AS(range_profile(dem, -1), std::invalid_argument);
}

}  // TEST_SUITE

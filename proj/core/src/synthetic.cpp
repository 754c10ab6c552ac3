#include "demnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "demnet/rng.hpp"

namespace demnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_phase(double x) {
  double w = std::remainder(x, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w = kPi;
  return w;
}

}  // namespace

DEMImage gen_terrain(const TerrainConfig& config) {
  if (config.size < 140) {
    throw std::invalid_argument("gen_terrain: size must be >= 140");
  }
  if (!(config.elev_max > config.elev_min)) {
    throw std::invalid_argument("gen_terrain: elevation range is empty");
  }

  int k = 1;
  while ((1 << k) + 1 < config.size) ++k;
  int n = (1 << k) + 1;

  std::vector<double> h(static_cast<std::size_t>(n) * n, 0.0);
  auto at = [&](int i, int j) -> double& {
    return h[static_cast<std::size_t>(i) * n + j];
  };

  Rng rng(config.seed);
  at(0, 0) = rng.normal();
  at(0, n - 1) = rng.normal();
  at(n - 1, 0) = rng.normal();
  at(n - 1, n - 1) = rng.normal();

  // Each halving multiplies the displacement by 2^(-(beta-2)/2); larger
  // beta damps fine scales harder, giving smoother terrain.
  double decay = std::pow(2.0, -(config.beta - 2.0) / 2.0);
  double amp = decay;
  for (int step = n - 1; step > 1; step /= 2, amp *= decay) {
    int half = step / 2;
    // Diamond: square centers from their four corners.
    for (int i = half; i < n; i += step) {
      for (int j = half; j < n; j += step) {
        double avg = (at(i - half, j - half) + at(i - half, j + half) +
                      at(i + half, j - half) + at(i + half, j + half)) /
                     4.0;
        at(i, j) = avg + amp * rng.normal();
      }
    }
    // Square: edge midpoints from their available axial neighbors.
    for (int i = 0; i < n; i += half) {
      int j0 = (i / half) % 2 == 0 ? half : 0;
      for (int j = j0; j < n; j += step) {
        double sum = 0.0;
        int cnt = 0;
        if (i - half >= 0) sum += at(i - half, j), ++cnt;
        if (i + half < n) sum += at(i + half, j), ++cnt;
        if (j - half >= 0) sum += at(i, j - half), ++cnt;
        if (j + half < n) sum += at(i, j + half), ++cnt;
        at(i, j) = sum / cnt + amp * rng.normal();
      }
    }
  }

  DEMImage dem;
  dem.rows = config.size;
  dem.cols = config.size;
  dem.data.resize(static_cast<std::size_t>(config.size) * config.size);
  double mn = at(0, 0), mx = at(0, 0);
  for (int i = 0; i < config.size; ++i) {
    for (int j = 0; j < config.size; ++j) {
      mn = std::min(mn, at(i, j));
      mx = std::max(mx, at(i, j));
    }
  }
  if (mx == mn) throw std::runtime_error("gen_terrain: degenerate field");
  double scale = (config.elev_max - config.elev_min) / (mx - mn);
  for (int i = 0; i < config.size; ++i) {
    for (int j = 0; j < config.size; ++j) {
      dem.data[static_cast<std::size_t>(i) * config.size + j] =
          static_cast<float>(config.elev_min + (at(i, j) - mn) * scale);
    }
  }
  return dem;
}

SLCImage sar_render(const DEMImage& dem, const RenderConfig& config) {
  if (dem.rows < 2 || dem.cols < 2) {
    throw std::invalid_argument("sar_render: DEM must be at least 2x2");
  }
  if (config.wavelength <= 0.0) {
    throw std::invalid_argument("sar_render: wavelength must be positive");
  }

  SLCImage slc;
  slc.rows = dem.rows;
  slc.cols = dem.cols;
  slc.data.resize(static_cast<std::size_t>(dem.rows) * dem.cols);

  auto height = [&](int i, int j) -> double {
    return dem.data[static_cast<std::size_t>(i) * dem.cols + j];
  };

  Rng rng(config.noise_seed);
  double sin_look = std::sin(config.look_angle);
  double cos_look = std::cos(config.look_angle);
  double phase_gain = 4.0 * kPi / config.wavelength;

  for (int i = 0; i < dem.rows; ++i) {
    for (int j = 0; j < dem.cols; ++j) {
      // Central differences, one-sided at borders; rows are range.
      int i0 = std::max(i - 1, 0), i1 = std::min(i + 1, dem.rows - 1);
      int j0 = std::max(j - 1, 0), j1 = std::min(j + 1, dem.cols - 1);
      double dzdr = (height(i1, j) - height(i0, j)) / (i1 - i0);
      double dzdc = (height(i, j1) - height(i, j0)) / (j1 - j0);
      // Lambertian: n = (-dzdr, -dzdc, 1)/|.|, L = (sin, 0, cos).
      double norm = std::sqrt(dzdr * dzdr + dzdc * dzdc + 1.0);
      double shade = std::max(0.0, (cos_look - dzdr * sin_look) / norm);

      double amp = shade;
      if (config.speckle) amp *= rng.exponential();
      double phase = phase_gain * height(i, j);
      if (config.phase_noise > 0.0) {
        phase += rng.uniform(-config.phase_noise, config.phase_noise);
      }
      phase = wrap_phase(phase);
      slc.data[static_cast<std::size_t>(i) * dem.cols + j] = {
          static_cast<float>(amp * std::cos(phase)),
          static_cast<float>(amp * std::sin(phase))};
    }
  }
  return slc;
}

std::string gen_dataset(const SynthConfig& config) {
  if (config.n_pairs < 1) {
    throw std::invalid_argument("gen_dataset: n_pairs must be >= 1");
  }
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);

  PairList list;
  list.seed = config.terrain.seed;
  for (int i = 0; i < config.n_pairs; ++i) {
    TerrainConfig terrain = config.terrain;
    terrain.seed = splitmix64(config.terrain.seed +
                              2 * static_cast<std::uint64_t>(i));
    RenderConfig render = config.render;
    render.noise_seed = splitmix64(config.terrain.seed +
                                   2 * static_cast<std::uint64_t>(i) + 1);

    DEMImage dem = gen_terrain(terrain);
    SLCImage slc = sar_render(dem, render);

    char name[32];
    std::snprintf(name, sizeof(name), "pair_%03d", i);
    std::string slc_rel = std::string(name) + ".slc.sart";
    std::string dem_rel = std::string(name) + ".dem.sart";
    write_slc_tile((fs::path(config.out_dir) / slc_rel).string(), slc);
    write_dem_tile((fs::path(config.out_dir) / dem_rel).string(), dem);
    list.pairs.emplace_back(slc_rel, dem_rel);
  }

  std::string manifest_path =
      (fs::path(config.out_dir) / "pairs.jsonl").string();
  write_pair_manifest(manifest_path, list);
  return manifest_path;
}

}  // namespace demnet

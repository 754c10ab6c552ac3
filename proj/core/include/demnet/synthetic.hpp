#ifndef DEMNET_SYNTHETIC_HPP
#define DEMNET_SYNTHETIC_HPP

#include <cstdint>
#include <string>

#include "demnet/data_pipeline.hpp"

namespace demnet {

struct TerrainConfig {
  int size = 140;      // >= 140
  double beta = 3.0;   // spectral exponent; larger = smoother terrain
  double elev_min = -8.0;
  double elev_max = 8.0;  // meters; must exceed elev_min
  std::uint64_t seed = 0;
};

/// Midpoint-displacement (diamond-square) fractal, per-level displacement
/// scaled by 2^(-(beta-2)/2) each halving, then affinely rescaled so the
/// output min/max hit the elevation range endpoints exactly.
DEMImage gen_terrain(const TerrainConfig& config);

struct RenderConfig {
  double look_angle = 0.6;    // radians off vertical, along the range axis
  double wavelength = 0.056;  // carrier wavelength lambda_c, meters
  bool speckle = true;        // unit-mean exponential amplitude noise
  double phase_noise = 0.0;   // uniform +/- radians before wrapping
  std::uint64_t noise_seed = 0;
};

/// Crude but invertible forward model: amplitude = Lambertian shading of
/// the slope toward the look direction (times speckle); phase =
/// (4*pi/lambda_c)*height plus noise, wrapped to (-pi, pi]. Slopes are in
/// meters per pixel; rows are range, columns azimuth.
SLCImage sar_render(const DEMImage& dem, const RenderConfig& config);

struct SynthConfig {
  int n_pairs = 1;
  TerrainConfig terrain;  // terrain.seed is the master seed
  RenderConfig render;
  std::string out_dir;
};

/// Writes n_pairs SLC/DEM tile pairs plus a pair manifest; per-pair seeds
/// derive from the master seed. Returns the manifest path.
std::string gen_dataset(const SynthConfig& config);

}  // namespace demnet

#endif  // DEMNET_SYNTHETIC_HPP

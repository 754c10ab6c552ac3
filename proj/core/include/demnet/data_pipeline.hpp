#ifndef DEMNET_DATA_PIPELINE_HPP
#define DEMNET_DATA_PIPELINE_HPP

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "demnet/tensor.hpp"

namespace demnet {

/// Complex radar image in slant-range x azimuth coordinates.
struct SLCImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::complex<float>> data;  // row-major
};

/// Elevation raster in meters, extents matching its paired SLCImage.
struct DEMImage {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;  // row-major
};

/// Double-precision working raster for windowing and resampling.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Grid() = default;
  Grid(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c) {}
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
};

/// amp = |z|, phase = atan2(im, re) in (-pi, pi].
std::pair<Grid, Grid> abs_phase(const SLCImage& slc);

struct WindowSpec {
  int window = 4000;
  int step = 100;
  int target = 140;
};

/// Top-left offsets (row, col) of every full window position, row-major;
/// per axis: {0, step, 2*step, ...} while offset + window <= extent.
std::vector<std::pair<int, int>> sliding_windows(int n, int m,
                                                 const WindowSpec& spec);

/// Area-average resampling to target x target over fractional source
/// boxes. Mean-preserving; identity at ratio 1; equals block means at
/// integer ratios.
Grid downsample(const Grid& in, int target);

struct NormalizationStats {
  double amp_mean = 0.0;  // of log1p(downsampled amplitude), train split
  double amp_std = 1.0;
  double phase_scale = 1.0 / 3.14159265358979323846;
};

/// One training example: input channels [z-scored log-amplitude,
/// phase/pi] and the target elevation window in meters.
struct Sample {
  Tensor input;   // (target, target, 2)
  Tensor target;  // (target, target, 1)
};

/// Cuts the window at (row, col), downsample both modalities, normalizes.
/// Phase is downsampled circularly (via cos/sin) to respect wrapping.
Sample make_sample(const SLCImage& slc, const DEMImage& dem, int row, int col,
                   const WindowSpec& spec, const NormalizationStats& stats);

/// Seeded Fisher-Yates partition of [0, n); train size = lround(fraction*n).
std::pair<std::vector<int>, std::vector<int>> split_ids(int n, double fraction,
                                                        std::uint64_t seed);

// ---- Tile files ("SART" format, docs/formats.md) ----

void write_slc_tile(const std::string& path, const SLCImage& img);
void write_dem_tile(const std::string& path, const DEMImage& img);
SLCImage read_slc_tile(const std::string& path);
DEMImage read_dem_tile(const std::string& path);

/// Loads a tile pair and enforces matching extents.
std::pair<SLCImage, DEMImage> load_raster_pair(const std::string& slc_path,
                                               const std::string& dem_path);

// ---- Manifests (JSON lines, docs/formats.md) ----

/// Raw pair listing produced by the synthetic generator.
struct PairList {
  std::uint64_t seed = 0;
  /// (slc, dem) paths relative to the manifest's directory.
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string base_dir;  // set on read; not serialized
};

void write_pair_manifest(const std::string& path, const PairList& list);
PairList read_pair_manifest(const std::string& path);

struct SampleEntry {
  int source = 0;
  int row = 0;
  int col = 0;
  bool train = false;
};

struct DatasetManifest {
  int version = 1;
  std::uint64_t split_seed = 0;
  double fraction = 0.65;
  WindowSpec spec;
  bool block_split = false;
  NormalizationStats stats;
  std::vector<std::pair<std::string, std::string>> sources;
  std::vector<SampleEntry> entries;
  std::string base_dir;  // set on read; not serialized
};

void write_dataset_manifest(const std::string& path,
                            const DatasetManifest& manifest);
DatasetManifest read_dataset_manifest(const std::string& path);

/// Windows every source pair, assigns the split, computes normalization
/// statistics over the training samples, and writes the dataset manifest.
/// block_split replaces the random split with a per-source partition by
/// row blocks (spatially disjoint, leakage-free).
DatasetManifest ingest(const std::string& pair_manifest_path,
                       const WindowSpec& spec, double fraction,
                       std::uint64_t seed, bool block_split,
                       const std::string& out_manifest_path);

/// Materializes the manifest's samples for one split, in manifest order.
std::vector<Sample> load_samples(const DatasetManifest& manifest, bool train);

/// Same, but normalizing with caller-supplied statistics instead of the
/// manifest's own (evaluating a model against a foreign dataset).
std::vector<Sample> load_samples(const DatasetManifest& manifest, bool train,
                                 const NormalizationStats& stats);

}  // namespace demnet

#endif  // DEMNET_DATA_PIPELINE_HPP

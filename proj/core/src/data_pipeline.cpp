#include "demnet/data_pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "demnet/rng.hpp"

namespace demnet {

namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;
constexpr char kTileMagic[4] = {'S', 'A', 'R', 'T'};
constexpr std::uint32_t kTileVersion = 1;
constexpr std::uint8_t kDtypeComplex64 = 1;
constexpr std::uint8_t kDtypeFloat32 = 2;

[[noreturn]] void tile_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("tile: " + what + " in " + path);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_f32(std::string& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class TileReader {
 public:
  TileReader(const std::string& path) : path_(path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) tile_fail(path, "cannot open file");
    bytes_.assign(std::istreambuf_iterator<char>(f),
                  std::istreambuf_iterator<char>());
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(
               static_cast<std::uint8_t>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  void check_header(std::uint8_t want_dtype, const char* dtype_name) {
    need(4);
    if (std::string_view(bytes_.data() + pos_, 4) !=
        std::string_view(kTileMagic, 4)) {
      tile_fail(path_, "bad magic (expected \"SART\")");
    }
    pos_ += 4;
    std::uint32_t version = u32();
    if (version > kTileVersion) {
      tile_fail(path_, "format version " + std::to_string(version) +
                           " unsupported (this build reads up to " +
                           std::to_string(kTileVersion) + ")");
    }
    std::uint8_t dtype = u8();
    if (dtype != want_dtype) {
      tile_fail(path_, "dtype tag " + std::to_string(dtype) + ", expected " +
                           dtype_name);
    }
  }

  void finish() {
    if (pos_ != bytes_.size()) tile_fail(path_, "trailing bytes");
  }

  const std::string& path() const { return path_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) tile_fail(path_, "truncated file");
  }

  std::string path_;
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::pair<int, int> read_extents(TileReader& r) {
  std::uint32_t rows = r.u32();
  std::uint32_t cols = r.u32();
  if (rows < 1 || cols < 1) tile_fail(r.path(), "zero extent");
  if (rows > (1u << 20) || cols > (1u << 20)) {
    tile_fail(r.path(), "implausible extents");
  }
  return {static_cast<int>(rows), static_cast<int>(cols)};
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("tile: cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("tile: write failed for " + path);
}

// Area-average one output row/col per fractional source box, weights
// normalized by their actual sum so the global mean survives rounding.
Grid resample_rows(const Grid& in, int target) {
  Grid out(target, in.cols);
  double ratio = static_cast<double>(in.rows) / target;
  for (int i = 0; i < target; ++i) {
    double lo = i * ratio, hi = (i + 1) * ratio;
    int r0 = static_cast<int>(lo);
    int r1 = std::min(in.rows, static_cast<int>(std::ceil(hi)));
    double wsum = 0.0;
    double* dst = &out.v[static_cast<std::size_t>(i) * out.cols];
    for (int r = r0; r < r1; ++r) {
      double w = std::min(hi, r + 1.0) - std::max(lo, static_cast<double>(r));
      if (w <= 0.0) continue;
      wsum += w;
      const double* src = &in.v[static_cast<std::size_t>(r) * in.cols];
      for (int c = 0; c < in.cols; ++c) dst[c] += w * src[c];
    }
    for (int c = 0; c < in.cols; ++c) dst[c] /= wsum;
  }
  return out;
}

Grid resample_cols(const Grid& in, int target) {
  Grid out(in.rows, target);
  double ratio = static_cast<double>(in.cols) / target;
  for (int j = 0; j < target; ++j) {
    double lo = j * ratio, hi = (j + 1) * ratio;
    int c0 = static_cast<int>(lo);
    int c1 = std::min(in.cols, static_cast<int>(std::ceil(hi)));
    double wsum = 0.0;
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(c1 - c0));
    for (int c = c0; c < c1; ++c) {
      double w = std::min(hi, c + 1.0) - std::max(lo, static_cast<double>(c));
      weights.push_back(std::max(w, 0.0));
      wsum += std::max(w, 0.0);
    }
    for (int r = 0; r < in.rows; ++r) {
      const double* src = &in.v[static_cast<std::size_t>(r) * in.cols];
      double acc = 0.0;
      for (int c = c0; c < c1; ++c) {
        acc += weights[static_cast<std::size_t>(c - c0)] * src[c];
      }
      out.at(r, j) = acc / wsum;
    }
  }
  return out;
}

// Window accessors used by sample assembly.
Grid window_amp(const SLCImage& slc, int row, int col, int window) {
  Grid g(window, window);
  for (int r = 0; r < window; ++r) {
    for (int c = 0; c < window; ++c) {
      const std::complex<float>& z =
          slc.data[static_cast<std::size_t>(row + r) * slc.cols + col + c];
      g.at(r, c) = std::hypot(static_cast<double>(z.real()),
                              static_cast<double>(z.imag()));
    }
  }
  return g;
}

void window_cos_sin(const SLCImage& slc, int row, int col, int window,
                    Grid& cos_g, Grid& sin_g) {
  cos_g = Grid(window, window);
  sin_g = Grid(window, window);
  for (int r = 0; r < window; ++r) {
    for (int c = 0; c < window; ++c) {
      const std::complex<float>& z =
          slc.data[static_cast<std::size_t>(row + r) * slc.cols + col + c];
      double ph = std::atan2(static_cast<double>(z.imag()),
                             static_cast<double>(z.real()));
      cos_g.at(r, c) = std::cos(ph);
      sin_g.at(r, c) = std::sin(ph);
    }
  }
}

Grid window_dem(const DEMImage& dem, int row, int col, int window) {
  Grid g(window, window);
  for (int r = 0; r < window; ++r) {
    for (int c = 0; c < window; ++c) {
      g.at(r, c) =
          dem.data[static_cast<std::size_t>(row + r) * dem.cols + col + c];
    }
  }
  return g;
}

void check_window(const char* op, int rows, int cols, int row, int col,
                  const WindowSpec& spec) {
  if (spec.window < 1 || spec.step < 1 || spec.target < 1 ||
      spec.target > spec.window) {
    throw std::invalid_argument(std::string(op) + ": invalid window spec");
  }
  if (row < 0 || col < 0 || row + spec.window > rows ||
      col + spec.window > cols) {
    throw std::invalid_argument(
        std::string(op) + ": window at (" + std::to_string(row) + ", " +
        std::to_string(col) + ") exceeds raster " + std::to_string(rows) +
        "x" + std::to_string(cols));
  }
}

// Normalized log-amplitude channel for a window; stats may be identity.
Grid amp_channel(const SLCImage& slc, int row, int col,
                 const WindowSpec& spec) {
  Grid ds = downsample(window_amp(slc, row, col, spec.window), spec.target);
  for (double& x : ds.v) x = std::log1p(x);
  return ds;
}

json stats_to_json(const NormalizationStats& s) {
  return json{{"amp_mean", s.amp_mean},
              {"amp_std", s.amp_std},
              {"phase_scale", s.phase_scale}};
}

NormalizationStats stats_from_json(const json& j) {
  NormalizationStats s;
  s.amp_mean = j.at("amp_mean").get<double>();
  s.amp_std = j.at("amp_std").get<double>();
  s.phase_scale = j.at("phase_scale").get<double>();
  return s;
}

json parse_line(const std::string& line, const std::string& path, int lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("type")) {
    throw std::runtime_error("manifest: malformed line " +
                             std::to_string(lineno) + " in " + path);
  }
  return j;
}

}  // namespace

std::pair<Grid, Grid> abs_phase(const SLCImage& slc) {
  Grid amp(slc.rows, slc.cols);
  Grid phase(slc.rows, slc.cols);
  for (std::size_t i = 0; i < slc.data.size(); ++i) {
    double re = slc.data[i].real();
    double im = slc.data[i].imag();
    amp.v[i] = std::hypot(re, im);
    double ph = std::atan2(im, re);
    if (ph <= -kPi) ph = kPi;  // branch convention: (-pi, pi]
    phase.v[i] = ph;
  }
  return {std::move(amp), std::move(phase)};
}

std::vector<std::pair<int, int>> sliding_windows(int n, int m,
                                                 const WindowSpec& spec) {
  if (spec.step < 1) throw std::invalid_argument("sliding_windows: step < 1");
  if (n < spec.window || m < spec.window) {
    throw std::invalid_argument("sliding_windows: window " +
                                std::to_string(spec.window) +
                                " exceeds extents " + std::to_string(n) + "x" +
                                std::to_string(m));
  }
  int n_rows = (n - spec.window) / spec.step + 1;
  int n_cols = (m - spec.window) / spec.step + 1;
  std::vector<std::pair<int, int>> offsets;
  offsets.reserve(static_cast<std::size_t>(n_rows) * n_cols);
  for (int r = 0; r < n_rows; ++r) {
    for (int c = 0; c < n_cols; ++c) {
      offsets.emplace_back(r * spec.step, c * spec.step);
    }
  }
  return offsets;
}

Grid downsample(const Grid& in, int target) {
  if (target < 1) throw std::invalid_argument("downsample: target < 1");
  if (in.rows < target || in.cols < target) {
    throw std::invalid_argument("downsample: target " + std::to_string(target) +
                                " exceeds input " + std::to_string(in.rows) +
                                "x" + std::to_string(in.cols));
  }
  return resample_cols(resample_rows(in, target), target);
}

Sample make_sample(const SLCImage& slc, const DEMImage& dem, int row, int col,
                   const WindowSpec& spec, const NormalizationStats& stats) {
  if (slc.rows != dem.rows || slc.cols != dem.cols) {
    throw std::invalid_argument("make_sample: SLC/DEM extents differ");
  }
  check_window("make_sample", slc.rows, slc.cols, row, col, spec);
  if (stats.amp_std <= 0.0) {
    throw std::invalid_argument("make_sample: amp_std must be positive");
  }

  Grid amp = amp_channel(slc, row, col, spec);
  Grid cos_g, sin_g;
  window_cos_sin(slc, row, col, spec.window, cos_g, sin_g);
  Grid cos_ds = downsample(cos_g, spec.target);
  Grid sin_ds = downsample(sin_g, spec.target);
  Grid dem_ds = downsample(window_dem(dem, row, col, spec.window),
                           spec.target);

  int t = spec.target;
  Sample s{Tensor({t, t, 2}), Tensor({t, t, 1})};
  for (int r = 0; r < t; ++r) {
    for (int c = 0; c < t; ++c) {
      double ph = std::atan2(sin_ds.at(r, c), cos_ds.at(r, c));
      if (ph <= -kPi) ph = kPi;
      s.input.at(r, c, 0) = (amp.at(r, c) - stats.amp_mean) / stats.amp_std;
      s.input.at(r, c, 1) = ph * stats.phase_scale;
      s.target.at(r, c, 0) = dem_ds.at(r, c);
    }
  }
  return s;
}

std::pair<std::vector<int>, std::vector<int>> split_ids(int n, double fraction,
                                                        std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("split: empty sample set");
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(ids);
  auto train_n = static_cast<std::size_t>(std::lround(fraction * n));
  train_n = std::min(train_n, ids.size());
  std::vector<int> train(ids.begin(), ids.begin() + train_n);
  std::vector<int> test(ids.begin() + train_n, ids.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

void write_slc_tile(const std::string& path, const SLCImage& img) {
  std::string out;
  out.append(kTileMagic, sizeof(kTileMagic));
  put_u32(out, kTileVersion);
  out.push_back(static_cast<char>(kDtypeComplex64));
  put_u32(out, static_cast<std::uint32_t>(img.rows));
  put_u32(out, static_cast<std::uint32_t>(img.cols));
  for (const std::complex<float>& z : img.data) {
    put_f32(out, z.real());
    put_f32(out, z.imag());
  }
  write_file(path, out);
}

void write_dem_tile(const std::string& path, const DEMImage& img) {
  std::string out;
  out.append(kTileMagic, sizeof(kTileMagic));
  put_u32(out, kTileVersion);
  out.push_back(static_cast<char>(kDtypeFloat32));
  put_u32(out, static_cast<std::uint32_t>(img.rows));
  put_u32(out, static_cast<std::uint32_t>(img.cols));
  for (float v : img.data) put_f32(out, v);
  write_file(path, out);
}

SLCImage read_slc_tile(const std::string& path) {
  TileReader r(path);
  r.check_header(kDtypeComplex64, "complex64");
  auto [rows, cols] = read_extents(r);
  SLCImage img;
  img.rows = rows;
  img.cols = cols;
  img.data.reserve(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i) {
    float re = r.f32();
    float im = r.f32();
    if (!std::isfinite(re) || !std::isfinite(im)) {
      tile_fail(path, "non-finite entry");
    }
    img.data.emplace_back(re, im);
  }
  r.finish();
  return img;
}

DEMImage read_dem_tile(const std::string& path) {
  TileReader r(path);
  r.check_header(kDtypeFloat32, "float32");
  auto [rows, cols] = read_extents(r);
  DEMImage img;
  img.rows = rows;
  img.cols = cols;
  img.data.reserve(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i) {
    float v = r.f32();
    if (!std::isfinite(v)) tile_fail(path, "non-finite entry");
    img.data.push_back(v);
  }
  r.finish();
  return img;
}

std::pair<SLCImage, DEMImage> load_raster_pair(const std::string& slc_path,
                                               const std::string& dem_path) {
  SLCImage slc = read_slc_tile(slc_path);
  DEMImage dem = read_dem_tile(dem_path);
  if (slc.rows != dem.rows || slc.cols != dem.cols) {
    throw std::runtime_error(
        "pair: extent mismatch, SLC " + std::to_string(slc.rows) + "x" +
        std::to_string(slc.cols) + " vs DEM " + std::to_string(dem.rows) +
        "x" + std::to_string(dem.cols));
  }
  return {std::move(slc), std::move(dem)};
}

void write_pair_manifest(const std::string& path, const PairList& list) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("manifest: cannot write " + path);
  f << json{{"type", "pairs"},
            {"version", 1},
            {"seed", list.seed},
            {"count", list.pairs.size()}}
           .dump()
    << "\n";
  for (const auto& [slc, dem] : list.pairs) {
    f << json{{"type", "pair"}, {"slc", slc}, {"dem", dem}}.dump() << "\n";
  }
  if (!f) throw std::runtime_error("manifest: write failed for " + path);
}

PairList read_pair_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("manifest: cannot open " + path);
  PairList list;
  list.base_dir = std::filesystem::path(path).parent_path().string();
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, path, lineno);
    std::string type = j.at("type").get<std::string>();
    if (type == "pairs") {
      list.seed = j.at("seed").get<std::uint64_t>();
      header = true;
    } else if (type == "pair") {
      list.pairs.emplace_back(j.at("slc").get<std::string>(),
                              j.at("dem").get<std::string>());
    } else {
      throw std::runtime_error("manifest: unexpected record type \"" + type +
                               "\" at line " + std::to_string(lineno) +
                               " in " + path);
    }
  }
  if (!header) throw std::runtime_error("manifest: missing header in " + path);
  return list;
}

void write_dataset_manifest(const std::string& path,
                            const DatasetManifest& manifest) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("manifest: cannot write " + path);
  json sources = json::array();
  for (const auto& [slc, dem] : manifest.sources) {
    sources.push_back(json{{"slc", slc}, {"dem", dem}});
  }
  f << json{{"type", "dataset"},
            {"version", manifest.version},
            {"seed", manifest.split_seed},
            {"fraction", manifest.fraction},
            {"window", manifest.spec.window},
            {"step", manifest.spec.step},
            {"target", manifest.spec.target},
            {"block_split", manifest.block_split},
            {"stats", stats_to_json(manifest.stats)},
            {"sources", sources}}
           .dump()
    << "\n";
  for (const SampleEntry& e : manifest.entries) {
    f << json{{"type", "sample"},
              {"source", e.source},
              {"row", e.row},
              {"col", e.col},
              {"split", e.train ? "train" : "test"}}
             .dump()
      << "\n";
  }
  if (!f) throw std::runtime_error("manifest: write failed for " + path);
}

DatasetManifest read_dataset_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("manifest: cannot open " + path);
  DatasetManifest m;
  m.base_dir = std::filesystem::path(path).parent_path().string();
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, path, lineno);
    std::string type = j.at("type").get<std::string>();
    if (type == "dataset") {
      m.version = j.at("version").get<int>();
      m.split_seed = j.at("seed").get<std::uint64_t>();
      m.fraction = j.at("fraction").get<double>();
      m.spec.window = j.at("window").get<int>();
      m.spec.step = j.at("step").get<int>();
      m.spec.target = j.at("target").get<int>();
      m.block_split = j.at("block_split").get<bool>();
      m.stats = stats_from_json(j.at("stats"));
      for (const json& s : j.at("sources")) {
        m.sources.emplace_back(s.at("slc").get<std::string>(),
                               s.at("dem").get<std::string>());
      }
      header = true;
    } else if (type == "sample") {
      SampleEntry e;
      e.source = j.at("source").get<int>();
      e.row = j.at("row").get<int>();
      e.col = j.at("col").get<int>();
      std::string split = j.at("split").get<std::string>();
      if (split != "train" && split != "test") {
        throw std::runtime_error("manifest: unknown split \"" + split +
                                 "\" at line " + std::to_string(lineno));
      }
      e.train = split == "train";
      if (e.source < 0 ||
          static_cast<std::size_t>(e.source) >= m.sources.size()) {
        throw std::runtime_error("manifest: source index out of range at line " +
                                 std::to_string(lineno));
      }
      m.entries.push_back(e);
    } else {
      throw std::runtime_error("manifest: unexpected record type \"" + type +
                               "\" at line " + std::to_string(lineno) +
                               " in " + path);
    }
  }
  if (!header) throw std::runtime_error("manifest: missing header in " + path);
  return m;
}

DatasetManifest ingest(const std::string& pair_manifest_path,
                       const WindowSpec& spec, double fraction,
                       std::uint64_t seed, bool block_split,
                       const std::string& out_manifest_path) {
  PairList list = read_pair_manifest(pair_manifest_path);
  if (list.pairs.empty()) {
    throw std::runtime_error("ingest: pair manifest lists no pairs");
  }
  namespace fs = std::filesystem;

  DatasetManifest m;
  m.split_seed = seed;
  m.fraction = fraction;
  m.spec = spec;
  m.block_split = block_split;

  // Source paths are stored relative to the dataset manifest itself (the
  // pair manifest may live in a different directory), so the dataset
  // stays relocatable as a unit.
  fs::path out_base =
      fs::absolute(out_manifest_path).parent_path().lexically_normal();
  auto relocate = [&](const std::string& rel) {
    fs::path abs = fs::absolute(fs::path(list.base_dir) / rel).lexically_normal();
    return abs.lexically_proximate(out_base).generic_string();
  };

  std::vector<SLCImage> slcs;
  std::vector<DEMImage> dems;
  for (const auto& [slc_rel, dem_rel] : list.pairs) {
    auto [slc, dem] =
        load_raster_pair((fs::path(list.base_dir) / slc_rel).string(),
                         (fs::path(list.base_dir) / dem_rel).string());
    slcs.push_back(std::move(slc));
    dems.push_back(std::move(dem));
    m.sources.emplace_back(relocate(slc_rel), relocate(dem_rel));
  }

  for (std::size_t src = 0; src < slcs.size(); ++src) {
    for (auto [row, col] :
         sliding_windows(slcs[src].rows, slcs[src].cols, spec)) {
      m.entries.push_back({static_cast<int>(src), row, col, false});
    }
  }

  if (block_split) {
    // Per source: order the distinct row offsets, cut at the split
    // fraction, and drop windows straddling the cut so that train and
    // test never share pixels.
    std::vector<SampleEntry> kept;
    for (std::size_t src = 0; src < slcs.size(); ++src) {
      std::vector<int> rows;
      for (const SampleEntry& e : m.entries) {
        if (e.source == static_cast<int>(src)) rows.push_back(e.row);
      }
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      auto cut_idx = static_cast<std::size_t>(
          std::lround(fraction * static_cast<double>(rows.size())));
      int cut = cut_idx >= rows.size()
                    ? slcs[src].rows  // everything trains
                    : rows[cut_idx];
      for (SampleEntry e : m.entries) {
        if (e.source != static_cast<int>(src)) continue;
        if (e.row >= cut) {
          e.train = false;
          kept.push_back(e);
        } else if (e.row + spec.window <= cut) {
          e.train = true;
          kept.push_back(e);
        }
        // else: straddles the cut; dropped
      }
    }
    m.entries = std::move(kept);
  } else {
    auto n = static_cast<int>(m.entries.size());
    auto [train, test] = split_ids(n, fraction, seed);
    for (int id : train) m.entries[static_cast<std::size_t>(id)].train = true;
  }

  // Normalization statistics over the training split, manifest order.
  double mean = 0.0, m2 = 0.0;
  std::size_t count = 0;
  for (const SampleEntry& e : m.entries) {
    if (!e.train) continue;
    Grid amp = amp_channel(slcs[static_cast<std::size_t>(e.source)], e.row,
                           e.col, spec);
    for (double x : amp.v) {
      ++count;
      double delta = x - mean;
      mean += delta / static_cast<double>(count);
      m2 += delta * (x - mean);
    }
  }
  if (count == 0) {
    throw std::runtime_error("ingest: split produced no training samples");
  }
  m.stats.amp_mean = mean;
  m.stats.amp_std =
      std::max(std::sqrt(m2 / static_cast<double>(count)), 1e-12);

  write_dataset_manifest(out_manifest_path, m);
  m.base_dir = fs::path(out_manifest_path).parent_path().string();
  return m;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest, bool train) {
  return load_samples(manifest, train, manifest.stats);
}

std::vector<Sample> load_samples(const DatasetManifest& manifest, bool train,
                                 const NormalizationStats& stats) {
  namespace fs = std::filesystem;
  std::vector<Sample> samples;
  // Sources cached lazily; manifests usually group samples by source.
  std::vector<bool> loaded(manifest.sources.size(), false);
  std::vector<SLCImage> slcs(manifest.sources.size());
  std::vector<DEMImage> dems(manifest.sources.size());
  for (const SampleEntry& e : manifest.entries) {
    if (e.train != train) continue;
    auto src = static_cast<std::size_t>(e.source);
    if (!loaded[src]) {
      auto [slc, dem] = load_raster_pair(
          (fs::path(manifest.base_dir) / manifest.sources[src].first).string(),
          (fs::path(manifest.base_dir) / manifest.sources[src].second)
              .string());
      slcs[src] = std::move(slc);
      dems[src] = std::move(dem);
      loaded[src] = true;
    }
    samples.push_back(
        make_sample(slcs[src], dems[src], e.row, e.col, manifest.spec, stats));
  }
  return samples;
}

}  // namespace demnet

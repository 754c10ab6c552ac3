// demnet: synthetic SAR-to-DEM workflow driver.
//
// Subcommands: generate | ingest | train | eval | predict | profile.
// Each run resolves its configuration from defaults, an optional JSON
// config file, and explicit flags (flags win), then logs the resolved
// config to stdout and to <out>/run_config.json before doing any work.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "demnet/data_pipeline.hpp"
#include "demnet/loss_metrics.hpp"
#include "demnet/synthetic.hpp"
#include "demnet/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binds one subcommand's options to both CLI11 and a JSON key registry so a
// config file and the flag set stay in lockstep. JSON keys use underscores,
// flags use dashes.
class KeyedOpts {
 public:
  explicit KeyedOpts(CLI::App* cmd) : cmd_(cmd) {
    config_opt_ = cmd_->add_option("--config", config_path_,
                                   "JSON config file; flags override it");
  }

  template <typename T>
  void add(const std::string& key, T& var, const std::string& desc) {
    register_key(key, cmd_->add_option("--" + flag_name(key), var, desc), var);
  }

  void add_flag(const std::string& key, bool& var, const std::string& desc) {
    std::string f = flag_name(key);
    register_key(key, cmd_->add_flag("--" + f + ",!--no-" + f, var, desc),
                 var);
  }

  template <typename T>
  void add_choice(const std::string& key, T& var, const std::string& desc,
                  const std::vector<std::string>& choices) {
    auto* opt = cmd_->add_option("--" + flag_name(key), var, desc);
    opt->check(CLI::IsMember(choices));
    register_key(key, opt, var);
  }

  // Applies the config file (if any) to options the user did not set
  // explicitly, then returns the fully resolved key set.
  json resolve() const {
    if (!config_path_.empty()) {
      std::ifstream f(config_path_);
      if (!f) throw std::runtime_error("cannot open config " + config_path_);
      json j;
      try {
        j = json::parse(f);
      } catch (const json::exception& e) {
        throw std::runtime_error("config " + config_path_ + ": " + e.what());
      }
      if (!j.is_object()) {
        throw UsageError("config " + config_path_ + ": expected a JSON object");
      }
      for (const auto& [k, v] : j.items()) {
        auto it = setters_.find(k);
        if (it == setters_.end()) {
          throw UsageError("config " + config_path_ + ": unknown key \"" + k +
                           "\"");
        }
        if (options_.at(k)->count() == 0) {
          try {
            it->second(v);
          } catch (const json::exception& e) {
            throw UsageError("config " + config_path_ + ": key \"" + k +
                             "\": " + e.what());
          }
        }
      }
    }
    json resolved = json::object();
    for (const auto& [k, g] : getters_) resolved[k] = g();
    return resolved;
  }

 private:
  static std::string flag_name(std::string key) {
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    return key;
  }

  template <typename T>
  void register_key(const std::string& key, CLI::Option* opt, T& var) {
    options_[key] = opt;
    setters_[key] = [&var](const json& j) { var = j.get<T>(); };
    getters_[key] = [&var]() { return json(var); };
  }

  CLI::App* cmd_;
  std::string config_path_;
  CLI::Option* config_opt_;
  std::map<std::string, CLI::Option*> options_;
  std::map<std::string, std::function<void(const json&)>> setters_;
  std::map<std::string, std::function<json()>> getters_;
};

void log_config(const std::string& subcommand, const json& resolved,
                const std::string& out_dir) {
  json j{{"subcommand", subcommand}, {"config", resolved}};
  std::string line = j.dump();
  std::printf("resolved config: %s\n", line.c_str());
  std::fflush(stdout);
  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / "run_config.json", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write run_config.json in " + out_dir);
  f << line << "\n";
}

demnet::Tensor dem_to_tensor(const demnet::DEMImage& dem) {
  demnet::Tensor t({dem.rows, dem.cols});
  for (std::size_t i = 0; i < dem.data.size(); ++i) t[i] = dem.data[i];
  return t;
}

void write_pgm(const std::string& path, const demnet::DEMImage& dem) {
  float lo = dem.data[0], hi = dem.data[0];
  for (float v : dem.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "P5\n" << dem.cols << " " << dem.rows << "\n255\n";
  for (float v : dem.data) {
    f.put(static_cast<char>(static_cast<unsigned char>((v - lo) * scale)));
  }
}

// ---------------------------------------------------------------- generate

struct GenOpts {
  int pairs = 1;
  std::uint64_t seed = 1;
  std::string out = "data";
  int size = 140;
  double beta = 3.0;
  double elev_min = -8.0;
  double elev_max = 8.0;
  double look_angle = 0.6;
  double wavelength = 0.056;
  bool speckle = true;
  double phase_noise = 0.0;
};

void run_generate(const GenOpts& o) {
  demnet::SynthConfig cfg;
  cfg.n_pairs = o.pairs;
  cfg.out_dir = o.out;
  cfg.terrain.size = o.size;
  cfg.terrain.beta = o.beta;
  cfg.terrain.elev_min = o.elev_min;
  cfg.terrain.elev_max = o.elev_max;
  cfg.terrain.seed = o.seed;
  cfg.render.look_angle = o.look_angle;
  cfg.render.wavelength = o.wavelength;
  cfg.render.speckle = o.speckle;
  cfg.render.phase_noise = o.phase_noise;
  std::string manifest = demnet::gen_dataset(cfg);
  std::printf("pairs=%d\nmanifest=%s\n", o.pairs, manifest.c_str());
}

// ------------------------------------------------------------------ ingest

struct IngestOpts {
  std::string pairs_manifest = "data/pairs.jsonl";
  std::string out = "dataset";
  int window = 140;
  int step = 100;
  int target = 140;
  double fraction = 0.65;
  std::uint64_t seed = 1;
  bool block_split = false;
};

void run_ingest(const IngestOpts& o) {
  demnet::WindowSpec spec;
  spec.window = o.window;
  spec.step = o.step;
  spec.target = o.target;
  std::string out_manifest = (fs::path(o.out) / "dataset.jsonl").string();
  demnet::DatasetManifest m = demnet::ingest(
      o.pairs_manifest, spec, o.fraction, o.seed, o.block_split, out_manifest);
  std::size_t train = 0, test = 0;
  for (const auto& e : m.entries) (e.train ? train : test) += 1;
  std::printf("train_samples=%zu\ntest_samples=%zu\nmanifest=%s\n", train,
              test, out_manifest.c_str());
}

// ------------------------------------------------------------------- train

struct TrainOpts {
  std::string manifest = "dataset/dataset.jsonl";
  std::string out = "run";
  int epochs = 500;
  int batch_size = 128;
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lambda = 0.01;
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;
  int checkpoint_every = 25;
  int eval_every = 1;
  std::string resume;
};

void run_train(const TrainOpts& o) {
  demnet::TrainConfig cfg;
  cfg.manifest_path = o.manifest;
  cfg.out_dir = o.out;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.adam.alpha = o.alpha;
  cfg.adam.beta1 = o.beta1;
  cfg.adam.beta2 = o.beta2;
  cfg.adam.epsilon = o.epsilon;
  cfg.lambda = o.lambda;
  cfg.init_seed = o.init_seed;
  cfg.shuffle_seed = o.shuffle_seed;
  cfg.checkpoint_every = o.checkpoint_every;
  cfg.eval_every = o.eval_every;
  cfg.resume = o.resume;
  demnet::TrainResult res =
      demnet::train(cfg, [](int epoch, double tr, double te) {
        std::printf("epoch %d train_rmse=%.17g test_rmse=%.17g\n", epoch, tr,
                    te);
        std::fflush(stdout);
        return true;
      });
  std::printf("epochs_run=%d\ncheckpoint=%s\nmetrics=%s\n", res.epochs_run,
              res.checkpoint_path.c_str(), res.metrics_path.c_str());
}

// -------------------------------------------------------------------- eval

struct EvalOpts {
  std::string checkpoint = "run/ckpt_final.demn";
  std::string manifest = "dataset/dataset.jsonl";
  std::string split = "test";
  std::string out = "eval";
};

void run_eval(const EvalOpts& o) {
  demnet::Checkpoint ckpt = demnet::load_checkpoint(o.checkpoint);
  demnet::DatasetManifest m = demnet::read_dataset_manifest(o.manifest);
  demnet::EvalReport report = demnet::evaluate(
      ckpt, m, o.split == "train" ? demnet::SplitSel::TRAIN
                                  : demnet::SplitSel::TEST);
  std::string images = (fs::path(o.out) / "eval_images.csv").string();
  std::string bins = (fs::path(o.out) / "eval_bins.csv").string();
  demnet::write_eval_csv(report, images, bins);
  std::printf("images=%zu\nmean_rmse=%.17g\nimages_csv=%s\nbins_csv=%s\n",
              report.per_image_rmse.size(), report.mean_rmse, images.c_str(),
              bins.c_str());
}

// ----------------------------------------------------------------- predict

struct PredictOpts {
  std::string checkpoint = "run/ckpt_final.demn";
  std::string slc;
  std::string out = "predict";
  int repeats = 1;
  bool preview = false;
};

void run_predict(const PredictOpts& o) {
  if (o.slc.empty()) throw UsageError("predict: --slc is required");
  demnet::Checkpoint ckpt = demnet::load_checkpoint(o.checkpoint);
  demnet::SLCImage slc = demnet::read_slc_tile(o.slc);
  demnet::PredictResult res = demnet::predict(ckpt, slc, o.repeats);
  std::string dem_path = (fs::path(o.out) / "dem.sart").string();
  demnet::write_dem_tile(dem_path, res.dem);
  std::printf("dem=%s\n", dem_path.c_str());
  if (o.preview) {
    std::string pgm = (fs::path(o.out) / "preview.pgm").string();
    write_pgm(pgm, res.dem);
    std::printf("preview=%s\n", pgm.c_str());
  }
  // Median forward-pass wall time over --repeats runs; input prep excluded.
  std::printf("latency_ms=%.3f\n", res.latency_ms);
}

// ----------------------------------------------------------------- profile

struct ProfileOpts {
  std::string dem;
  std::string pred;
  std::vector<int> range = {30, 120};
  std::string out = "profile";
};

void run_profile(const ProfileOpts& o) {
  if (o.dem.empty()) throw UsageError("profile: --dem is required");
  demnet::Tensor dem = dem_to_tensor(demnet::read_dem_tile(o.dem));
  std::vector<std::vector<double>> cols;
  std::vector<std::string> headers;
  for (int r : o.range) {
    cols.push_back(demnet::range_profile(dem, r));
    headers.push_back("dem_r" + std::to_string(r));
  }
  if (!o.pred.empty()) {
    demnet::Tensor pred = dem_to_tensor(demnet::read_dem_tile(o.pred));
    if (pred.shape()[1] != dem.shape()[1]) {
      throw std::runtime_error("profile: --pred width differs from --dem");
    }
    for (int r : o.range) {
      cols.push_back(demnet::range_profile(pred, r));
      headers.push_back("pred_r" + std::to_string(r));
    }
  }
  std::string csv_path = (fs::path(o.out) / "profile.csv").string();
  std::ofstream f(csv_path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + csv_path);
  f << "index";
  for (const auto& h : headers) f << ',' << h;
  f << '\n';
  std::size_t n = cols[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    f << i;
    for (const auto& c : cols) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", c[i]);
      f << ',' << buf;
    }
    f << '\n';
  }
  std::printf("rows=%zu\nprofile_csv=%s\n", n, csv_path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAR-to-DEM estimator workflow"};
  app.require_subcommand(1);

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic SLC/DEM pair set");
  KeyedOpts gen_keys(gen_cmd);
  gen_keys.add("pairs", gen.pairs, "number of pairs");
  gen_keys.add("seed", gen.seed, "master seed");
  gen_keys.add("out", gen.out, "output directory");
  gen_keys.add("size", gen.size, "terrain side length in pixels (>= 140)");
  gen_keys.add("beta", gen.beta, "terrain spectral exponent (larger = smoother)");
  gen_keys.add("elev_min", gen.elev_min, "elevation minimum in meters");
  gen_keys.add("elev_max", gen.elev_max, "elevation maximum in meters");
  gen_keys.add("look_angle", gen.look_angle, "radar look angle in radians");
  gen_keys.add("wavelength", gen.wavelength, "carrier wavelength in meters");
  gen_keys.add_flag("speckle", gen.speckle, "multiplicative amplitude speckle");
  gen_keys.add("phase_noise", gen.phase_noise, "uniform phase noise bound in radians");

  IngestOpts ing;
  auto* ing_cmd = app.add_subcommand("ingest", "Window raster pairs into a train/test dataset");
  KeyedOpts ing_keys(ing_cmd);
  ing_keys.add("pairs_manifest", ing.pairs_manifest, "pair manifest from generate");
  ing_keys.add("out", ing.out, "output directory");
  ing_keys.add("window", ing.window, "source window side length");
  ing_keys.add("step", ing.step, "window stride");
  ing_keys.add("target", ing.target, "downsampled sample side length");
  ing_keys.add("fraction", ing.fraction, "train fraction");
  ing_keys.add("seed", ing.seed, "split seed");
  ing_keys.add_flag("block_split", ing.block_split, "spatially disjoint row-block split");

  TrainOpts tr;
  auto* tr_cmd = app.add_subcommand("train", "Train the estimator");
  KeyedOpts tr_keys(tr_cmd);
  tr_keys.add("manifest", tr.manifest, "dataset manifest");
  tr_keys.add("out", tr.out, "output directory");
  tr_keys.add("epochs", tr.epochs, "epoch budget");
  tr_keys.add("batch_size", tr.batch_size, "minibatch size");
  tr_keys.add("alpha", tr.alpha, "Adam step size");
  tr_keys.add("beta1", tr.beta1, "Adam first-moment decay");
  tr_keys.add("beta2", tr.beta2, "Adam second-moment decay");
  tr_keys.add("epsilon", tr.epsilon, "Adam denominator offset");
  tr_keys.add("lambda", tr.lambda, "L2 coefficient on conv weights");
  tr_keys.add("init_seed", tr.init_seed, "weight init seed");
  tr_keys.add("shuffle_seed", tr.shuffle_seed, "epoch shuffle seed");
  tr_keys.add("checkpoint_every", tr.checkpoint_every, "epochs between checkpoints (0 = off)");
  tr_keys.add("eval_every", tr.eval_every, "epochs between test evals (0 = off)");
  tr_keys.add("resume", tr.resume, "checkpoint to resume from");

  EvalOpts ev;
  auto* ev_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  KeyedOpts ev_keys(ev_cmd);
  ev_keys.add("checkpoint", ev.checkpoint, "checkpoint file");
  ev_keys.add("manifest", ev.manifest, "dataset manifest");
  ev_keys.add_choice("split", ev.split, "split to evaluate", {"train", "test"});
  ev_keys.add("out", ev.out, "output directory");

  PredictOpts pr;
  auto* pr_cmd = app.add_subcommand("predict", "Estimate a DEM from one SLC tile");
  KeyedOpts pr_keys(pr_cmd);
  pr_keys.add("checkpoint", pr.checkpoint, "checkpoint file");
  pr_keys.add("slc", pr.slc, "input SLC tile");
  pr_keys.add("out", pr.out, "output directory");
  pr_keys.add("repeats", pr.repeats, "forward passes for the latency median");
  pr_keys.add_flag("preview", pr.preview, "also write an 8-bit grayscale preview");

  ProfileOpts pf;
  auto* pf_cmd = app.add_subcommand("profile", "Export elevation-vs-azimuth profiles at fixed range rows");
  KeyedOpts pf_keys(pf_cmd);
  pf_keys.add("dem", pf.dem, "DEM tile to slice");
  pf_keys.add("pred", pf.pred, "optional second tile (predicted DEM)");
  pf_keys.add("range", pf.range, "range row indices");
  pf_keys.add("out", pf.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    // resolve() may pull values (including "out") from the config file, so
    // it must complete before the output directory is read.
    if (gen_cmd->parsed()) {
      json resolved = gen_keys.resolve();
      log_config("generate", resolved, gen.out);
      run_generate(gen);
    } else if (ing_cmd->parsed()) {
      json resolved = ing_keys.resolve();
      log_config("ingest", resolved, ing.out);
      run_ingest(ing);
    } else if (tr_cmd->parsed()) {
      json resolved = tr_keys.resolve();
      log_config("train", resolved, tr.out);
      run_train(tr);
    } else if (ev_cmd->parsed()) {
      json resolved = ev_keys.resolve();
      log_config("eval", resolved, ev.out);
      run_eval(ev);
    } else if (pr_cmd->parsed()) {
      json resolved = pr_keys.resolve();
      log_config("predict", resolved, pr.out);
      run_predict(pr);
    } else if (pf_cmd->parsed()) {
      json resolved = pf_keys.resolve();
      log_config("profile", resolved, pf.out);
      run_profile(pf);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#include "demnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "demnet/model.hpp"
#include "demnet/parallel.hpp"
#include "demnet/rng.hpp"

namespace demnet {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void add_grads(ParamGrads& acc, const ParamGrads& part) {
  for (std::size_t i = 0; i < acc.layers.size(); ++i) {
    auto add = [](Tensor& a, const Tensor& b) {
      for (std::size_t j = 0; j < a.size(); ++j) a[j] += b[j];
    };
    add(acc.layers[i].weights, part.layers[i].weights);
    add(acc.layers[i].bias, part.layers[i].bias);
    add(acc.layers[i].slopes, part.layers[i].slopes);
  }
}

// Whole-tile network input: channels [z-scored log-amplitude, phase/pi],
// phase downsampled circularly.
Tensor tile_input(const SLCImage& slc, const NormalizationStats& stats,
                  int target) {
  auto [amp, phase] = abs_phase(slc);
  Grid amp_ds = downsample(amp, target);
  Grid cos_g(slc.rows, slc.cols), sin_g(slc.rows, slc.cols);
  for (std::size_t i = 0; i < phase.v.size(); ++i) {
    cos_g.v[i] = std::cos(phase.v[i]);
    sin_g.v[i] = std::sin(phase.v[i]);
  }
  Grid cos_ds = downsample(cos_g, target);
  Grid sin_ds = downsample(sin_g, target);

  constexpr double kPi = 3.14159265358979323846;
  Tensor input({target, target, 2});
  for (int r = 0; r < target; ++r) {
    for (int c = 0; c < target; ++c) {
      double ph = std::atan2(sin_ds.at(r, c), cos_ds.at(r, c));
      if (ph <= -kPi) ph = kPi;
      input.at(r, c, 0) =
          (std::log1p(amp_ds.at(r, c)) - stats.amp_mean) / stats.amp_std;
      input.at(r, c, 1) = ph * stats.phase_scale;
    }
  }
  return input;
}

double mean_test_rmse(const ModelParams& model,
                      const std::vector<Sample>& test) {
  std::vector<double> rmses(test.size());
  parallel_chunks(static_cast<int>(test.size()), [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      Tensor pred = forward(model, test[static_cast<std::size_t>(i)].input,
                            RunMode::INFER);
      rmses[static_cast<std::size_t>(i)] =
          rmse(pred, test[static_cast<std::size_t>(i)].target);
    }
  });
  double sum = 0.0;
  for (double r : rmses) sum += r;
  return sum / static_cast<double>(rmses.size());
}

}  // namespace

Digest config_digest(const TrainConfig& config) {
  std::string canon = "demnet-train-v1\n";
  canon += "alpha=" + fmt_double(config.adam.alpha) + "\n";
  canon += "beta1=" + fmt_double(config.adam.beta1) + "\n";
  canon += "beta2=" + fmt_double(config.adam.beta2) + "\n";
  canon += "epsilon=" + fmt_double(config.adam.epsilon) + "\n";
  canon += "lambda=" + fmt_double(config.lambda) + "\n";
  canon += "batch_size=" + std::to_string(config.batch_size) + "\n";
  canon += "init_seed=" + std::to_string(config.init_seed) + "\n";
  canon += "shuffle_seed=" + std::to_string(config.shuffle_seed) + "\n";
  canon += "manifest_sha256=" +
           digest_hex(sha256_file(config.manifest_path)) + "\n";
  return sha256(canon);
}

TrainResult train(const TrainConfig& config, const EpochHook& hook) {
  if (config.batch_size < 1) {
    throw std::invalid_argument("train: batch_size must be >= 1");
  }
  if (config.epochs < 1) {
    throw std::invalid_argument("train: epochs must be >= 1");
  }
  DatasetManifest manifest = read_dataset_manifest(config.manifest_path);
  if (manifest.spec.target != kInputSize) {
    throw std::runtime_error(
        "train: network input is fixed at " + std::to_string(kInputSize) +
        "x" + std::to_string(kInputSize) + "; manifest target is " +
        std::to_string(manifest.spec.target));
  }
  Digest digest = config_digest(config);

  ModelParams model;
  AdamState adam;
  int epoch_start = 0;
  if (config.resume.empty()) {
    model = demnet_model(config.init_seed);
    adam = make_adam_state(trainable_tensors(std::as_const(model)),
                           config.adam);
  } else {
    Checkpoint ckpt = load_checkpoint(config.resume);
    if (ckpt.config_digest != digest) {
      throw std::runtime_error(
          "train: checkpoint " + config.resume +
          " was produced by a different configuration (digest mismatch)");
    }
    model = std::move(ckpt.params);
    adam = std::move(ckpt.adam);
    epoch_start = static_cast<int>(ckpt.epoch);
    if (epoch_start >= config.epochs) {
      throw std::runtime_error("train: checkpoint already at epoch " +
                               std::to_string(epoch_start) +
                               ", nothing to do for a budget of " +
                               std::to_string(config.epochs));
    }
  }

  std::vector<Sample> train_set = load_samples(manifest, true);
  std::vector<Sample> test_set = load_samples(manifest, false);
  if (train_set.empty()) {
    throw std::runtime_error("train: manifest has no training samples");
  }

  fs::create_directories(config.out_dir);
  std::string metrics_path = (fs::path(config.out_dir) / "metrics.csv").string();
  std::ofstream metrics;
  if (config.resume.empty()) {
    metrics.open(metrics_path, std::ios::trunc);
    metrics << "epoch,train_loss,test_rmse,wall_time\n";
  } else {
    metrics.open(metrics_path, std::ios::app);
  }
  if (!metrics) {
    throw std::runtime_error("train: cannot write " + metrics_path);
  }

  std::vector<Tensor*> param_tensors = trainable_tensors(model);
  std::vector<std::string> param_names = trainable_names(model);
  std::string latest_path = (fs::path(config.out_dir) / "ckpt_latest.demn").string();
  std::string final_path = (fs::path(config.out_dir) / "ckpt_final.demn").string();

  auto save = [&](const std::string& path, int epoch) {
    Checkpoint ckpt;
    ckpt.config_digest = digest;
    ckpt.epoch = static_cast<std::uint32_t>(epoch);
    ckpt.params = model;
    ckpt.adam = adam;
    ckpt.stats = manifest.stats;
    save_checkpoint(ckpt, path);
  };

  TrainResult result;
  result.metrics_path = metrics_path;
  int n = static_cast<int>(train_set.size());
  double pixels_per_sample = static_cast<double>(train_set[0].target.size());

  for (int epoch = epoch_start + 1; epoch <= config.epochs; ++epoch) {
    auto epoch_t0 = Clock::now();
    // Stateless per-epoch shuffle: resume reproduces epoch k exactly.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng shuffle_rng(splitmix64(config.shuffle_seed +
                               static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_sqsum = 0.0;
    std::size_t epoch_pixels = 0;
    for (int b0 = 0, batch_idx = 0; b0 < n; b0 += config.batch_size,
             ++batch_idx) {
      int b1 = std::min(n, b0 + config.batch_size);
      int bsize = b1 - b0;

      // Per-chunk gradient and loss accumulators, combined in chunk
      // order: bit-reproducible for a fixed thread count.
      int n_chunks = parallel_chunk_count(bsize);
      std::vector<ParamGrads> chunk_grads(
          static_cast<std::size_t>(n_chunks));
      std::vector<double> chunk_sqsum(static_cast<std::size_t>(n_chunks),
                                      0.0);
      parallel_chunks_indexed(bsize, [&](int chunk, int lo, int hi) {
        ParamGrads local = make_zero_grads(model);
        double sqsum = 0.0;
        for (int k = lo; k < hi; ++k) {
          const Sample& s =
              train_set[static_cast<std::size_t>(order[static_cast<std::size_t>(b0 + k)])];
          ForwardCache cache;
          Tensor pred = forward(model, s.input, RunMode::TRAIN, &cache);
          Tensor grad_dem = mse_grad(pred, s.target);
          for (std::size_t j = 0; j < grad_dem.size(); ++j) {
            double d = pred[j] - s.target[j];
            sqsum += d * d;
            grad_dem[j] /= static_cast<double>(bsize);
          }
          add_grads(local, backward(model, cache, grad_dem, 0.0));
        }
        chunk_grads[static_cast<std::size_t>(chunk)] = std::move(local);
        chunk_sqsum[static_cast<std::size_t>(chunk)] = sqsum;
      });

      ParamGrads batch_grads = std::move(chunk_grads[0]);
      double batch_sqsum = chunk_sqsum[0];
      for (int c = 1; c < n_chunks; ++c) {
        add_grads(batch_grads, chunk_grads[static_cast<std::size_t>(c)]);
        batch_sqsum += chunk_sqsum[static_cast<std::size_t>(c)];
      }
      if (!std::isfinite(batch_sqsum)) {
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_idx));
      }
      epoch_sqsum += batch_sqsum;
      epoch_pixels += static_cast<std::size_t>(bsize) *
                      static_cast<std::size_t>(pixels_per_sample);

      // The L2 term enters once per optimizer step, not per sample.
      if (config.lambda != 0.0) {
        for (std::size_t i = 0; i < model.layers.size(); ++i) {
          const Tensor& w = model.layers[i].weights;
          Tensor& gw = batch_grads.layers[i].weights;
          for (std::size_t j = 0; j < w.size(); ++j) {
            gw[j] += 2.0 * config.lambda * w[j];
          }
        }
      }
      adam_step(param_tensors, grad_tensors(batch_grads, model), adam,
                param_names);
    }

    double train_rmse =
        std::sqrt(epoch_sqsum / static_cast<double>(epoch_pixels));
    double test_rmse = std::numeric_limits<double>::quiet_NaN();
    bool eval_now = config.eval_every > 0 && !test_set.empty() &&
                    (epoch % config.eval_every == 0 || epoch == config.epochs);
    if (eval_now) test_rmse = mean_test_rmse(model, test_set);

    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.3f", seconds_since(epoch_t0));
    metrics << epoch << ',' << fmt_double(train_rmse) << ','
            << fmt_double(test_rmse) << ',' << wall << '\n';
    metrics.flush();

    if (epoch == epoch_start + 1) result.first_epoch_rmse = train_rmse;
    result.final_train_rmse = train_rmse;
    result.epochs_run = epoch;

    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 &&
        epoch != config.epochs) {
      save(latest_path, epoch);
    }
    if (hook && !hook(epoch, train_rmse, test_rmse)) break;
  }

  save(final_path, result.epochs_run);
  result.checkpoint_path = final_path;
  return result;
}

EvalReport evaluate(const Checkpoint& ckpt, const DatasetManifest& manifest,
                    SplitSel split) {
  if (ckpt.stats.amp_std <= 0.0) {
    throw std::runtime_error(
        "evaluate: checkpoint lacks normalization statistics");
  }
  std::vector<Sample> samples =
      load_samples(manifest, split == SplitSel::TRAIN, ckpt.stats);
  if (samples.empty()) {
    throw std::runtime_error("evaluate: selected split has no samples");
  }
  std::vector<Tensor> preds(samples.size());
  std::vector<Tensor> gts(samples.size());
  parallel_chunks(static_cast<int>(samples.size()), [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      auto u = static_cast<std::size_t>(i);
      preds[u] = forward(ckpt.params, samples[u].input, RunMode::INFER);
      gts[u] = samples[u].target;
    }
  });
  return binned_error(preds, gts, 100);
}

void write_eval_csv(const EvalReport& report, const std::string& images_path,
                    const std::string& bins_path) {
  {
    std::ofstream f(images_path, std::ios::trunc);
    if (!f) throw std::runtime_error("eval: cannot write " + images_path);
    f << "image,rmse\n";
    for (std::size_t i = 0; i < report.per_image_rmse.size(); ++i) {
      f << i << ',' << fmt_double(report.per_image_rmse[i]) << '\n';
    }
    f << "mean," << fmt_double(report.mean_rmse) << '\n';
  }
  {
    std::ofstream f(bins_path, std::ios::trunc);
    if (!f) throw std::runtime_error("eval: cannot write " + bins_path);
    f << "bin,lo,hi,count,mean_abs_error\n";
    for (std::size_t b = 0; b < report.bin_counts.size(); ++b) {
      f << b << ',' << fmt_double(report.bin_edges[b]) << ','
        << fmt_double(report.bin_edges[b + 1]) << ',' << report.bin_counts[b]
        << ',' << fmt_double(report.bin_mean_abs_error[b]) << '\n';
    }
  }
}

PredictResult predict(const Checkpoint& ckpt, const SLCImage& slc,
                      int repeats) {
  if (ckpt.stats.amp_std <= 0.0) {
    throw std::runtime_error(
        "predict: checkpoint lacks normalization statistics");
  }
  if (repeats < 1) throw std::invalid_argument("predict: repeats must be >= 1");
  Tensor input = tile_input(slc, ckpt.stats, kInputSize);

  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(repeats));
  Tensor pred;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = Clock::now();
    pred = forward(ckpt.params, input, RunMode::INFER);
    times.push_back(seconds_since(t0) * 1e3);
  }
  std::sort(times.begin(), times.end());

  PredictResult result;
  result.latency_ms = times[times.size() / 2];
  result.dem.rows = kInputSize;
  result.dem.cols = kInputSize;
  result.dem.data.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    result.dem.data[i] = static_cast<float>(pred[i]);
  }
  return result;
}

}  // namespace demnet

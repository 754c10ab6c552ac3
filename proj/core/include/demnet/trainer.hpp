#ifndef DEMNET_TRAINER_HPP
#define DEMNET_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <string>

#include "demnet/checkpoint.hpp"
#include "demnet/data_pipeline.hpp"
#include "demnet/loss_metrics.hpp"
#include "demnet/optimizer.hpp"

namespace demnet {

struct TrainConfig {
  std::string manifest_path;
  std::string out_dir;
  int batch_size = 128;
  int epochs = 500;
  AdamConfig adam;
  double lambda = 0.01;  // L2 weight on conv/tconv weights
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;
  int checkpoint_every = 25;  // epochs; 0 disables periodic checkpoints
  int eval_every = 1;         // epochs between test evaluations; 0 disables
  std::string resume;         // checkpoint to continue from; empty = fresh
};

/// Hash of everything that shapes the loss trajectory (optimizer
/// hyperparameters, lambda, batch size, seeds, and the manifest bytes).
/// Stored in checkpoints; resuming requires an exact match. The epoch
/// budget is deliberately excluded so a run can be extended.
Digest config_digest(const TrainConfig& config);

/// Called after each epoch with the epoch number, the epoch's train RMSE
/// (meters), and the test RMSE (NaN when not evaluated). Returning false
/// stops after the current epoch; the training loop itself never stops
/// early.
using EpochHook = std::function<bool(int, double, double)>;

struct TrainResult {
  std::string checkpoint_path;  // final checkpoint
  std::string metrics_path;     // CSV log
  int epochs_run = 0;           // last completed epoch (absolute)
  double first_epoch_rmse = 0.0;
  double final_train_rmse = 0.0;
};

/// Shuffled-batch training per the fixed recipe: seeded reshuffle every
/// epoch, batches of batch_size (final partial batch trained), MSE+L2
/// gradient, one Adam step per batch. Deterministic for fixed seeds and
/// thread count; resuming from a checkpoint continues the exact
/// uninterrupted trajectory.
TrainResult train(const TrainConfig& config, const EpochHook& hook = {});

enum class SplitSel { TRAIN, TEST };

/// Per-image RMSE plus the 100-bin error report over one split. Inputs
/// are normalized with the checkpoint's statistics.
EvalReport evaluate(const Checkpoint& ckpt, const DatasetManifest& manifest,
                    SplitSel split);

/// CSV serializations of an EvalReport (docs/formats.md).
void write_eval_csv(const EvalReport& report, const std::string& images_path,
                    const std::string& bins_path);

struct PredictResult {
  DEMImage dem;        // 140x140, meters
  double latency_ms;   // median forward-pass wall time over `repeats`
};

/// Downsamples the whole tile to the network input, normalizes with the
/// checkpoint's statistics, and runs inference. Latency covers the
/// forward pass only, input preparation excluded.
PredictResult predict(const Checkpoint& ckpt, const SLCImage& slc,
                      int repeats = 1);

}  // namespace demnet

#endif  // DEMNET_TRAINER_HPP

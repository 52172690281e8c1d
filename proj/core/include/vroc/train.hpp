#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vroc/dataset.hpp"
#include "vroc/fusion.hpp"
#include "vroc/model.hpp"
#include "vroc/rng.hpp"

namespace vroc {

struct TrainConfig {
  double lr_max = 1e-4;
  double weight_decay = 1e-4;
  int warmup_steps = 5000;
  int total_steps = 0;  // 0 -> max_epochs * steps-per-epoch, fixed at train start
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 16;
  int patience = 30;  // epochs without val improvement before stopping
  std::uint64_t seed = 1;
  bool events_enabled = false;  // Model B when true, Model A when false

  // Scale knobs the recipe leaves open; defaults suit desk-sized runs.
  int max_epochs = 200;
  int samples_per_epoch = 0;  // 0 -> one sample per train round per epoch
  int fusion_d_e = 128;       // event embedding width
  int val_stride = 2;         // validate every val_stride-th second
  int val_rounds_cap = 0;     // 0 -> score the whole val split
  double diverged_loss = 50.0;

  void validate() const;  // throws ConfigError
};

// Linear warmup to lr_max over warmup_steps, then cosine decay to 0 at
// total_steps. Continuous at the joint; peak value is exactly lr_max.
double lr_at(int step, const TrainConfig& cfg);

// First/second moment buffers aligned with a fixed parameter list.
// `step` counts completed optimizer steps.
struct AdamWState {
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamWState init(std::span<const ParamRef> params);
};

// One AdamW update. Gradients are read from each parameter's grad
// buffer, scaled by grad_scale (pass 1/batch when per-sample backward
// passes summed into the buffers), and cleared afterwards. The whole
// step is rejected -- no state is touched -- if any gradient is
// non-finite. Decay is decoupled (w *= 1 - lr*wd before the adaptive
// update) and skipped for params flagged decay=false and for the
// leading skip_decay_rows rows of embedding tables. The learning rate
// for the update is lr_at(completed steps so far).
void adamw_step(std::span<ParamRef> params, AdamWState& st, const TrainConfig& cfg,
                double grad_scale = 1.0);

// Higher-is-better early stopping on a per-epoch metric. observe()
// returns true once `patience` consecutive epochs failed to strictly
// improve on the best value.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);

  bool observe(double value);
  int epoch() const { return epoch_; }
  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_value_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  double best_value_;
};

// ---------------------------------------------------------------------------
// Checkpoints

struct TensorBlob {
  std::string name;
  Shape shape;
  std::vector<float> data;  // row-major, stored little-endian on disk
};

// On-disk layout (all integers little-endian): magic "VROC1", fnv1a-64
// hash of the config JSON, length-prefixed config JSON, parameter blobs,
// optimizer-moment blobs, step counter, RNG state. Values are float32;
// save -> load -> save is byte-identical.
struct Checkpoint {
  std::string config_json;
  std::vector<TensorBlob> params;
  std::vector<TensorBlob> moments;
  std::uint64_t step = 0;
  Rng::State rng{};
};

std::uint64_t fnv1a64(std::span<const char> bytes);

void save_checkpoint(const std::string& path, const Checkpoint& c);  // IoError
// Throws IoError on unreadable files, CheckpointError on a bad magic,
// a config whose hash does not match the stored one, or truncation.
Checkpoint load_checkpoint(const std::string& path);

// Snapshot the live training state (weights in `params` order, moments
// when `st` is given).
Checkpoint make_checkpoint(const std::string& config_json, std::span<const ParamRef> params,
                           const AdamWState* st, const Rng::State& rng, std::uint64_t step);
// Copy checkpoint tensors back into live parameters by name; every live
// param must be present with the same shape (CheckpointError otherwise).
// Blobs without a matching live param are ignored, so a Model B
// checkpoint restores into a visual-only parameter list.
void restore_params(const Checkpoint& c, std::span<ParamRef> params);
void restore_moments(const Checkpoint& c, std::span<ParamRef> params, AdamWState& st);

// ---------------------------------------------------------------------------
// Training loop

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;  // value used by the epoch's last optimizer step
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  bool stopped_early = false;
};

std::string history_csv(const std::vector<EpochStats>& history);

// Optimizes a fresh desk/paper model (plus event-fusion weights when
// cfg.events_enabled) on the dataset's train split, scoring the val
// split each epoch with the same per-second accuracy the evaluator
// reports. Returns the best epoch's checkpoint. Throws EmptySplitError
// when either split is empty and DivergedLossError when a batch loss
// stops being finite or exceeds cfg.diverged_loss.
TrainResult train(const ClipDataset& ds, const ModelConfig& mcfg, const TrainConfig& cfg,
                  const std::string& config_json);

}  // namespace vroc

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vroc/fusion.hpp"
#include "vroc/model.hpp"
#include "vroc/sim.hpp"

namespace vroc {

// Label convention shared by training, evaluation and the CLI:
// class 0 = attacker win, class 1 = defender win.
inline int outcome_class(Team t) { return t == Team::attacker ? 0 : 1; }

// Argmax over a [2] logit vector, with the tie rule every consumer
// shares: exactly equal logits predict a defender win.
inline int predicted_class(const Tensor& logits) {
  return logits.at({0}) > logits.at({1}) ? 0 : 1;
}

// Which 8 frames feed the model for a prediction at integer second
// t >= 1 (fps 8): uniform-history strides the whole prefix with indices
// (i+1)*t - 1; recent-window takes the 8 frames just before t.
enum class ClipMode { uniform_history, recent_window };

ClipMode clip_mode_from_str(const std::string& s);  // throws ConfigError
const char* clip_mode_str(ClipMode m);

std::vector<int> clip_frame_indices(ClipMode mode, int t, int frames_per_clip = 8);

// Loads the frames named by `indices` from any frame source and halves
// them to the model's native resolution.
Clip clip_from_frames(const FrameSource& src, std::span<const int> indices);

// Fused per-frame rows [T, d_model] for one clip: rasterize the events
// known at time t over [0, t], pool into 1-second chunks and attach at
// the clip's global frame indices. Chunks without events contribute
// exact zeros, so an empty `events` reproduces the visual-only forward
// bit-for-bit.
Tensor fused_for_clip(Tape& tape, const FusionWeights& w, const EventVocab& vocab,
                      std::span<const EventLabel> events, int t,
                      std::span<const int> frame_indices, double fps = 8.0);

// What training and evaluation need from any dataset: per-round labels
// and durations, model-ready clips for every prediction second, and the
// causal event stream. Implementations: RoundDataset (re-simulates from
// manifest seeds) and the CLI's extracted-pixels loader.
class ClipDataset {
 public:
  virtual ~ClipDataset() = default;

  virtual int n_rounds() const = 0;
  virtual std::vector<int> split_indices(const std::string& split) const = 0;
  // Largest valid prediction second for the round, floor(duration_s).
  virtual int max_t(int round_index) const = 0;
  virtual int label(int round_index) const = 0;
  // 8 frames at the model resolution for a prediction at second
  // t in [1, max_t].
  virtual Clip clip(int round_index, int t) const = 0;
  // Events with timestamp <= t, in time order.
  virtual std::vector<EventLabel> events_until(int round_index, double t) const = 0;
  virtual const EventVocab& vocab() const = 0;
  virtual ClipMode mode() const = 0;
  virtual double fps() const = 0;
};

struct DatasetConfig {
  std::string dir;  // as written by generate_dataset
  ClipMode mode = ClipMode::uniform_history;
  int cache_rounds = 256;
};

// Read-side view of a generated dataset. Frames are never read from
// disk: every round is re-simulated from its manifest seed (and cached),
// which is cheaper than decoding stored frames and keeps the loader
// usable for frame-less bundles. clip() and events_until() are safe to
// call from the worker pool; truth()'s reference stays valid only until
// cache_rounds further rounds have been touched, so treat it as
// single-threaded.
class RoundDataset : public ClipDataset {
 public:
  explicit RoundDataset(DatasetConfig cfg);

  const std::vector<RoundRecord>& rounds() const { return rounds_; }
  const SimConfig& sim() const { return sim_; }

  int n_rounds() const override { return static_cast<int>(rounds_.size()); }
  const EventVocab& vocab() const override { return vocab_; }
  ClipMode mode() const override { return cfg_.mode; }
  double fps() const override { return sim_.fps; }

  std::vector<int> split_indices(const std::string& split) const override;
  int max_t(int round_index) const override;
  int label(int round_index) const override;

  const GroundTruth& truth(int round_index) const;

  Clip clip(int round_index, int t) const override;
  std::vector<EventLabel> events_until(int round_index, double t) const override;

 private:
  struct CacheEntry {
    std::uint64_t tick = 0;
    std::shared_ptr<const GroundTruth> truth;
  };

  const RoundRecord& record_at(int round_index) const;
  std::shared_ptr<const GroundTruth> truth_ptr(int round_index) const;

  DatasetConfig cfg_;
  SimConfig sim_;
  EventVocab vocab_;
  std::vector<RoundRecord> rounds_;
  mutable std::mutex mu_;
  mutable std::unordered_map<int, CacheEntry> cache_;
  mutable std::uint64_t tick_ = 0;
};

}  // namespace vroc

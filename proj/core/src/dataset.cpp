#include "vroc/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vroc/errors.hpp"

namespace vroc {

namespace fs = std::filesystem;

ClipMode clip_mode_from_str(const std::string& s) {
  if (s == "uniform-history") return ClipMode::uniform_history;
  if (s == "recent-window") return ClipMode::recent_window;
  throw ConfigError("unknown clip mode '" + s + "' (uniform-history | recent-window)");
}

const char* clip_mode_str(ClipMode m) {
  return m == ClipMode::uniform_history ? "uniform-history" : "recent-window";
}

std::vector<int> clip_frame_indices(ClipMode mode, int t, int frames_per_clip) {
  if (t < 1) throw IndexOutOfRangeError("clip_frame_indices: t must be >= 1");
  std::vector<int> out(static_cast<std::size_t>(frames_per_clip));
  for (int i = 0; i < frames_per_clip; ++i) {
    if (mode == ClipMode::uniform_history)
      out[static_cast<std::size_t>(i)] = (i + 1) * t - 1;
    else
      out[static_cast<std::size_t>(i)] = frames_per_clip * t - frames_per_clip + i;
  }
  return out;
}

Clip clip_from_frames(const FrameSource& src, std::span<const int> indices) {
  Clip clip;
  clip.reserve(indices.size());
  for (int f : indices) {
    if (f < 0 || f >= src.count())
      throw IndexOutOfRangeError("clip_from_frames: frame " + std::to_string(f) +
                                 " outside stream of " + std::to_string(src.count()));
    clip.push_back(downsample_box2(src.frame(f)));
  }
  return clip;
}

Tensor fused_for_clip(Tape& tape, const FusionWeights& w, const EventVocab& vocab,
                      std::span<const EventLabel> events, int t,
                      std::span<const int> frame_indices, double fps) {
  const Tensor grid = rasterize(tape, w, vocab, events, static_cast<double>(t), fps);
  const Tensor pooled = pool_chunks(tape, grid);
  return project_and_attach(tape, w, pooled, frame_indices);
}

RoundDataset::RoundDataset(DatasetConfig cfg) : cfg_(std::move(cfg)) {
  const fs::path dir(cfg_.dir);
  std::ifstream sc(dir / "sim.json");
  if (!sc) throw IoError("dataset: cannot open " + (dir / "sim.json").string());
  std::ostringstream ss;
  ss << sc.rdbuf();
  sim_ = sim_config_from_json(ss.str());
  rounds_ = read_rounds_jsonl((dir / "rounds.jsonl").string());
  vocab_.agents = sim_.roster.agents;
  for (const AreaDef& a : sim_.map.areas) vocab_.areas.push_back(a.name);
  if (cfg_.cache_rounds < 1) cfg_.cache_rounds = 1;
}

const RoundRecord& RoundDataset::record_at(int round_index) const {
  if (round_index < 0 || round_index >= static_cast<int>(rounds_.size()))
    throw IndexOutOfRangeError("dataset: round " + std::to_string(round_index) + " outside " +
                               std::to_string(rounds_.size()) + " rounds");
  return rounds_[static_cast<std::size_t>(round_index)];
}

std::vector<int> RoundDataset::split_indices(const std::string& split) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < rounds_.size(); ++i)
    if (rounds_[i].split == split) out.push_back(static_cast<int>(i));
  return out;
}

int RoundDataset::max_t(int round_index) const {
  return static_cast<int>(record_at(round_index).duration_s);
}

int RoundDataset::label(int round_index) const {
  return outcome_class(record_at(round_index).outcome);
}

std::shared_ptr<const GroundTruth> RoundDataset::truth_ptr(int round_index) const {
  record_at(round_index);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(round_index);
  if (it == cache_.end()) {
    if (static_cast<int>(cache_.size()) >= cfg_.cache_rounds) {
      auto oldest = cache_.begin();
      for (auto c = cache_.begin(); c != cache_.end(); ++c)
        if (c->second.tick < oldest->second.tick) oldest = c;
      cache_.erase(oldest);
    }
    CacheEntry entry;
    entry.truth = std::make_shared<const GroundTruth>(
        simulate_round(sim_, rounds_[static_cast<std::size_t>(round_index)].seed));
    it = cache_.emplace(round_index, std::move(entry)).first;
  }
  it->second.tick = ++tick_;
  return it->second.truth;
}

const GroundTruth& RoundDataset::truth(int round_index) const { return *truth_ptr(round_index); }

Clip RoundDataset::clip(int round_index, int t) const {
  const std::shared_ptr<const GroundTruth> gt = truth_ptr(round_index);
  if (t < 1 || t > max_t(round_index))
    throw IndexOutOfRangeError("dataset: prediction second " + std::to_string(t) +
                               " outside [1, " + std::to_string(max_t(round_index)) + "]");
  Clip clip;
  for (int f : clip_frame_indices(cfg_.mode, t)) {
    const FrameState& state = gt->frames[static_cast<std::size_t>(f)];
    clip.push_back(downsample_box2(render_frame(state, sim_.map, sim_.roster)));
  }
  return clip;
}

std::vector<EventLabel> RoundDataset::events_until(int round_index, double t) const {
  const std::shared_ptr<const GroundTruth> gt = truth_ptr(round_index);
  std::vector<EventLabel> out;
  for (const EventLabel& e : gt->events) {
    if (e.t > t) break;  // events are time-sorted
    out.push_back(e);
  }
  return out;
}

}  // namespace vroc

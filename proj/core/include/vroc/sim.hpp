#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vroc/image.hpp"
#include "vroc/rng.hpp"
#include "vroc/vision.hpp"

namespace vroc {

// Everything the round simulator needs. Dynamics constants are artifact
// choices tuned so that (a) outcomes are roughly balanced, (b) tactical
// events carry real predictive signal, and (c) rendered rounds survive
// the extraction pipeline loss-free.
struct SimConfig {
  std::uint64_t seed = 1;
  MapSpec map = MapSpec::arena6();
  Roster roster = Roster::demo();

  double round_cap_s = 100.0;
  double fps = 8.0;

  double p0 = 0.5;              // duel base win probability
  double numbers_bonus = 0.05;  // added for the side with more agents alive
  double skill_bonus = 0.28;    // added while a skill backs the duelist
  double skill_window_s = 4.0;
  double skill_cooldown_s = 12.0;
  double skill_use_p = 0.012;  // per frame, off cooldown
  double duel_p = 0.035;       // per frame per colocated opposing pair

  double speed_min = 1.0;  // px/frame (>= the footstep threshold)
  double speed_max = 1.6;
  double idle_max_s = 3.0;
  double min_separation = 12.0;  // px between any two living agents' icons

  double plant_p = 0.006;  // per frame per attacker standing on a site
  double plant_duration_s = 1.0;
  double detonation_s = 24.0;
  double defuse_radius = 5.0;   // defender this close to the spike channels the defuse
  double guard_radius = 16.0;   // an attacker this close to the spike stalls it
  double defuse_duration_s = 4.0;
  double post_plant_focus = 0.85;  // waypoint bias toward the spike once planted

  double attacker_site_bias = 0.5;  // waypoint bias toward bomb sites
  double defender_site_bias = 0.4;
  // Per-round pacing factor, drawn uniformly from [tempo_min, 1] and
  // applied to duel, plant and site-bias rates; low draws give slow,
  // drawn-out rounds so durations cover the whole clock.
  double tempo_min = 0.2;

  void validate() const;  // throws ConfigError
};

// One rendered frame's worth of world state; rendering is a pure
// function of this.
struct FrameState {
  std::array<TrackPoint, 10> agents;             // present == alive
  std::vector<std::pair<int, int>> flashes;      // skill effect centers
  std::optional<std::pair<int, int>> spike;      // planted spike center
  std::optional<int> timer_seconds;              // absent on post-round frames
  std::optional<Team> banner;                    // outcome banner, post-round
};

struct GroundTruth {
  Team outcome = Team::defender;
  double duration_s = 0.0;
  int in_round_frames = 0;         // frames [0, in_round_frames) are live
  std::vector<FrameState> frames;  // plus a banner tail (banner and spike only)
  std::vector<EventLabel> events;
};

// Deterministic round simulation: identical (cfg, seed) pairs produce
// identical GroundTruth.
GroundTruth simulate_round(const SimConfig& cfg, std::uint64_t seed);

// Pure renderer for one frame.
Image render_frame(const FrameState& state, const MapSpec& map, const Roster& roster);

// Adds clamped Gaussian pixel noise in place.
void add_pixel_noise(Image& img, double sigma, Rng& rng);

// ---------------------------------------------------------------------------
// Dataset generation

enum class FramesMode { png, raw, none };

struct GenerateOptions {
  FramesMode frames = FramesMode::png;
  bool include_positions = true;  // per-frame positions in truth.jsonl
  double noise_sigma = 0.0;       // additive pixel noise on written frames
  // Exact split sizes (train, val, test); when unset, an 80/10/10
  // hash-rank split is used.
  std::optional<std::array<int, 3>> split_quota;
};

struct RoundRecord {
  std::string round_id;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  int n_frames = 0;      // live frames
  int total_frames = 0;  // including banner tail
  Team outcome = Team::defender;
  std::string map_id;
  std::string split;  // train | val | test
};

// Simulates `n_rounds` rounds, writes rounds.jsonl, events.jsonl,
// truth.jsonl and (optionally) frames, returns the manifest.
std::vector<RoundRecord> generate_dataset(const SimConfig& cfg, int n_rounds,
                                          const std::string& out_dir,
                                          const GenerateOptions& opt = {});

void write_rounds_jsonl(const std::string& path, const std::vector<RoundRecord>& rounds);
std::vector<RoundRecord> read_rounds_jsonl(const std::string& path);

// SimConfig round trip, stored alongside every generated dataset so
// loaders can re-simulate rounds instead of reading stored frames.
std::string sim_config_to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const std::string& text);

}  // namespace vroc

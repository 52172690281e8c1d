#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vroc/model.hpp"
#include "vroc/tensor.hpp"

namespace vroc {

enum class Team : int { attacker = 0, defender = 1 };

inline const char* team_str(Team t) { return t == Team::attacker ? "ATK" : "DEF"; }
Team team_from_str(const std::string& s);  // throws UnknownVocabError

// One tactical event: a moment where a team gains or loses information.
struct EventLabel {
  double t = 0.0;  // seconds from round start
  Team team = Team::attacker;
  std::string agent;
  std::string area;
  std::string kind;  // skill_use | footstep_heard | spike_plant
};

inline constexpr const char* kEventKinds[] = {"skill_use", "footstep_heard", "spike_plant"};

// Fixed per-match vocabularies. Ids are 1-based; row 0 of every
// embedding table is an untouched padding row.
struct EventVocab {
  std::vector<std::string> agents;  // 10 per match
  std::vector<std::string> areas;

  int team_id(Team t) const { return 1 + static_cast<int>(t); }
  int agent_id(const std::string& name) const;  // throws UnknownVocabError
  int area_id(const std::string& name) const;   // throws UnknownVocabError
  static int kind_id(const std::string& kind);  // throws UnknownVocabError
};

struct FusionWeights {
  int d_e = 128;
  int d_model = 0;
  Tensor team_table;   // [3, d_e]
  Tensor agent_table;  // [1+n_agents, d_e]
  Tensor area_table;   // [1+n_areas, d_e]
  Tensor kind_table;   // [4, d_e]
  Tensor proj;         // [d_e, d_model]
  Tensor proj_bias;    // [d_model]

  static FusionWeights init(int d_e, int d_model, int n_agents, int n_areas,
                            std::uint64_t seed);
  std::vector<ParamRef> params();  // embedding tables skip decay on row 0
  void set_requires_grad(bool rg);
};

// Sums the four embeddings of every event into its frame row
// f = round(t*fps) clamped to [0, F). F = round(duration_s*fps), at
// least 1. Frames without events stay exactly zero.
Tensor rasterize(Tape& tape, const FusionWeights& w, const EventVocab& vocab,
                 std::span<const EventLabel> events, double duration_s, double fps = 8.0);

// Mean over consecutive 8-frame blocks; the final partial block is
// averaged over its actual length.
Tensor pool_chunks(Tape& tape, const Tensor& grid);

// fused[i] = proj(pooled[floor(frame_i/8)]) + bias for each sampled
// frame, except that rows whose pooled chunk is exactly zero (no events
// in the chunk) are forced to exactly zero — including the bias — so an
// empty event stream reproduces the no-events forward bit-for-bit.
Tensor project_and_attach(Tape& tape, const FusionWeights& w, const Tensor& pooled,
                          std::span<const int> sampled_frames);

// Events JSONL: {"t": float, "team": "ATK"|"DEF", "agent": str,
// "area": str, "kind": str} per line, sorted by t. The round_id column
// groups events per round within one shared file.
struct RoundEvents {
  std::string round_id;
  std::vector<EventLabel> events;
};
void write_events_jsonl(const std::string& path, std::span<const RoundEvents> rounds);
std::vector<RoundEvents> read_events_jsonl(const std::string& path);

}  // namespace vroc

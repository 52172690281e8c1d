#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vroc/fusion.hpp"
#include "vroc/glyphs.hpp"
#include "vroc/image.hpp"

namespace vroc {

// Grayscale plane in [0,1] used by all matching code.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  double at(int x, int y) const {
    return v[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
             static_cast<std::size_t>(x)];
  }
  static GrayImage from(const Image& img);
};

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;
  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool contains(int px, int py) const {
    return px >= x && px < right() && py >= y && py < bottom();
  }
  bool intersects(const Rect& o) const {
    return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
  }
};

struct AreaDef {
  std::string name;
  Rect rect;
};

// Fixed match roster: slots 0-4 attack, 5-9 defend. Icon glyph index ==
// roster slot.
struct Roster {
  std::vector<std::string> agents;  // size 10

  Team team_of(int slot) const { return slot < 5 ? Team::attacker : Team::defender; }
  int slot_of(const std::string& name) const;  // throws UnknownVocabError
  static Roster demo();
};

// Static map geometry plus the HUD anchor positions the extractor needs.
struct MapSpec {
  std::string id = "arena6";
  int width = 128;
  int height = 128;
  Rect playfield{0, 12, 128, 116};
  std::vector<AreaDef> areas;                     // tile the playfield exactly
  std::array<std::pair<int, int>, 4> timer_anchors{};  // cells: M : S S (6x10 each)
  std::pair<int, int> banner_anchor{0, 0};             // 40x10 banner top-left
  double audible_radius = 24.0;

  static MapSpec arena6();
  void validate() const;  // throws ConfigError unless areas tile the playfield

  int area_index_at(double x, double y) const;  // -1 when outside all areas
  // Containing area, or nearest area when unmapped (sets *unmapped).
  const std::string& area_name_at(double x, double y, bool* unmapped = nullptr) const;
};

// ---------------------------------------------------------------------------
// Template matching

struct NccResult {
  int x = 0, y = 0;   // best top-left offset
  double score = 0.0;  // in [-1, 1]; 0 when degenerate
  bool degenerate = false;
};

// Best normalized cross-correlation of `tmpl` over every placement that
// fits inside `search` (image coordinates). Zero-variance windows or
// templates give score 0 and set `degenerate`.
NccResult ncc_match(const GrayImage& image, const GrayImage& tmpl, const Rect& search);

struct Detection {
  int x = 0, y = 0;  // center pixel
  double score = 0.0;
  int template_id = 0;
};

// All placements of any template in the set scoring >= threshold, after
// greedy non-maximum suppression with radius = template size. Windows
// whose stddev is below min_window_stddev are skipped (flat background).
std::vector<Detection> detect_templates(const GrayImage& frame, std::span<const GrayImage> tmpls,
                                        const Rect& search, double threshold,
                                        double min_window_stddev);

// ---------------------------------------------------------------------------
// Frame extraction

struct VisionConfig {
  double ncc_threshold = 0.8;
  double min_window_stddev = 0.05;
  double footstep_v_min = 1.0;     // px/frame
  double footstep_debounce_s = 1.0;
};

// Grayscale templates rendered with the exact painter the simulator
// uses, so clean frames correlate at 1.0.
struct VisionTemplates {
  std::vector<GrayImage> agents;  // 10, roster order
  GrayImage skill;
  GrayImage spike;
  GrayImage banner_atk;
  GrayImage banner_def;
  std::vector<GrayImage> digits;  // 10
  GrayImage colon;

  static VisionTemplates build();
};

// Remaining seconds read from the four timer cells, or nullopt when any
// cell fails its match ("no timer" is a signal, not an error).
std::optional<int> read_timer(const GrayImage& frame, const MapSpec& map,
                              const VisionTemplates& t, double threshold = 0.8);

// Winning team if an outcome banner is on screen.
std::optional<Team> read_banner(const GrayImage& frame, const MapSpec& map,
                                const VisionTemplates& t, double threshold = 0.8);

// Agent icons on the playfield; template_id is the roster slot.
std::vector<Detection> detect_icons(const GrayImage& frame, const MapSpec& map,
                                    const VisionTemplates& t, const VisionConfig& cfg);

struct FrameExtract {
  std::optional<int> timer_seconds;
  std::optional<Team> banner;
  std::vector<Detection> agents;
  std::vector<Detection> skills;
  std::vector<Detection> spikes;
};
FrameExtract extract_frame(const Image& frame, const MapSpec& map, const VisionTemplates& t,
                           const VisionConfig& cfg);

// ---------------------------------------------------------------------------
// Event inference

// One agent's observed position in one frame.
struct TrackPoint {
  bool present = false;
  double x = 0.0, y = 0.0;
};
using FrameTracks = std::array<TrackPoint, 10>;

// The footstep rule shared by the simulator's ground truth and the
// extractor: an agent that moved at least v_min px/frame (measured from
// its previous sighting) while any living opponent is within
// audible_radius emits footstep_heard, at most once per debounce
// window. Deterministic: frames in order, agents in slot order.
std::vector<EventLabel> footstep_events(std::span<const FrameTracks> tracks, const Roster& roster,
                                        const MapSpec& map, double fps, double v_min,
                                        double debounce_s);

// Full event inference over one round's per-frame extractions: the
// footstep rule over tracked icons, plus rising-edge skill and spike
// detections attributed to the nearest icon. `warnings` (optional)
// collects notes such as nearest-area fallbacks.
std::vector<EventLabel> infer_events(std::span<const FrameExtract> frames, const Roster& roster,
                                     const MapSpec& map, double fps, const VisionConfig& cfg,
                                     std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Round segmentation

struct TimerObs {
  std::optional<int> seconds;
  std::optional<Team> banner;
};

struct RoundBoundary {
  int start_frame = 0;
  int end_frame = 0;  // frame where the round ended (banner / zero / reset)
  Team winner = Team::defender;
  std::string map_id;
};

// Median-filters the readings (window 5) and walks an
// idle -> in-round -> ended state machine. Rounds interrupted by more
// than 2 s without a timer are dropped.
std::vector<RoundBoundary> segment_rounds(std::span<const TimerObs> obs, double fps,
                                          const std::string& map_id);

}  // namespace vroc

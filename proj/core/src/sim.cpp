#include "vroc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "nlohmann/json.hpp"
#include "vroc/errors.hpp"
#include "vroc/glyphs.hpp"

namespace vroc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct AgentState {
  bool alive = true;
  double x = 0.0, y = 0.0;
  double wx = 0.0, wy = 0.0;  // waypoint
  double speed = 1.5;
  int idle_frames = 0;
  int skill_ready_frame = 0;
  int skill_until_frame = -1;  // buff active while frame < this
  int plant_frames_left = 0;   // > 0 while planting (agent frozen)
};

int qround(double v) { return static_cast<int>(std::lround(v)); }

double dist2(double ax, double ay, double bx, double by) {
  const double dx = ax - bx, dy = ay - by;
  return dx * dx + dy * dy;
}

// Icon-safe playfield bounds (9x9 icons, HUD strip excluded).
constexpr int kMinX = 5, kMaxX = 122, kMinY = 17, kMaxY = 122;

bool is_site(const MapSpec& map, int area_idx) {
  if (area_idx < 0) return false;
  const std::string& n = map.areas[static_cast<std::size_t>(area_idx)].name;
  return n.rfind("site", 0) == 0;
}

// Areas sharing a boundary segment.
std::vector<std::vector<int>> build_adjacency(const MapSpec& map) {
  const int n = static_cast<int>(map.areas.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const Rect& a = map.areas[static_cast<std::size_t>(i)].rect;
      const Rect& b = map.areas[static_cast<std::size_t>(j)].rect;
      const bool touch_x = a.right() == b.x || b.right() == a.x;
      const bool touch_y = a.bottom() == b.y || b.bottom() == a.y;
      const int ox = std::min(a.right(), b.right()) - std::max(a.x, b.x);
      const int oy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
      if ((touch_x && oy > 0) || (touch_y && ox > 0))
        adj[static_cast<std::size_t>(i)].push_back(j);
    }
  return adj;
}

std::pair<double, double> random_point_in(const Rect& r, Rng& rng) {
  const double x = rng.uniform(std::max(r.x + 2, kMinX), std::min(r.right() - 3, kMaxX));
  const double y = rng.uniform(std::max(r.y + 2, kMinY), std::min(r.bottom() - 3, kMaxY));
  return {x, y};
}

// First offset direction whose 11x11 effect rect stays on the canvas,
// clear of the HUD and of every living icon; nullopt when crowded out.
std::optional<std::pair<int, int>> place_effect(int cx, int cy,
                                               const std::array<AgentState, 10>& agents,
                                               const std::optional<std::pair<int, int>>& spike) {
  static constexpr int kOffsets[4][2] = {{0, -10}, {10, 0}, {0, 10}, {-10, 0}};
  for (const auto& off : kOffsets) {
    const int ex = cx + off[0], ey = cy + off[1];
    if (ex < kMinX + 1 || ex > kMaxX - 1 || ey < kMinY || ey > kMaxY - 1) continue;
    bool clear = true;
    for (const AgentState& a : agents) {
      if (!a.alive) continue;
      if (std::abs(qround(a.x) - ex) <= 9 && std::abs(qround(a.y) - ey) <= 9) {
        clear = false;
        break;
      }
    }
    if (clear && spike && std::abs(spike->first - ex) <= 9 && std::abs(spike->second - ey) <= 9)
      clear = false;
    if (clear) return std::make_pair(ex, ey);
  }
  return std::nullopt;
}

std::string split_name(int rank, int n, const std::optional<std::array<int, 3>>& quota) {
  int n_train, n_val;
  if (quota) {
    n_train = (*quota)[0];
    n_val = (*quota)[1];
  } else {
    n_train = n * 8 / 10;
    n_val = n / 10;
  }
  if (rank < n_train) return "train";
  if (rank < n_train + n_val) return "val";
  return "test";
}

}  // namespace

void SimConfig::validate() const {
  if (p0 <= 0.0 || p0 >= 1.0) throw ConfigError("sim: p0 must lie in (0,1)");
  if (p0 + numbers_bonus + skill_bonus > 1.0)
    throw ConfigError("sim: p0 plus maximum bonus exceeds 1");
  if (fps <= 0 || round_cap_s <= 0) throw ConfigError("sim: fps and round cap must be positive");
  if (speed_min <= 0 || speed_max < speed_min) throw ConfigError("sim: bad speed range");
  if (defuse_radius <= 0 || defuse_duration_s <= 0 || guard_radius <= 0)
    throw ConfigError("sim: defuse parameters must be positive");
  if (post_plant_focus < 0.0 || post_plant_focus > 1.0)
    throw ConfigError("sim: post_plant_focus must lie in [0,1]");
  if (tempo_min <= 0.0 || tempo_min > 1.0)
    throw ConfigError("sim: tempo_min must lie in (0,1]");
  if (roster.agents.size() != 10) throw ConfigError("sim: roster must have 10 agents");
  map.validate();
}

GroundTruth simulate_round(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const MapSpec& map = cfg.map;
  const auto adjacency = build_adjacency(map);
  const int cap_frames = static_cast<int>(std::lround(cfg.round_cap_s * cfg.fps));

  int spawn_atk = -1, spawn_def = -1;
  std::vector<int> site_areas;
  for (std::size_t i = 0; i < map.areas.size(); ++i) {
    if (map.areas[i].name == "atk_spawn") spawn_atk = static_cast<int>(i);
    if (map.areas[i].name == "def_spawn") spawn_def = static_cast<int>(i);
    if (is_site(map, static_cast<int>(i))) site_areas.push_back(static_cast<int>(i));
  }
  if (spawn_atk < 0 || spawn_def < 0 || site_areas.empty())
    throw ConfigError("sim: map needs atk_spawn, def_spawn and at least one site");

  std::array<AgentState, 10> agents;
  int defuser = -1;
  int defuse_frames_left = 0;
  bool defused = false;
  for (int a = 0; a < 10; ++a) {
    AgentState& st = agents[static_cast<std::size_t>(a)];
    const Rect& spawn = map.areas[static_cast<std::size_t>(a < 5 ? spawn_atk : spawn_def)].rect;
    // Deterministic, separated spawn slots with a small jitter.
    const int lane = a % 5;
    st.x = spawn.x + (lane + 1) * spawn.w / 6.0 + rng.uniform(-2.0, 2.0);
    st.y = std::clamp(spawn.y + spawn.h / 2.0 + rng.uniform(-3.0, 3.0),
                      static_cast<double>(kMinY), static_cast<double>(kMaxY));
    st.wx = st.x;
    st.wy = st.y;
    st.speed = rng.uniform(cfg.speed_min, cfg.speed_max);
    st.idle_frames = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.fps) + 1));
  }

  const double tempo = rng.uniform(cfg.tempo_min, 1.0);

  GroundTruth gt;
  std::vector<FrameTracks> tracks;
  std::optional<std::pair<int, int>> spike;
  int planter = -1;
  int detonation_frame = -1;
  bool planted = false;
  std::optional<Team> outcome;
  int end_frame = -1;

  struct Flash {
    int x, y, frames_left;
  };
  std::vector<Flash> flashes;

  const int skill_window_f = static_cast<int>(std::lround(cfg.skill_window_s * cfg.fps));
  const int skill_cooldown_f = static_cast<int>(std::lround(cfg.skill_cooldown_s * cfg.fps));
  const int plant_f = static_cast<int>(std::lround(cfg.plant_duration_s * cfg.fps));
  const int detonation_f = static_cast<int>(std::lround(cfg.detonation_s * cfg.fps));
  const int defuse_f = static_cast<int>(std::lround(cfg.defuse_duration_s * cfg.fps));

  for (int f = 0; f < cap_frames && !outcome; ++f) {
    // --- movement ---
    for (int a = 0; a < 10; ++a) {
      AgentState& st = agents[static_cast<std::size_t>(a)];
      if (!st.alive || st.plant_frames_left > 0 || a == defuser) continue;
      if (st.idle_frames > 0) {
        --st.idle_frames;
        continue;
      }
      const double d = std::sqrt(dist2(st.x, st.y, st.wx, st.wy));
      if (d <= st.speed) {
        st.x = st.wx;
        st.y = st.wy;
        // Arrived: dwell, then pick the next waypoint.
        st.idle_frames =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.idle_max_s * cfg.fps) + 1));
        st.speed = rng.uniform(cfg.speed_min, cfg.speed_max);
        if (planted && spike && rng.bernoulli(cfg.post_plant_focus)) {
          // Converge on the spike: defenders go for the defuse, attackers
          // set up around it.
          const double spread = a < 5 ? 14.0 : 2.0;
          st.wx = std::clamp(spike->first + rng.uniform(-spread, spread),
                             static_cast<double>(kMinX), static_cast<double>(kMaxX));
          st.wy = std::clamp(spike->second + rng.uniform(-spread, spread),
                             static_cast<double>(kMinY), static_cast<double>(kMaxY));
        } else {
          const int here = map.area_index_at(st.x, st.y);
          int target;
          const double bias = tempo * (a < 5 ? cfg.attacker_site_bias : cfg.defender_site_bias);
          if (rng.bernoulli(bias)) {
            target = static_cast<int>(site_areas[rng.below(site_areas.size())]);
          } else if (here >= 0 && !adjacency[static_cast<std::size_t>(here)].empty()) {
            const auto& nb = adjacency[static_cast<std::size_t>(here)];
            target = nb[rng.below(nb.size())];
          } else {
            target = static_cast<int>(rng.below(map.areas.size()));
          }
          const auto [px, py] =
              random_point_in(map.areas[static_cast<std::size_t>(target)].rect, rng);
          st.wx = px;
          st.wy = py;
        }
      } else {
        st.x += st.speed * (st.wx - st.x) / d;
        st.y += st.speed * (st.wy - st.y) / d;
      }
    }

    // --- separation (a few relaxation passes) ---
    for (int pass = 0; pass < 4; ++pass) {
      for (int a = 0; a < 10; ++a) {
        if (!agents[static_cast<std::size_t>(a)].alive) continue;
        for (int b = a + 1; b < 10; ++b) {
          if (!agents[static_cast<std::size_t>(b)].alive) continue;
          AgentState& pa = agents[static_cast<std::size_t>(a)];
          AgentState& pb = agents[static_cast<std::size_t>(b)];
          double dx = pb.x - pa.x, dy = pb.y - pa.y;
          double d = std::sqrt(dx * dx + dy * dy);
          if (d >= cfg.min_separation) continue;
          if (d < 1e-9) {  // coincident: split along x, lower slot left
            dx = 1.0;
            dy = 0.0;
            d = 1.0;
          }
          const double push = (cfg.min_separation - d) / 2.0 + 0.01;
          pa.x -= push * dx / d;
          pa.y -= push * dy / d;
          pb.x += push * dx / d;
          pb.y += push * dy / d;
        }
      }
      for (AgentState& st : agents) {
        st.x = std::clamp(st.x, static_cast<double>(kMinX), static_cast<double>(kMaxX));
        st.y = std::clamp(st.y, static_cast<double>(kMinY), static_cast<double>(kMaxY));
      }
    }

    // --- skills (buffs apply to this frame's duels) ---
    for (int a = 0; a < 10; ++a) {
      AgentState& st = agents[static_cast<std::size_t>(a)];
      if (!st.alive || f < st.skill_ready_frame) continue;
      if (!rng.bernoulli(cfg.skill_use_p)) continue;
      st.skill_ready_frame = f + skill_cooldown_f;
      st.skill_until_frame = f + skill_window_f;
      gt.events.push_back(EventLabel{f / cfg.fps, cfg.roster.team_of(a),
                                     cfg.roster.agents[static_cast<std::size_t>(a)],
                                     map.area_name_at(qround(st.x), qround(st.y)), "skill_use"});
      if (auto pos = place_effect(qround(st.x), qround(st.y), agents, spike))
        flashes.push_back(Flash{pos->first, pos->second, 2});
    }

    // --- spike plant ---
    if (!planted && planter < 0) {
      for (int a = 0; a < 5; ++a) {
        AgentState& st = agents[static_cast<std::size_t>(a)];
        if (!st.alive) continue;
        if (!is_site(map, map.area_index_at(st.x, st.y))) continue;
        if (!rng.bernoulli(tempo * cfg.plant_p)) continue;
        planter = a;
        st.plant_frames_left = plant_f;
        break;
      }
    } else if (planter >= 0 && !planted) {
      AgentState& st = agents[static_cast<std::size_t>(planter)];
      if (!st.alive) {
        planter = -1;  // plant aborted
      } else if (--st.plant_frames_left == 0) {
        planted = true;
        const auto pos = place_effect(qround(st.x), qround(st.y), agents, std::nullopt);
        spike = pos ? *pos : std::make_pair(std::min(qround(st.x) + 10, kMaxX), qround(st.y));
        detonation_frame = f + detonation_f;
        gt.events.push_back(EventLabel{f / cfg.fps, Team::attacker,
                                       cfg.roster.agents[static_cast<std::size_t>(planter)],
                                       map.area_name_at(qround(st.x), qround(st.y)),
                                       "spike_plant"});
        planter = -1;
      }
    }

    // --- duels ---
    for (int a = 0; a < 5; ++a) {
      if (!agents[static_cast<std::size_t>(a)].alive) continue;
      for (int b = 5; b < 10; ++b) {
        AgentState& atk = agents[static_cast<std::size_t>(a)];
        AgentState& def = agents[static_cast<std::size_t>(b)];
        if (!atk.alive || !def.alive) continue;
        if (map.area_index_at(atk.x, atk.y) != map.area_index_at(def.x, def.y)) continue;
        if (!rng.bernoulli(tempo * cfg.duel_p)) continue;
        int n_atk = 0, n_def = 0;
        for (int i = 0; i < 5; ++i) n_atk += agents[static_cast<std::size_t>(i)].alive;
        for (int i = 5; i < 10; ++i) n_def += agents[static_cast<std::size_t>(i)].alive;
        double p = cfg.p0;
        if (n_atk != n_def) p += (n_atk > n_def ? 1 : -1) * cfg.numbers_bonus;
        if (f < atk.skill_until_frame) p += cfg.skill_bonus;
        if (f < def.skill_until_frame) p -= cfg.skill_bonus;
        p = std::clamp(p, 0.03, 0.97);
        if (rng.bernoulli(p))
          def.alive = false;
        else
          atk.alive = false;
      }
    }

    // --- defuse (defender parked on the spike; the channel only runs
    // while no living attacker guards the spike) ---
    if (planted && !defused) {
      if (defuser >= 0 && !agents[static_cast<std::size_t>(defuser)].alive) defuser = -1;
      if (defuser < 0) {
        for (int b = 5; b < 10; ++b) {
          const AgentState& st = agents[static_cast<std::size_t>(b)];
          if (!st.alive) continue;
          if (dist2(st.x, st.y, spike->first, spike->second) <=
              cfg.defuse_radius * cfg.defuse_radius) {
            defuser = b;
            defuse_frames_left = defuse_f;
            break;
          }
        }
      }
      bool guarded = false;
      for (int a = 0; a < 5 && !guarded; ++a) {
        const AgentState& st = agents[static_cast<std::size_t>(a)];
        guarded = st.alive && dist2(st.x, st.y, spike->first, spike->second) <=
                                  cfg.guard_radius * cfg.guard_radius;
      }
      if (defuser >= 0 && !guarded && --defuse_frames_left == 0) defused = true;
    }

    // --- record frame state ---
    FrameState fs;
    for (int a = 0; a < 10; ++a) {
      const AgentState& st = agents[static_cast<std::size_t>(a)];
      if (st.alive)
        fs.agents[static_cast<std::size_t>(a)] =
            TrackPoint{true, static_cast<double>(qround(st.x)), static_cast<double>(qround(st.y))};
    }
    for (auto it = flashes.begin(); it != flashes.end();) {
      if (it->frames_left > 0) {
        fs.flashes.push_back({it->x, it->y});
        --it->frames_left;
        ++it;
      } else {
        it = flashes.erase(it);
      }
    }
    fs.spike = spike;
    fs.timer_seconds = static_cast<int>(cfg.round_cap_s) - f / static_cast<int>(cfg.fps);
    gt.frames.push_back(fs);
    tracks.push_back(fs.agents);

    // --- end conditions ---
    int n_atk = 0, n_def = 0;
    for (int i = 0; i < 5; ++i) n_atk += agents[static_cast<std::size_t>(i)].alive;
    for (int i = 5; i < 10; ++i) n_def += agents[static_cast<std::size_t>(i)].alive;
    if (planted && f >= detonation_frame)
      outcome = Team::attacker;
    else if (defused)
      outcome = Team::defender;
    else if (n_atk == 0 && !planted)  // a live spike must still be defused
      outcome = Team::defender;
    else if (n_def == 0)
      outcome = Team::attacker;
    else if (f == cap_frames - 1)
      outcome = Team::defender;
    if (outcome) end_frame = f;
  }

  gt.outcome = *outcome;
  gt.in_round_frames = end_frame + 1;
  gt.duration_s = gt.in_round_frames / cfg.fps;

  // Footsteps from the same rule the extractor runs.
  std::vector<EventLabel> steps =
      footstep_events(tracks, cfg.roster, map, cfg.fps, 1.0, 1.0);
  gt.events.insert(gt.events.end(), steps.begin(), steps.end());
  std::stable_sort(gt.events.begin(), gt.events.end(),
                   [](const EventLabel& a, const EventLabel& b) { return a.t < b.t; });

  // Post-round banner tail: banner (and any spike) only, so the opaque
  // banner never paints over an icon.
  FrameState tail = gt.frames.back();
  tail.agents = {};
  tail.flashes.clear();
  tail.timer_seconds = std::nullopt;
  tail.banner = gt.outcome;
  for (int i = 0; i < static_cast<int>(cfg.fps); ++i) gt.frames.push_back(tail);
  return gt;
}

Image render_frame(const FrameState& state, const MapSpec& map, const Roster& roster) {
  (void)roster;
  Image img = Image::filled(map.width, map.height, kBackgroundColor.r, kBackgroundColor.g,
                            kBackgroundColor.b);
  // Area outlines.
  for (const AreaDef& area : map.areas) {
    const Rect& r = area.rect;
    for (int x = r.x; x < r.right(); ++x)
      for (int y : {r.y, r.bottom() - 1}) {
        img.at(x, y, 0) = kBorderColor.r;
        img.at(x, y, 1) = kBorderColor.g;
        img.at(x, y, 2) = kBorderColor.b;
      }
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x : {r.x, r.right() - 1}) {
        img.at(x, y, 0) = kBorderColor.r;
        img.at(x, y, 1) = kBorderColor.g;
        img.at(x, y, 2) = kBorderColor.b;
      }
  }
  if (state.spike)
    paint_glyph_opaque(img, spike_mask(), state.spike->first - 4, state.spike->second - 4,
                       kSpikeColor, kBackgroundColor);
  for (int a = 0; a < 10; ++a) {
    const TrackPoint& p = state.agents[static_cast<std::size_t>(a)];
    if (!p.present) continue;
    paint_glyph_opaque(img, agent_mask(a), qround(p.x) - 4, qround(p.y) - 4,
                       team_color(a < 5 ? Team::attacker : Team::defender), kBackgroundColor);
  }
  for (const auto& [fx, fy] : state.flashes)
    paint_glyph_opaque(img, skill_mask(), fx - 5, fy - 5, kSkillColor, kBackgroundColor);
  if (state.banner)
    paint_glyph_opaque(img, banner_mask(*state.banner), map.banner_anchor.first,
                       map.banner_anchor.second, team_color(*state.banner), kBackgroundColor);
  if (state.timer_seconds) {
    const int m = *state.timer_seconds / 60, s = *state.timer_seconds % 60;
    const int cells[4] = {m, -1, s / 10, s % 10};
    for (int i = 0; i < 4; ++i) {
      const auto [ax, ay] = map.timer_anchors[static_cast<std::size_t>(i)];
      const GlyphMask mask = cells[i] < 0 ? colon_mask() : digit_mask(cells[i]);
      paint_glyph_opaque(img, mask, ax, ay, kTimerColor, kBackgroundColor);
    }
  }
  return img;
}

void add_pixel_noise(Image& img, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  for (std::uint8_t& b : img.rgb) {
    const long v = std::lround(b + rng.normal(0.0, sigma));
    b = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
  }
}

std::vector<RoundRecord> generate_dataset(const SimConfig& cfg, int n_rounds,
                                          const std::string& out_dir,
                                          const GenerateOptions& opt) {
  cfg.validate();
  if (n_rounds < 0) throw ConfigError("generate_dataset: negative round count");
  if (opt.split_quota) {
    const auto& q = *opt.split_quota;
    if (q[0] + q[1] + q[2] != n_rounds)
      throw ConfigError("generate_dataset: split quota does not sum to the round count");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("generate_dataset: cannot create " + out_dir);

  // Hash-rank split assignment: stable under the dataset seed.
  std::vector<std::pair<std::uint64_t, int>> order;
  for (int r = 0; r < n_rounds; ++r)
    order.push_back({mix_seed(mix_seed(cfg.seed, 0xA11C), static_cast<std::uint64_t>(r)), r});
  std::sort(order.begin(), order.end());
  std::vector<int> rank_of(static_cast<std::size_t>(n_rounds));
  for (int rank = 0; rank < n_rounds; ++rank)
    rank_of[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)].second)] = rank;

  std::vector<RoundRecord> manifest;
  std::vector<RoundEvents> all_events;
  std::ofstream truth(fs::path(out_dir) / "truth.jsonl", std::ios::trunc);
  if (!truth) throw IoError("generate_dataset: cannot write truth.jsonl");

  for (int r = 0; r < n_rounds; ++r) {
    const std::uint64_t round_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(r));
    const GroundTruth gt = simulate_round(cfg, round_seed);

    char id_buf[16];
    std::snprintf(id_buf, sizeof id_buf, "r%05d", r);
    const std::string round_id = id_buf;

    RoundRecord rec;
    rec.round_id = round_id;
    rec.seed = round_seed;
    rec.duration_s = gt.duration_s;
    rec.n_frames = gt.in_round_frames;
    rec.total_frames = static_cast<int>(gt.frames.size());
    rec.outcome = gt.outcome;
    rec.map_id = cfg.map.id;
    rec.split = split_name(rank_of[static_cast<std::size_t>(r)], n_rounds, opt.split_quota);
    manifest.push_back(rec);

    all_events.push_back(RoundEvents{round_id, gt.events});

    ordered_json t;
    t["round_id"] = round_id;
    t["outcome"] = team_str(gt.outcome);
    t["duration_s"] = gt.duration_s;
    if (opt.include_positions) {
      json frames = json::array();
      for (int f = 0; f < gt.in_round_frames; ++f) {
        json row = json::array();
        for (const TrackPoint& p : gt.frames[static_cast<std::size_t>(f)].agents) {
          if (p.present)
            row.push_back(json::array({static_cast<int>(p.x), static_cast<int>(p.y)}));
          else
            row.push_back(nullptr);
        }
        frames.push_back(row);
      }
      t["positions"] = std::move(frames);
    }
    truth << t.dump() << "\n";

    if (opt.frames != FramesMode::none) {
      Rng noise_rng(mix_seed(round_seed, 0x401fe));
      if (opt.frames == FramesMode::png) {
        const fs::path dir = fs::path(out_dir) / "frames" / round_id;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("generate_dataset: cannot create " + dir.string());
        for (std::size_t f = 0; f < gt.frames.size(); ++f) {
          Image img = render_frame(gt.frames[f], cfg.map, cfg.roster);
          add_pixel_noise(img, opt.noise_sigma, noise_rng);
          char name[16];
          std::snprintf(name, sizeof name, "%06zu.png", f);
          write_png((dir / name).string(), img);
        }
      } else {
        fs::create_directories(fs::path(out_dir) / "frames", ec);
        const std::string path = (fs::path(out_dir) / "frames" / (round_id + ".rgb")).string();
        RawStreamWriter w(path, cfg.map.width, cfg.map.height, cfg.fps);
        for (const FrameState& s : gt.frames) {
          Image img = render_frame(s, cfg.map, cfg.roster);
          add_pixel_noise(img, opt.noise_sigma, noise_rng);
          w.append(img);
        }
      }
    }
  }
  truth.close();

  write_rounds_jsonl((fs::path(out_dir) / "rounds.jsonl").string(), manifest);
  write_events_jsonl((fs::path(out_dir) / "events.jsonl").string(), all_events);
  std::ofstream sc(fs::path(out_dir) / "sim.json", std::ios::trunc);
  if (!sc) throw IoError("generate_dataset: cannot write sim.json");
  sc << sim_config_to_json(cfg) << "\n";
  return manifest;
}

void write_rounds_jsonl(const std::string& path, const std::vector<RoundRecord>& rounds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("write_rounds_jsonl: cannot open " + path);
  for (const RoundRecord& r : rounds) {
    ordered_json j;
    j["round_id"] = r.round_id;
    j["seed"] = r.seed;
    j["duration_s"] = r.duration_s;
    j["n_frames"] = r.n_frames;
    j["total_frames"] = r.total_frames;
    j["outcome"] = team_str(r.outcome);
    j["map"] = r.map_id;
    j["split"] = r.split;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write_rounds_jsonl: write failed: " + path);
}

std::vector<RoundRecord> read_rounds_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_rounds_jsonl: cannot open " + path);
  std::vector<RoundRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IoError("read_rounds_jsonl: bad JSON line in " + path);
    RoundRecord r;
    r.round_id = j.at("round_id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.duration_s = j.at("duration_s").get<double>();
    r.n_frames = j.at("n_frames").get<int>();
    r.total_frames = j.at("total_frames").get<int>();
    r.outcome = team_from_str(j.at("outcome").get<std::string>());
    r.map_id = j.at("map").get<std::string>();
    r.split = j.at("split").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

std::string sim_config_to_json(const SimConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["round_cap_s"] = cfg.round_cap_s;
  j["fps"] = cfg.fps;
  j["p0"] = cfg.p0;
  j["numbers_bonus"] = cfg.numbers_bonus;
  j["skill_bonus"] = cfg.skill_bonus;
  j["skill_window_s"] = cfg.skill_window_s;
  j["skill_cooldown_s"] = cfg.skill_cooldown_s;
  j["skill_use_p"] = cfg.skill_use_p;
  j["duel_p"] = cfg.duel_p;
  j["speed_min"] = cfg.speed_min;
  j["speed_max"] = cfg.speed_max;
  j["idle_max_s"] = cfg.idle_max_s;
  j["min_separation"] = cfg.min_separation;
  j["plant_p"] = cfg.plant_p;
  j["plant_duration_s"] = cfg.plant_duration_s;
  j["detonation_s"] = cfg.detonation_s;
  j["defuse_radius"] = cfg.defuse_radius;
  j["guard_radius"] = cfg.guard_radius;
  j["defuse_duration_s"] = cfg.defuse_duration_s;
  j["post_plant_focus"] = cfg.post_plant_focus;
  j["attacker_site_bias"] = cfg.attacker_site_bias;
  j["defender_site_bias"] = cfg.defender_site_bias;
  j["tempo_min"] = cfg.tempo_min;
  j["map"] = cfg.map.id;
  j["roster"] = cfg.roster.agents;
  return j.dump(2);
}

SimConfig sim_config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("sim_config_from_json: invalid JSON");
  SimConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.round_cap_s = j.value("round_cap_s", cfg.round_cap_s);
  cfg.fps = j.value("fps", cfg.fps);
  cfg.p0 = j.value("p0", cfg.p0);
  cfg.numbers_bonus = j.value("numbers_bonus", cfg.numbers_bonus);
  cfg.skill_bonus = j.value("skill_bonus", cfg.skill_bonus);
  cfg.skill_window_s = j.value("skill_window_s", cfg.skill_window_s);
  cfg.skill_cooldown_s = j.value("skill_cooldown_s", cfg.skill_cooldown_s);
  cfg.skill_use_p = j.value("skill_use_p", cfg.skill_use_p);
  cfg.duel_p = j.value("duel_p", cfg.duel_p);
  cfg.speed_min = j.value("speed_min", cfg.speed_min);
  cfg.speed_max = j.value("speed_max", cfg.speed_max);
  cfg.idle_max_s = j.value("idle_max_s", cfg.idle_max_s);
  cfg.min_separation = j.value("min_separation", cfg.min_separation);
  cfg.plant_p = j.value("plant_p", cfg.plant_p);
  cfg.plant_duration_s = j.value("plant_duration_s", cfg.plant_duration_s);
  cfg.detonation_s = j.value("detonation_s", cfg.detonation_s);
  cfg.defuse_radius = j.value("defuse_radius", cfg.defuse_radius);
  cfg.guard_radius = j.value("guard_radius", cfg.guard_radius);
  cfg.defuse_duration_s = j.value("defuse_duration_s", cfg.defuse_duration_s);
  cfg.post_plant_focus = j.value("post_plant_focus", cfg.post_plant_focus);
  cfg.attacker_site_bias = j.value("attacker_site_bias", cfg.attacker_site_bias);
  cfg.defender_site_bias = j.value("defender_site_bias", cfg.defender_site_bias);
  cfg.tempo_min = j.value("tempo_min", cfg.tempo_min);
  if (j.contains("map")) {
    const std::string id = j["map"].get<std::string>();
    if (id != "arena6") throw ConfigError("sim_config_from_json: unknown map " + id);
    cfg.map = MapSpec::arena6();
  }
  if (j.contains("roster")) cfg.roster.agents = j["roster"].get<std::vector<std::string>>();
  return cfg;
}

}  // namespace vroc

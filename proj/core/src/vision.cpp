#include "vroc/vision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vroc/errors.hpp"

namespace vroc {
namespace {

constexpr double kVarEps = 1e-12;

struct TemplateStats {
  double mean = 0.0;
  double var_sum = 0.0;  // sum of squared deviations
};

TemplateStats stats_of(const GrayImage& t) {
  double s1 = 0.0, s2 = 0.0;
  for (double v : t.v) {
    s1 += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(t.v.size());
  TemplateStats st;
  st.mean = s1 / n;
  st.var_sum = s2 - s1 * s1 / n;
  return st;
}

Rect clamp_to(const Rect& r, int w, int h) {
  const int x0 = std::max(r.x, 0), y0 = std::max(r.y, 0);
  const int x1 = std::min(r.right(), w), y1 = std::min(r.bottom(), h);
  return Rect{x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

// Inclusive-exclusive prefix sums with an extra zero row/column.
struct Integral {
  int w = 0, h = 0;
  std::vector<double> s1, s2;

  explicit Integral(const GrayImage& img) : w(img.width), h(img.height) {
    s1.assign(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    s2.assign(s1.size(), 0.0);
    for (int y = 0; y < h; ++y) {
      double row1 = 0.0, row2 = 0.0;
      for (int x = 0; x < w; ++x) {
        const double v = img.at(x, y);
        row1 += v;
        row2 += v * v;
        const std::size_t i = static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1);
        s1[i] = s1[i - static_cast<std::size_t>(w + 1)] + row1;
        s2[i] = s2[i - static_cast<std::size_t>(w + 1)] + row2;
      }
    }
  }

  double sum1(int x, int y, int tw, int th) const { return rect(s1, x, y, tw, th); }
  double sum2(int x, int y, int tw, int th) const { return rect(s2, x, y, tw, th); }

 private:
  double rect(const std::vector<double>& s, int x, int y, int tw, int th) const {
    const std::size_t stride = static_cast<std::size_t>(w + 1);
    return s[(y + th) * stride + (x + tw)] - s[(y + th) * stride + x] -
           s[y * stride + (x + tw)] + s[y * stride + x];
  }
};

double cross_sum(const GrayImage& img, const GrayImage& t, int x0, int y0) {
  double acc = 0.0;
  for (int y = 0; y < t.height; ++y) {
    const double* ip = img.v.data() + static_cast<std::size_t>(y0 + y) * img.width + x0;
    const double* tp = t.v.data() + static_cast<std::size_t>(y) * t.width;
    for (int x = 0; x < t.width; ++x) acc += ip[x] * tp[x];
  }
  return acc;
}

GrayImage render_template(const GlyphMask& mask, Rgb fg) {
  Image img = Image::filled(mask.width, mask.height, kBackgroundColor.r, kBackgroundColor.g,
                            kBackgroundColor.b);
  paint_glyph_opaque(img, mask, 0, 0, fg, kBackgroundColor);
  return GrayImage::from(img);
}

double sq_dist(double ax, double ay, double bx, double by) {
  const double dx = ax - bx, dy = ay - by;
  return dx * dx + dy * dy;
}

}  // namespace

GrayImage GrayImage::from(const Image& img) {
  GrayImage g;
  g.width = img.width;
  g.height = img.height;
  g.v = to_gray(img);
  return g;
}

int Roster::slot_of(const std::string& name) const {
  for (std::size_t i = 0; i < agents.size(); ++i)
    if (agents[i] == name) return static_cast<int>(i);
  throw UnknownVocabError("roster: unknown agent: " + name);
}

Roster Roster::demo() {
  Roster r;
  r.agents = {"ajax",  "blitz", "cobra", "drift", "ember",
              "frost", "gale",  "hexa",  "iris",  "juno"};
  return r;
}

MapSpec MapSpec::arena6() {
  MapSpec m;
  m.id = "arena6";
  m.areas = {
      {"def_spawn", {0, 12, 128, 20}}, {"site_a", {0, 32, 44, 64}},
      {"mid", {44, 32, 40, 32}},       {"connector", {44, 64, 40, 32}},
      {"site_b", {84, 32, 44, 64}},    {"atk_spawn", {0, 96, 128, 32}},
  };
  m.timer_anchors = {{{2, 1}, {9, 1}, {16, 1}, {23, 1}}};
  m.banner_anchor = {44, 59};
  m.audible_radius = 24.0;
  return m;
}

void MapSpec::validate() const {
  if (areas.empty()) throw ConfigError("map: no areas defined");
  long long covered = 0;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const Rect& r = areas[i].rect;
    if (r.w <= 0 || r.h <= 0) throw ConfigError("map: empty area " + areas[i].name);
    if (r.x < playfield.x || r.y < playfield.y || r.right() > playfield.right() ||
        r.bottom() > playfield.bottom())
      throw ConfigError("map: area outside playfield: " + areas[i].name);
    covered += static_cast<long long>(r.w) * r.h;
    for (std::size_t j = i + 1; j < areas.size(); ++j)
      if (r.intersects(areas[j].rect))
        throw ConfigError("map: overlapping areas " + areas[i].name + "/" + areas[j].name);
  }
  if (covered != static_cast<long long>(playfield.w) * playfield.h)
    throw ConfigError("map: areas do not tile the playfield");
  if (audible_radius <= 0) throw ConfigError("map: audible radius must be positive");
}

int MapSpec::area_index_at(double x, double y) const {
  const int px = static_cast<int>(std::floor(x));
  const int py = static_cast<int>(std::floor(y));
  for (std::size_t i = 0; i < areas.size(); ++i)
    if (areas[i].rect.contains(px, py)) return static_cast<int>(i);
  return -1;
}

const std::string& MapSpec::area_name_at(double x, double y, bool* unmapped) const {
  const int idx = area_index_at(x, y);
  if (idx >= 0) {
    if (unmapped) *unmapped = false;
    return areas[static_cast<std::size_t>(idx)].name;
  }
  if (unmapped) *unmapped = true;
  // Nearest area by clamped distance to its rectangle.
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const Rect& r = areas[i].rect;
    const double dx = std::max({0.0, r.x - x, x - (r.right() - 1.0)});
    const double dy = std::max({0.0, r.y - y, y - (r.bottom() - 1.0)});
    const double d = dx * dx + dy * dy;
    if (d < best) {
      best = d;
      best_i = i;
    }
  }
  return areas[best_i].name;
}

NccResult ncc_match(const GrayImage& image, const GrayImage& tmpl, const Rect& search) {
  const Rect region = clamp_to(search, image.width, image.height);
  if (tmpl.width > region.w || tmpl.height > region.h)
    throw TemplateLargerThanRegionError("ncc_match: template " + std::to_string(tmpl.width) +
                                        "x" + std::to_string(tmpl.height) +
                                        " exceeds search region " + std::to_string(region.w) +
                                        "x" + std::to_string(region.h));
  const TemplateStats ts = stats_of(tmpl);
  NccResult best;
  best.x = region.x;
  best.y = region.y;
  best.score = -2.0;
  const double n = static_cast<double>(tmpl.v.size());
  for (int y = region.y; y + tmpl.height <= region.bottom(); ++y) {
    for (int x = region.x; x + tmpl.width <= region.right(); ++x) {
      double s1 = 0.0, s2 = 0.0;
      for (int ty = 0; ty < tmpl.height; ++ty) {
        const double* ip = image.v.data() + static_cast<std::size_t>(y + ty) * image.width + x;
        for (int tx = 0; tx < tmpl.width; ++tx) {
          s1 += ip[tx];
          s2 += ip[tx] * ip[tx];
        }
      }
      const double var_i = s2 - s1 * s1 / n;
      double score;
      bool degenerate;
      if (ts.var_sum < kVarEps || var_i < kVarEps) {
        score = 0.0;
        degenerate = true;
      } else {
        const double num = cross_sum(image, tmpl, x, y) - ts.mean * s1;
        score = num / std::sqrt(ts.var_sum * var_i);
        degenerate = false;
      }
      if (score > best.score) {
        best.x = x;
        best.y = y;
        best.score = score;
        best.degenerate = degenerate;
      }
    }
  }
  return best;
}

std::vector<Detection> detect_templates(const GrayImage& frame, std::span<const GrayImage> tmpls,
                                        const Rect& search, double threshold,
                                        double min_window_stddev) {
  const Rect region = clamp_to(search, frame.width, frame.height);
  const Integral integral(frame);

  struct Candidate {
    Detection det;
    int radius = 0;
  };
  std::vector<Candidate> candidates;

  for (std::size_t tid = 0; tid < tmpls.size(); ++tid) {
    const GrayImage& t = tmpls[tid];
    if (t.width > region.w || t.height > region.h) continue;
    const TemplateStats ts = stats_of(t);
    if (ts.var_sum < kVarEps) continue;
    const double n = static_cast<double>(t.v.size());
    for (int y = region.y; y + t.height <= region.bottom(); ++y) {
      for (int x = region.x; x + t.width <= region.right(); ++x) {
        const double s1 = integral.sum1(x, y, t.width, t.height);
        const double s2 = integral.sum2(x, y, t.width, t.height);
        const double var_i = s2 - s1 * s1 / n;
        if (var_i < kVarEps) continue;
        if (std::sqrt(var_i / n) < min_window_stddev) continue;
        const double score = (cross_sum(frame, t, x, y) - ts.mean * s1) /
                             std::sqrt(ts.var_sum * var_i);
        if (score < threshold) continue;
        Candidate c;
        c.det = Detection{x + t.width / 2, y + t.height / 2, score, static_cast<int>(tid)};
        c.radius = std::max(t.width, t.height);
        candidates.push_back(c);
      }
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.det.score != b.det.score) return a.det.score > b.det.score;
    if (a.det.y != b.det.y) return a.det.y < b.det.y;
    if (a.det.x != b.det.x) return a.det.x < b.det.x;
    return a.det.template_id < b.det.template_id;
  });

  std::vector<Detection> kept;
  std::vector<int> kept_radius;
  for (const Candidate& c : candidates) {
    bool suppressed = false;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const double r = std::max(c.radius, kept_radius[k]);
      if (sq_dist(c.det.x, c.det.y, kept[k].x, kept[k].y) < r * r) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(c.det);
      kept_radius.push_back(c.radius);
    }
  }
  return kept;
}

VisionTemplates VisionTemplates::build() {
  VisionTemplates t;
  for (int i = 0; i < kAgentGlyphCount; ++i)
    t.agents.push_back(
        render_template(agent_mask(i), team_color(i < 5 ? Team::attacker : Team::defender)));
  t.skill = render_template(skill_mask(), kSkillColor);
  t.spike = render_template(spike_mask(), kSpikeColor);
  t.banner_atk = render_template(banner_mask(Team::attacker), kAttackerColor);
  t.banner_def = render_template(banner_mask(Team::defender), kDefenderColor);
  for (int d = 0; d <= 9; ++d) t.digits.push_back(render_template(digit_mask(d), kTimerColor));
  t.colon = render_template(colon_mask(), kTimerColor);
  return t;
}

std::optional<int> read_timer(const GrayImage& frame, const MapSpec& map,
                              const VisionTemplates& t, double threshold) {
  int digits[3] = {0, 0, 0};
  int digit_slot = 0;
  for (int cell = 0; cell < 4; ++cell) {
    const auto [ax, ay] = map.timer_anchors[static_cast<std::size_t>(cell)];
    const Rect region{ax, ay, t.colon.width, t.colon.height};
    if (cell == 1) {
      const NccResult r = ncc_match(frame, t.colon, region);
      if (r.score < threshold) return std::nullopt;
      continue;
    }
    double best = -2.0;
    int best_digit = -1;
    for (int d = 0; d <= 9; ++d) {
      const NccResult r = ncc_match(frame, t.digits[static_cast<std::size_t>(d)], region);
      if (r.score > best) {
        best = r.score;
        best_digit = d;
      }
    }
    if (best < threshold) return std::nullopt;
    digits[digit_slot++] = best_digit;
  }
  if (digits[1] > 5) return std::nullopt;  // tens of seconds
  return 60 * digits[0] + 10 * digits[1] + digits[2];
}

std::optional<Team> read_banner(const GrayImage& frame, const MapSpec& map,
                                const VisionTemplates& t, double threshold) {
  const Rect region{map.banner_anchor.first, map.banner_anchor.second, t.banner_atk.width,
                    t.banner_atk.height};
  const NccResult atk = ncc_match(frame, t.banner_atk, region);
  const NccResult def = ncc_match(frame, t.banner_def, region);
  const double best = std::max(atk.score, def.score);
  if (best < threshold) return std::nullopt;
  return atk.score >= def.score ? Team::attacker : Team::defender;
}

std::vector<Detection> detect_icons(const GrayImage& frame, const MapSpec& map,
                                    const VisionTemplates& t, const VisionConfig& cfg) {
  return detect_templates(frame, t.agents, map.playfield, cfg.ncc_threshold,
                          cfg.min_window_stddev);
}

FrameExtract extract_frame(const Image& frame, const MapSpec& map, const VisionTemplates& t,
                           const VisionConfig& cfg) {
  const GrayImage gray = GrayImage::from(frame);
  FrameExtract fx;
  fx.timer_seconds = read_timer(gray, map, t, cfg.ncc_threshold);
  fx.banner = read_banner(gray, map, t, cfg.ncc_threshold);
  fx.agents = detect_icons(gray, map, t, cfg);
  fx.skills = detect_templates(gray, std::span(&t.skill, 1), map.playfield, cfg.ncc_threshold,
                               cfg.min_window_stddev);
  fx.spikes = detect_templates(gray, std::span(&t.spike, 1), map.playfield, cfg.ncc_threshold,
                               cfg.min_window_stddev);
  return fx;
}

std::vector<EventLabel> footstep_events(std::span<const FrameTracks> tracks, const Roster& roster,
                                        const MapSpec& map, double fps, double v_min,
                                        double debounce_s) {
  std::vector<EventLabel> events;
  struct Sighting {
    bool seen = false;
    int frame = 0;
    double x = 0.0, y = 0.0;
  };
  std::array<Sighting, 10> last;
  std::array<double, 10> last_emit;
  last_emit.fill(-std::numeric_limits<double>::infinity());

  for (int f = 0; f < static_cast<int>(tracks.size()); ++f) {
    const FrameTracks& now = tracks[static_cast<std::size_t>(f)];
    for (int a = 0; a < 10; ++a) {
      const TrackPoint& p = now[static_cast<std::size_t>(a)];
      if (!p.present) continue;
      const Sighting& prev = last[static_cast<std::size_t>(a)];
      if (prev.seen && f > prev.frame) {
        const double v = std::sqrt(sq_dist(p.x, p.y, prev.x, prev.y)) / (f - prev.frame);
        if (v >= v_min) {
          bool heard = false;
          const int lo = a < 5 ? 5 : 0, hi = a < 5 ? 10 : 5;
          for (int b = lo; b < hi && !heard; ++b) {
            const TrackPoint& q = now[static_cast<std::size_t>(b)];
            if (q.present &&
                sq_dist(p.x, p.y, q.x, q.y) <= map.audible_radius * map.audible_radius)
              heard = true;
          }
          const double t = f / fps;
          if (heard && t - last_emit[static_cast<std::size_t>(a)] >= debounce_s) {
            events.push_back(EventLabel{t, roster.team_of(a),
                                        roster.agents[static_cast<std::size_t>(a)],
                                        map.area_name_at(p.x, p.y), "footstep_heard"});
            last_emit[static_cast<std::size_t>(a)] = t;
          }
        }
      }
    }
    for (int a = 0; a < 10; ++a) {
      const TrackPoint& p = now[static_cast<std::size_t>(a)];
      if (p.present) last[static_cast<std::size_t>(a)] = {true, f, p.x, p.y};
    }
  }
  return events;
}

std::vector<EventLabel> infer_events(std::span<const FrameExtract> frames, const Roster& roster,
                                     const MapSpec& map, double fps, const VisionConfig& cfg,
                                     std::vector<std::string>* warnings) {
  const int n = static_cast<int>(frames.size());

  // Tracks from icon detections (best score per roster slot per frame).
  std::vector<FrameTracks> tracks(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    std::array<double, 10> best_score;
    best_score.fill(-1.0);
    for (const Detection& d : frames[static_cast<std::size_t>(f)].agents) {
      if (d.template_id < 0 || d.template_id >= 10) continue;
      auto slot = static_cast<std::size_t>(d.template_id);
      if (d.score > best_score[slot]) {
        best_score[slot] = d.score;
        tracks[static_cast<std::size_t>(f)][slot] =
            TrackPoint{true, static_cast<double>(d.x), static_cast<double>(d.y)};
      }
    }
  }

  std::vector<EventLabel> events = footstep_events(tracks, roster, map, fps, cfg.footstep_v_min,
                                                   cfg.footstep_debounce_s);

  auto note = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };

  // Area lookup that records nearest-area fallbacks.
  auto area_of = [&](double x, double y, int f) -> std::string {
    bool unmapped = false;
    const std::string& name = map.area_name_at(x, y, &unmapped);
    if (unmapped)
      note("frame " + std::to_string(f) + ": position (" + std::to_string(x) + "," +
           std::to_string(y) + ") outside all areas; assigned nearest '" + name + "'");
    return name;
  };

  // Nearest tracked icon, optionally restricted to one team.
  auto nearest_slot = [&](int f, double x, double y, std::optional<Team> team) -> int {
    const FrameTracks& tk = tracks[static_cast<std::size_t>(f)];
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 10; ++a) {
      if (!tk[static_cast<std::size_t>(a)].present) continue;
      if (team && roster.team_of(a) != *team) continue;
      const double d = sq_dist(x, y, tk[static_cast<std::size_t>(a)].x,
                               tk[static_cast<std::size_t>(a)].y);
      if (d < best_d) {
        best_d = d;
        best = a;
      }
    }
    return best;
  };

  // Rising-edge skill flashes, attributed to the nearest icon.
  for (int f = 0; f < n; ++f) {
    for (const Detection& s : frames[static_cast<std::size_t>(f)].skills) {
      bool rising = true;
      if (f > 0) {
        for (const Detection& p : frames[static_cast<std::size_t>(f - 1)].skills)
          if (sq_dist(s.x, s.y, p.x, p.y) <= 2.0 * 2.0) rising = false;
      }
      if (!rising) continue;
      const int slot = nearest_slot(f, s.x, s.y, std::nullopt);
      if (slot < 0) {
        note("frame " + std::to_string(f) + ": skill flash with no nearby icon, dropped");
        continue;
      }
      const TrackPoint& tp = tracks[static_cast<std::size_t>(f)][static_cast<std::size_t>(slot)];
      events.push_back(EventLabel{f / fps, roster.team_of(slot),
                                  roster.agents[static_cast<std::size_t>(slot)],
                                  area_of(tp.x, tp.y, f), "skill_use"});
    }
  }

  // First spike sighting becomes the (single) plant event.
  for (int f = 0; f < n; ++f) {
    if (frames[static_cast<std::size_t>(f)].spikes.empty()) continue;
    const Detection& s = frames[static_cast<std::size_t>(f)].spikes.front();
    const int slot = nearest_slot(f, s.x, s.y, Team::attacker);
    if (slot < 0) {
      note("frame " + std::to_string(f) + ": spike with no attacker icon nearby, dropped");
      break;
    }
    const TrackPoint& tp = tracks[static_cast<std::size_t>(f)][static_cast<std::size_t>(slot)];
    events.push_back(EventLabel{f / fps, Team::attacker,
                                roster.agents[static_cast<std::size_t>(slot)],
                                area_of(tp.x, tp.y, f), "spike_plant"});
    break;
  }

  std::stable_sort(events.begin(), events.end(),
                   [](const EventLabel& a, const EventLabel& b) { return a.t < b.t; });
  return events;
}

std::vector<RoundBoundary> segment_rounds(std::span<const TimerObs> obs, double fps,
                                          const std::string& map_id) {
  const int n = static_cast<int>(obs.size());

  // Median filter (window 5): a value only when at least 3 readings are
  // present in the window.
  std::vector<std::optional<int>> filtered(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    int vals[5];
    int count = 0;
    for (int w = std::max(0, f - 2); w <= std::min(n - 1, f + 2); ++w)
      if (obs[static_cast<std::size_t>(w)].seconds) {
        vals[count++] = *obs[static_cast<std::size_t>(w)].seconds;
      }
    if (count >= 3) {
      std::sort(vals, vals + count);
      filtered[static_cast<std::size_t>(f)] = vals[(count - 1) / 2];
    }
  }

  std::vector<RoundBoundary> rounds;
  const int max_gap = static_cast<int>(std::lround(2.0 * fps));

  bool in_round = false;
  int start = 0;
  int last_reading = 0;
  int gap = 0;
  for (int f = 0; f < n; ++f) {
    const std::optional<int>& r = filtered[static_cast<std::size_t>(f)];
    if (!in_round) {
      if (r && *r == 100) {
        in_round = true;
        start = f;
        last_reading = 100;
        gap = 0;
      }
      continue;
    }
    if (obs[static_cast<std::size_t>(f)].banner) {
      rounds.push_back(RoundBoundary{start, f, *obs[static_cast<std::size_t>(f)].banner, map_id});
      in_round = false;
      continue;
    }
    if (!r) {
      if (++gap > max_gap) in_round = false;  // interrupted: discard
      continue;
    }
    gap = 0;
    if (*r == 0) {
      rounds.push_back(RoundBoundary{start, f, Team::defender, map_id});
      in_round = false;
    } else if (*r == 100 && last_reading < 100) {
      // Timer reset without a banner: close the previous round (winner
      // unknowable from the timer alone; timeout rule applies) and open
      // the next.
      rounds.push_back(RoundBoundary{start, f - 1, Team::defender, map_id});
      start = f;
      last_reading = 100;
    } else {
      last_reading = *r;
    }
  }
  return rounds;
}

}  // namespace vroc

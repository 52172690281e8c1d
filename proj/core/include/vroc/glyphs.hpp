#pragma once

#include <cstdint>
#include <vector>

#include "vroc/fusion.hpp"
#include "vroc/image.hpp"

namespace vroc {

// Bit masks for everything the renderer paints and the vision module
// matches against. Renderer and matcher share these so a clean render
// correlates perfectly with its template.

struct GlyphMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> on;  // row-major 0/1

  bool at(int x, int y) const {
    return on[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
              static_cast<std::size_t>(x)] != 0;
  }
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

inline constexpr Rgb kBackgroundColor{20, 20, 24};
inline constexpr Rgb kBorderColor{60, 60, 70};
inline constexpr Rgb kAttackerColor{230, 70, 60};
inline constexpr Rgb kDefenderColor{70, 200, 215};
inline constexpr Rgb kTimerColor{255, 255, 255};
inline constexpr Rgb kSkillColor{250, 220, 90};
inline constexpr Rgb kSpikeColor{255, 170, 40};

inline Rgb team_color(Team t) { return t == Team::attacker ? kAttackerColor : kDefenderColor; }

// Seven-segment style digit cells, 6x10, used for the round timer.
GlyphMask digit_mask(int digit);  // 0..9
GlyphMask colon_mask();           // same 6x10 cell

// Ten distinct 9x9 agent icons (indices match roster slots).
inline constexpr int kAgentGlyphCount = 10;
GlyphMask agent_mask(int glyph_index);

GlyphMask skill_mask();  // 11x11 flash effect
GlyphMask spike_mask();  // 9x9 planted spike

// 40x10 end-of-round banner, one pattern per winning side.
GlyphMask banner_mask(Team winner);

// Paints only the set bits of the mask.
void paint_glyph(Image& img, const GlyphMask& mask, int x0, int y0, Rgb fg);
// Paints the full mask rectangle: background everywhere, fg on set
// bits. Icons use this so whatever is underneath never bleeds into the
// matched patch.
void paint_glyph_opaque(Image& img, const GlyphMask& mask, int x0, int y0, Rgb fg, Rgb bg);

}  // namespace vroc

#include "vroc/glyphs.hpp"

#include <array>
#include <cstdlib>
#include <string_view>

#include "vroc/errors.hpp"

namespace vroc {
namespace {

GlyphMask from_rows(std::initializer_list<std::string_view> rows) {
  GlyphMask m;
  m.height = static_cast<int>(rows.size());
  m.width = static_cast<int>(rows.begin()->size());
  m.on.reserve(static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height));
  for (std::string_view row : rows)
    for (char c : row) m.on.push_back(c == '#' ? 1 : 0);
  return m;
}

// Classic seven-segment layout in a 6x10 cell:
//   a: top bar, g: middle bar, d: bottom bar
//   f/b: upper left/right, e/c: lower left/right
constexpr std::array<std::uint8_t, 10> kSegments = {
    // bits: a b c d e f g
    0b1111110,  // 0
    0b0110000,  // 1
    0b1101101,  // 2
    0b1111001,  // 3
    0b0110011,  // 4
    0b1011011,  // 5
    0b1011111,  // 6
    0b1110000,  // 7
    0b1111111,  // 8
    0b1111011,  // 9
};

}  // namespace

GlyphMask digit_mask(int digit) {
  if (digit < 0 || digit > 9)
    throw IndexOutOfRangeError("digit_mask: digit out of range: " + std::to_string(digit));
  GlyphMask m;
  m.width = 6;
  m.height = 10;
  m.on.assign(60, 0);
  auto set = [&m](int x, int y) {
    m.on[static_cast<std::size_t>(y) * 6 + static_cast<std::size_t>(x)] = 1;
  };
  const std::uint8_t s = kSegments[static_cast<std::size_t>(digit)];
  const bool a = s & 0b1000000, b = s & 0b0100000, c = s & 0b0010000, d = s & 0b0001000,
             e = s & 0b0000100, f = s & 0b0000010, g = s & 0b0000001;
  for (int x = 1; x <= 4; ++x) {
    if (a) set(x, 0);
    if (g) set(x, 4);
    if (d) set(x, 9);
  }
  for (int y = 1; y <= 3; ++y) {
    if (f) set(0, y);
    if (b) set(5, y);
  }
  for (int y = 5; y <= 8; ++y) {
    if (e) set(0, y);
    if (c) set(5, y);
  }
  return m;
}

GlyphMask colon_mask() {
  return from_rows({
      "......",
      "......",
      "..##..",
      "..##..",
      "......",
      "......",
      "..##..",
      "..##..",
      "......",
      "......",
  });
}

GlyphMask agent_mask(int glyph_index) {
  if (glyph_index < 0 || glyph_index >= kAgentGlyphCount)
    throw IndexOutOfRangeError("agent_mask: index out of range: " + std::to_string(glyph_index));
  switch (glyph_index) {
    case 0:  // ring
      return from_rows({
          ".........",
          "..#####..",
          ".##...##.",
          ".#.....#.",
          ".#.....#.",
          ".#.....#.",
          ".##...##.",
          "..#####..",
          ".........",
      });
    case 1:  // plus
      return from_rows({
          ".........",
          "....#....",
          "....#....",
          "....#....",
          ".#######.",
          "....#....",
          "....#....",
          "....#....",
          ".........",
      });
    case 2:  // cross
      return from_rows({
          ".........",
          ".#.....#.",
          "..#...#..",
          "...#.#...",
          "....#....",
          "...#.#...",
          "..#...#..",
          ".#.....#.",
          ".........",
      });
    case 3:  // diamond outline
      return from_rows({
          ".........",
          "....#....",
          "...#.#...",
          "..#...#..",
          ".#.....#.",
          "..#...#..",
          "...#.#...",
          "....#....",
          ".........",
      });
    case 4:  // tee
      return from_rows({
          ".........",
          ".#######.",
          "....#....",
          "....#....",
          "....#....",
          "....#....",
          "....#....",
          "....#....",
          ".........",
      });
    case 5:  // aitch
      return from_rows({
          ".........",
          ".#.....#.",
          ".#.....#.",
          ".#.....#.",
          ".#######.",
          ".#.....#.",
          ".#.....#.",
          ".#.....#.",
          ".........",
      });
    case 6:  // cup
      return from_rows({
          ".........",
          ".#.....#.",
          ".#.....#.",
          ".#.....#.",
          ".#.....#.",
          ".#.....#.",
          ".##...##.",
          "..#####..",
          ".........",
      });
    case 7:  // zig
      return from_rows({
          ".........",
          ".#######.",
          "......#..",
          ".....#...",
          "....#....",
          "...#.....",
          "..#......",
          ".#######.",
          ".........",
      });
    case 8:  // block
      return from_rows({
          ".........",
          ".........",
          "..#####..",
          "..#####..",
          "..#####..",
          "..#####..",
          "..#####..",
          ".........",
          ".........",
      });
    default:  // 9: vee
      return from_rows({
          ".........",
          ".#.....#.",
          ".#.....#.",
          "..#...#..",
          "..#...#..",
          "...#.#...",
          "...#.#...",
          "....#....",
          ".........",
      });
  }
}

GlyphMask skill_mask() {
  GlyphMask m;
  m.width = 11;
  m.height = 11;
  m.on.assign(121, 0);
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x)
      if (std::abs(x - 5) + std::abs(y - 5) <= 5)
        m.on[static_cast<std::size_t>(y) * 11 + static_cast<std::size_t>(x)] = 1;
  return m;
}

GlyphMask spike_mask() {
  return from_rows({
      ".........",
      ".#######.",
      "..#####..",
      "..#####..",
      "...###...",
      "...###...",
      "....#....",
      "....#....",
      ".........",
  });
}

GlyphMask banner_mask(Team winner) {
  GlyphMask m;
  m.width = 40;
  m.height = 10;
  m.on.assign(400, 0);
  auto set = [&m](int x, int y) {
    m.on[static_cast<std::size_t>(y) * 40 + static_cast<std::size_t>(x)] = 1;
  };
  for (int block = 0; block < 3; ++block) {
    const int cx = 7 + 13 * block;
    if (winner == Team::attacker) {
      // Filled triangles.
      for (int y = 2; y <= 8; ++y)
        for (int x = cx - (y - 2) / 2; x <= cx + (y - 2) / 2; ++x) set(x, y);
    } else {
      // Hollow squares.
      for (int d = -3; d <= 3; ++d) {
        set(cx + d, 2);
        set(cx + d, 8);
      }
      for (int y = 2; y <= 8; ++y) {
        set(cx - 3, y);
        set(cx + 3, y);
      }
    }
  }
  return m;
}

void paint_glyph(Image& img, const GlyphMask& mask, int x0, int y0, Rgb fg) {
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      const int px = x0 + x, py = y0 + y;
      if (!img.in_bounds(px, py)) continue;
      img.at(px, py, 0) = fg.r;
      img.at(px, py, 1) = fg.g;
      img.at(px, py, 2) = fg.b;
    }
}

void paint_glyph_opaque(Image& img, const GlyphMask& mask, int x0, int y0, Rgb fg, Rgb bg) {
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      const int px = x0 + x, py = y0 + y;
      if (!img.in_bounds(px, py)) continue;
      const Rgb c = mask.at(x, y) ? fg : bg;
      img.at(px, py, 0) = c.r;
      img.at(px, py, 1) = c.g;
      img.at(px, py, 2) = c.b;
    }
}

}  // namespace vroc

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/image.hpp"

namespace adaptany {

using Rgb = std::array<double, 3>;  // components in [0,255]

enum class BackgroundTexture { uniform, gradient, blotches, stripes, value_noise };

inline std::string to_string(BackgroundTexture t) {
  switch (t) {
    case BackgroundTexture::uniform: return "uniform";
    case BackgroundTexture::gradient: return "gradient";
    case BackgroundTexture::blotches: return "blotches";
    case BackgroundTexture::stripes: return "stripes";
    case BackgroundTexture::value_noise: return "value_noise";
  }
  return "?";
}

// Procedural surrogate for one visual domain.
struct StyleParams {
  std::string name;
  BackgroundTexture background_texture = BackgroundTexture::uniform;
  std::vector<Rgb> palette;      // background colours
  std::vector<Rgb> ink_palette;  // glyph colours; empty means the inverted background
  bool outline_only = false;
  double stroke_jitter = 0.0;    // >= 0, boundary wobble
  double noise_level = 0.0;      // [0,1], per-pixel gaussian noise
  double geometric_warp = 0.0;   // >= 0, placement/scale/shear jitter

  void validate() const {
    require(!palette.empty(), "style '" + name + "': empty palette");
    require(stroke_jitter >= 0.0 && std::isfinite(stroke_jitter), "style: stroke_jitter must be >= 0");
    require(noise_level >= 0.0 && noise_level <= 1.0, "style: noise_level must lie in [0,1]");
    require(geometric_warp >= 0.0 && std::isfinite(geometric_warp), "style: geometric_warp must be >= 0");
    for (const auto* pal : {&palette, &ink_palette})
      for (const auto& c : *pal)
        for (double v : c) require(v >= 0.0 && v <= 255.0, "style: palette entries must be in [0,255]");
  }
};

// Named surrogate domains.
inline const std::map<std::string, StyleParams>& style_table() {
  static const std::map<std::string, StyleParams> table = [] {
    std::map<std::string, StyleParams> t;
    t["flat"] = {"flat", BackgroundTexture::uniform,
                 {{232, 232, 232}, {218, 224, 232}, {238, 230, 216}},
                 {{24, 24, 24}, {30, 36, 96}, {96, 28, 28}},
                 false, 0.0, 0.04, 0.25};
    t["textured"] = {"textured", BackgroundTexture::blotches,
                     {{250, 200, 200}, {200, 235, 200}, {200, 215, 250}, {250, 240, 190},
                      {235, 205, 245}, {195, 240, 240}, {250, 220, 190}},
                     {{25, 25, 25}, {30, 30, 110}, {110, 25, 25}, {20, 80, 30}},
                     true, 0.4, 0.08, 0.35};
    t["sketch"] = {"sketch", BackgroundTexture::uniform,
                   {{250, 250, 250}, {244, 240, 230}},
                   {{40, 40, 40}, {70, 70, 70}},
                   true, 0.6, 0.05, 0.3};
    t["striped"] = {"striped", BackgroundTexture::stripes,
                    {{210, 210, 240}, {120, 120, 170}, {240, 220, 200}, {150, 110, 90}},
                    {{250, 250, 250}, {10, 10, 10}},
                    false, 0.2, 0.06, 0.3};
    t["gradient"] = {"gradient", BackgroundTexture::gradient,
                     {{40, 40, 80}, {200, 120, 60}, {60, 140, 160}, {230, 230, 190}},
                     {{250, 240, 120}, {20, 20, 20}, {250, 250, 250}},
                     false, 0.1, 0.05, 0.3};
    t["noisy"] = {"noisy", BackgroundTexture::value_noise,
                  {{90, 90, 90}, {170, 170, 170}, {120, 150, 110}, {160, 130, 100}},
                  {{250, 60, 60}, {30, 30, 200}, {250, 250, 250}},
                  false, 0.2, 0.2, 0.3};
    return t;
  }();
  return table;
}

inline const StyleParams& style_by_name(const std::string& name) {
  const auto& t = style_table();
  const auto it = t.find(name);
  if (it == t.end()) {
    std::string known;
    for (const auto& [k, v] : t) known += (known.empty() ? "" : ", ") + k;
    throw InvalidArgument("unknown style '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

enum class GlyphFamily {
  disk, square, triangle_up, plus, ring, diamond, hbar, vbar,
  xcross, hourglass, triangle_down, two_dots, tee, aitch, frame, dome
};
inline constexpr int kGlyphFamilies = 16;

struct GlyphSpec {
  GlyphFamily family;
  double scale;  // relative glyph size
  enum class Fill { solid, outline, holed } fill;
};

// Fixed category -> glyph table: 16 families x 5 variants. Every family is
// mirror-symmetric about the vertical axis so horizontal flips keep labels.
inline constexpr int kGlyphTableSize = kGlyphFamilies * 5;

inline GlyphSpec glyph_for_category(int category_id) {
  if (category_id < 0 || category_id >= kGlyphTableSize)
    throw InvalidArgument("category_id " + std::to_string(category_id) +
                          " outside the procedural glyph table (size " +
                          std::to_string(kGlyphTableSize) + ")");
  const auto family = static_cast<GlyphFamily>(category_id % kGlyphFamilies);
  switch (category_id / kGlyphFamilies) {
    case 0: return {family, 1.0, GlyphSpec::Fill::solid};
    case 1: return {family, 0.55, GlyphSpec::Fill::solid};
    case 2: return {family, 1.0, GlyphSpec::Fill::outline};
    case 3: return {family, 1.0, GlyphSpec::Fill::holed};
    default: return {family, 0.6, GlyphSpec::Fill::outline};
  }
}

namespace detail {

inline double sd_box(double u, double v, double hx, double hy) {
  const double dx = std::abs(u) - hx;
  const double dy = std::abs(v) - hy;
  return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0)) + std::min(std::max(dx, dy), 0.0);
}

inline double sd_triangle_up(double u, double v) {
  // apex (0,-0.8), base at v=0.65 with half-width 0.8
  const double edge = (std::abs(u) * 1.45 - 0.8 * (v + 0.8)) / std::hypot(1.45, 0.8);
  return std::max(v - 0.65, edge);
}

// Signed distance (negative inside) in glyph coordinates, v pointing down.
inline double glyph_sdf(GlyphFamily f, double u, double v) {
  const double r = std::hypot(u, v);
  switch (f) {
    case GlyphFamily::disk: return r - 0.8;
    case GlyphFamily::square: return sd_box(u, v, 0.68, 0.68);
    case GlyphFamily::triangle_up: return sd_triangle_up(u, v);
    case GlyphFamily::plus: return std::min(sd_box(u, v, 0.82, 0.24), sd_box(u, v, 0.24, 0.82));
    case GlyphFamily::ring: return std::abs(r - 0.6) - 0.2;
    case GlyphFamily::diamond: return (std::abs(u) + std::abs(v) - 0.88) / std::sqrt(2.0);
    case GlyphFamily::hbar: return sd_box(u, v, 0.85, 0.26);
    case GlyphFamily::vbar: return sd_box(u, v, 0.26, 0.85);
    case GlyphFamily::xcross: {
      const double a = (u + v) / std::sqrt(2.0);
      const double b = (v - u) / std::sqrt(2.0);
      return std::min(sd_box(a, b, 0.9, 0.2), sd_box(b, a, 0.9, 0.2));
    }
    case GlyphFamily::hourglass:
      return std::max(std::abs(v) - 0.8, (std::abs(u) - std::abs(v)) / std::sqrt(2.0));
    case GlyphFamily::triangle_down: return sd_triangle_up(u, -v);
    case GlyphFamily::two_dots:
      return std::min(std::hypot(u - 0.46, v) - 0.32, std::hypot(u + 0.46, v) - 0.32);
    case GlyphFamily::tee:
      return std::min(sd_box(u, v + 0.6, 0.82, 0.2), sd_box(u, v - 0.15, 0.2, 0.65));
    case GlyphFamily::aitch:
      return std::min({sd_box(u - 0.55, v, 0.2, 0.8), sd_box(u + 0.55, v, 0.2, 0.8),
                       sd_box(u, v, 0.55, 0.17)});
    case GlyphFamily::frame:
      return std::abs(std::max(std::abs(u), std::abs(v)) - 0.62) - 0.17;
    case GlyphFamily::dome: return std::max(r - 0.82, v - 0.25);
  }
  return 1.0;
}

inline Rgb pick(const std::vector<Rgb>& pal, Rng& rng) {
  return pal[static_cast<std::size_t>(rng.index(static_cast<int>(pal.size())))];
}

inline Rgb jitter_colour(Rgb c, double amount, Rng& rng) {
  for (auto& v : c) v = std::clamp(v + amount * rng.uniform(-1.0, 1.0), 0.0, 255.0);
  return c;
}

}  // namespace detail

// Deterministic render: the category picks the glyph, the style the
// background, colours and distortions, the seed the per-image draws.
inline Image procedural_render(int category_id, const StyleParams& style, ImageShape shape,
                               std::uint64_t seed) {
  if (shape.channels != 3) throw InvalidArgument("procedural_render supports 3-channel images only");
  require(shape.height >= 4 && shape.width >= 4, "procedural_render: image too small");
  style.validate();
  const GlyphSpec glyph = glyph_for_category(category_id);
  Rng rng(seed);
  const int H = shape.height;
  const int W = shape.width;

  // Background field.
  std::vector<Rgb> bg(static_cast<std::size_t>(H) * W);
  const Rgb base = detail::jitter_colour(detail::pick(style.palette, rng), 10.0, rng);
  switch (style.background_texture) {
    case BackgroundTexture::uniform:
      std::fill(bg.begin(), bg.end(), base);
      break;
    case BackgroundTexture::gradient: {
      const Rgb other = detail::pick(style.palette, rng);
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      const double cx = std::cos(angle), cy = std::sin(angle);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const double u = (x + 0.5) / W * 2 - 1, v = (y + 0.5) / H * 2 - 1;
          const double t = std::clamp(0.5 + 0.35 * (u * cx + v * cy), 0.0, 1.0);
          for (int c = 0; c < 3; ++c) bg[y * W + x][c] = (1 - t) * base[c] + t * other[c];
        }
      break;
    }
    case BackgroundTexture::blotches: {
      std::fill(bg.begin(), bg.end(), base);
      const int blobs = 4 + rng.index(4);
      for (int b = 0; b < blobs; ++b) {
        const Rgb col = detail::pick(style.palette, rng);
        const double bx = rng.uniform(-1.1, 1.1), by = rng.uniform(-1.1, 1.1);
        const double rad = rng.uniform(0.25, 0.7);
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            const double u = (x + 0.5) / W * 2 - 1, v = (y + 0.5) / H * 2 - 1;
            const double d2 = ((u - bx) * (u - bx) + (v - by) * (v - by)) / (rad * rad);
            const double w = std::exp(-d2);
            for (int c = 0; c < 3; ++c) bg[y * W + x][c] = (1 - w) * bg[y * W + x][c] + w * col[c];
          }
      }
      break;
    }
    case BackgroundTexture::stripes: {
      const Rgb other = detail::pick(style.palette, rng);
      const double angle = rng.uniform(0.0, M_PI);
      const double freq = rng.uniform(3.0, 7.0);
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const double u = (x + 0.5) / W * 2 - 1, v = (y + 0.5) / H * 2 - 1;
          const double t = 0.5 + 0.5 * std::sin(freq * (u * std::cos(angle) + v * std::sin(angle)) + phase);
          for (int c = 0; c < 3; ++c) bg[y * W + x][c] = (1 - t) * base[c] + t * other[c];
        }
      break;
    }
    case BackgroundTexture::value_noise: {
      constexpr int G = 5;
      std::array<Rgb, G * G> grid;
      for (auto& g : grid) g = detail::jitter_colour(detail::pick(style.palette, rng), 25.0, rng);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const double gy = static_cast<double>(y) / std::max(1, H - 1) * (G - 1);
          const double gx = static_cast<double>(x) / std::max(1, W - 1) * (G - 1);
          const int y0 = std::min(G - 2, static_cast<int>(gy)), x0 = std::min(G - 2, static_cast<int>(gx));
          const double ty = gy - y0, tx = gx - x0;
          for (int c = 0; c < 3; ++c) {
            const double top = (1 - tx) * grid[y0 * G + x0][c] + tx * grid[y0 * G + x0 + 1][c];
            const double bot = (1 - tx) * grid[(y0 + 1) * G + x0][c] + tx * grid[(y0 + 1) * G + x0 + 1][c];
            bg[y * W + x][c] = (1 - ty) * top + ty * bot;
          }
        }
      break;
    }
  }

  // Glyph colour: an ink entry visibly different from the base background,
  // or, without an ink palette, the per-pixel inverse of the background.
  const bool invert_ink = style.ink_palette.empty();
  Rgb ink{};
  if (!invert_ink) {
    ink = detail::pick(style.ink_palette, rng);
    for (int tries = 0; tries < 8; ++tries) {
      const double dist = std::abs(ink[0] - base[0]) + std::abs(ink[1] - base[1]) + std::abs(ink[2] - base[2]);
      if (dist > 90.0) break;
      ink = detail::pick(style.ink_palette, rng);
    }
    ink = detail::jitter_colour(ink, 12.0, rng);
  }

  // Per-image placement.
  const double warp = style.geometric_warp;
  const double tx = 0.5 * warp * rng.uniform(-1.0, 1.0);
  const double ty = 0.5 * warp * rng.uniform(-1.0, 1.0);
  const double scale = 0.72 * glyph.scale * std::exp(0.5 * warp * rng.uniform(-1.0, 1.0));
  const double shear = 0.4 * warp * rng.uniform(-1.0, 1.0);
  const double wob_a = rng.uniform(4.0, 9.0), wob_b = rng.uniform(4.0, 9.0);
  const double wob_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double px_per_unit = 0.5 * std::min(H, W);
  const double outline_half = std::max(0.12, 0.9 / (px_per_unit * scale));

  Image img(shape);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double u = (x + 0.5) / W * 2 - 1, v = (y + 0.5) / H * 2 - 1;
      const double gv = (v - ty) / scale;
      const double gu = (u - tx) / scale - shear * gv;
      double d = detail::glyph_sdf(glyph.family, gu, gv);
      if (glyph.fill == GlyphSpec::Fill::holed) d = std::max(d, 0.28 - std::hypot(gu, gv));
      if (glyph.fill == GlyphSpec::Fill::outline || style.outline_only) d = std::abs(d) - outline_half;
      d += style.stroke_jitter * 0.08 * std::sin(wob_a * gu + wob_b * gv + wob_phase);
      const double alpha = std::clamp(0.5 - d * scale * px_per_unit, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        const double b = bg[y * W + x][c];
        double val = (1 - alpha) * b + alpha * (invert_ink ? 255.0 - b : ink[c]);
        if (style.noise_level > 0) val += 255.0 * 0.25 * style.noise_level * rng.normal();
        img.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(val, 0.0, 255.0)));
      }
    }
  }
  return img;
}

}  // namespace adaptany

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <vector>

#include "cot/dataset.hpp"
#include "cot/errors.hpp"

namespace cot {
namespace {

constexpr std::size_t kSide = 28;

struct Point {
  double x;
  double y;
};

struct Segment {
  Point a;
  Point b;
};

// Seven-segment layout in the unit square:
//
//    A          corners: TL(0.25,0.15) TR(0.75,0.15)
//   F B                  ML(0.25,0.50) MR(0.75,0.50)
//    G                   BL(0.25,0.85) BR(0.75,0.85)
//   E C
//    D
constexpr Point kTL{0.25, 0.15}, kTR{0.75, 0.15};
constexpr Point kML{0.25, 0.50}, kMR{0.75, 0.50};
constexpr Point kBL{0.25, 0.85}, kBR{0.75, 0.85};

constexpr std::array<Segment, 7> kSegments = {{
    {kTL, kTR},  // A top
    {kTR, kMR},  // B upper right
    {kMR, kBR},  // C lower right
    {kBL, kBR},  // D bottom
    {kML, kBL},  // E lower left
    {kTL, kML},  // F upper left
    {kML, kMR},  // G middle
}};

// Active segments per digit, bit i = segment i (A..G).
constexpr std::array<unsigned, 10> kDigitSegments = {
    0b0111111,  // 0: ABCDEF
    0b0000110,  // 1: BC
    0b1011011,  // 2: ABDEG
    0b1001111,  // 3: ABCDG
    0b1100110,  // 4: BCFG
    0b1101101,  // 5: ACDFG
    0b1111101,  // 6: ACDEFG
    0b0000111,  // 7: ABC
    0b1111111,  // 8: all
    0b1101111,  // 9: ABCDFG
};

double point_segment_distance(Point p, const Segment& s) {
  const double vx = s.b.x - s.a.x;
  const double vy = s.b.y - s.a.y;
  const double wx = p.x - s.a.x;
  const double wy = p.y - s.a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? (wx * vx + wy * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (s.a.x + t * vx);
  const double dy = p.y - (s.a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Dataset gen_digits(std::size_t n, double noise, Rng& rng) {
  if (n < 10) throw InputError("gen_digits: need at least one sample per digit");
  if (noise < 0.0) throw InputError("gen_digits: noise must be >= 0");
  std::vector<double> pixels;
  pixels.reserve(n * kSide * kSide);
  std::vector<int> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int digit = static_cast<int>(i % 10);
    labels.push_back(digit);

    const double scale = 0.85 + 0.25 * rng.uniform();
    const double angle = 0.15 * (2.0 * rng.uniform() - 1.0);
    const double shift_x = 2.5 * (2.0 * rng.uniform() - 1.0) / kSide;
    const double shift_y = 2.5 * (2.0 * rng.uniform() - 1.0) / kSide;
    const double stroke = 1.1 + 0.8 * rng.uniform();  // in pixels
    const double amplitude = 0.75 + 0.25 * rng.uniform();
    const double cos_a = std::cos(angle);
    const double sin_a = std::sin(angle);
    const unsigned mask = kDigitSegments[static_cast<std::size_t>(digit)];

    for (std::size_t py = 0; py < kSide; ++py) {
      for (std::size_t px = 0; px < kSide; ++px) {
        // Map the pixel center back into glyph space (inverse of
        // scale-about-center, rotate, translate).
        const double cx = (static_cast<double>(px) + 0.5) / kSide - 0.5 - shift_x;
        const double cy = (static_cast<double>(py) + 0.5) / kSide - 0.5 - shift_y;
        const Point g{(cos_a * cx + sin_a * cy) / scale + 0.5,
                      (-sin_a * cx + cos_a * cy) / scale + 0.5};
        double dist = 1e9;
        for (std::size_t s = 0; s < kSegments.size(); ++s) {
          if (mask & (1u << s)) {
            dist = std::min(dist, point_segment_distance(g, kSegments[s]));
          }
        }
        const double dist_px = dist * kSide * scale;
        double v = amplitude / (1.0 + std::exp((dist_px - stroke) / 0.35));
        if (noise > 0.0) v += noise * rng.normal();
        pixels.push_back(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  Dataset ds;
  ds.features = Tensor({n, kSide * kSide}, std::move(pixels));
  ds.labels = std::move(labels);
  ds.num_classes = 10;
  ds.name = "digits";
  char params[64];
  std::snprintf(params, sizeof params, "n=%zu noise=%g", n, noise);
  ds.generation_params = params;
  ds.value_range = {0.0, 1.0};
  ds.validate();
  return ds;
}

}  // namespace cot

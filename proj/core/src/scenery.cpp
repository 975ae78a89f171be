#include "sketchout/scenery.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sketchout {
namespace {

using Color = std::array<float, 3>;  // RGB in [0,1]

double jitter(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Color mix(const Color& a, const Color& b, double t) {
  Color c{};
  for (int k = 0; k < 3; ++k) c[k] = static_cast<float>(a[k] + (b[k] - a[k]) * t);
  return c;
}

/// Ridge heights (row index of the silhouette) for every column by
/// midpoint displacement over a power-of-two lattice.
std::vector<double> ridge_profile(Rng& rng, int64_t width, double base, double amplitude) {
  int64_t n = 1;
  while (n < width) n <<= 1;
  std::vector<double> h(static_cast<size_t>(n) + 1, 0.0);
  h.front() = base + jitter(rng, -amplitude, amplitude);
  h.back() = base + jitter(rng, -amplitude, amplitude);
  double spread = amplitude;
  for (int64_t step = n; step > 1; step /= 2) {
    for (int64_t i = 0; i + step <= n; i += step) {
      const auto mid = static_cast<size_t>(i + step / 2);
      h[mid] = 0.5 * (h[static_cast<size_t>(i)] + h[static_cast<size_t>(i + step)]) +
               jitter(rng, -spread, spread);
    }
    spread *= 0.55;
  }
  h.resize(static_cast<size_t>(width));
  return h;
}

}  // namespace

SyntheticScene synth_scenery(Rng& rng, int64_t height, int64_t width) {
  if (height < 32 || width < 32) {
    throw std::invalid_argument("synth_scenery: dimensions must be >= 32, got " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  SceneryLayout layout;
  layout.ridges = static_cast<int>(uniform_int(rng, 1, 3));
  layout.sun = uniform01(rng) < 0.5;
  layout.clouds = static_cast<int>(uniform_int(rng, 0, 3));

  const double H = static_cast<double>(height);
  const double W = static_cast<double>(width);

  const Color sky_top = mix({0.45f, 0.65f, 0.95f}, {0.95f, 0.75f, 0.55f}, jitter(rng, 0.0, 0.35));
  const Color sky_low = mix(sky_top, {0.97f, 0.95f, 0.90f}, jitter(rng, 0.3, 0.6));
  const Color ground = mix({0.20f, 0.35f, 0.15f}, {0.35f, 0.28f, 0.18f}, jitter(rng, 0.0, 1.0));

  std::vector<float> rgb(static_cast<size_t>(3 * height * width));
  const auto put = [&](int64_t i, int64_t j, const Color& c) {
    for (int k = 0; k < 3; ++k) {
      rgb[static_cast<size_t>((k * height + i) * width + j)] = c[static_cast<size_t>(k)];
    }
  };

  for (int64_t i = 0; i < height; ++i) {
    const Color row = mix(sky_top, sky_low, static_cast<double>(i) / (H - 1.0));
    for (int64_t j = 0; j < width; ++j) put(i, j, row);
  }

  if (layout.sun) {
    const double cx = jitter(rng, 0.1, 0.9) * W;
    const double cy = jitter(rng, 0.08, 0.25) * H;
    const double r = jitter(rng, 0.04, 0.08) * H;
    const Color sun{1.0f, 0.95f, 0.7f};
    for (int64_t i = 0; i < height; ++i) {
      for (int64_t j = 0; j < width; ++j) {
        const double dx = static_cast<double>(j) - cx;
        const double dy = static_cast<double>(i) - cy;
        if (dx * dx + dy * dy <= r * r) put(i, j, sun);
      }
    }
  }

  for (int c = 0; c < layout.clouds; ++c) {
    const double cx = jitter(rng, 0.0, 1.0) * W;
    const double cy = jitter(rng, 0.05, 0.3) * H;
    const double rx = jitter(rng, 0.06, 0.15) * W;
    const double ry = jitter(rng, 0.02, 0.05) * H;
    const Color cloud = mix({0.98f, 0.98f, 0.98f}, {0.85f, 0.87f, 0.9f}, jitter(rng, 0.0, 1.0));
    for (int64_t i = 0; i < height; ++i) {
      for (int64_t j = 0; j < width; ++j) {
        const double dx = (static_cast<double>(j) - cx) / rx;
        const double dy = (static_cast<double>(i) - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) put(i, j, cloud);
      }
    }
  }

  // farther ridges are paler and higher; nearer ones darker and lower
  const double ground_top = jitter(rng, 0.72, 0.82) * H;
  for (int r = 0; r < layout.ridges; ++r) {
    const double depth = layout.ridges == 1 ? 1.0 : static_cast<double>(r) / (layout.ridges - 1);
    const double base = (0.38 + 0.2 * depth + jitter(rng, -0.03, 0.03)) * H;
    const auto profile = ridge_profile(rng, width, base, 0.12 * H);
    const Color far{0.55f, 0.58f, 0.68f};
    const Color near{0.25f, 0.3f, 0.28f};
    const Color rock = mix(far, near, depth * jitter(rng, 0.8, 1.0));
    for (int64_t j = 0; j < width; ++j) {
      const auto top = static_cast<int64_t>(std::max(0.0, std::round(profile[static_cast<size_t>(j)])));
      for (int64_t i = top; i < height; ++i) put(i, j, rock);
    }
  }

  for (int64_t i = static_cast<int64_t>(ground_top); i < height; ++i) {
    const double t = (static_cast<double>(i) - ground_top) / std::max(1.0, H - ground_top);
    const Color row = mix(ground, {ground[0] * 0.7f, ground[1] * 0.7f, ground[2] * 0.7f}, t);
    for (int64_t j = 0; j < width; ++j) put(i, j, row);
  }

  auto image = torch::from_blob(rgb.data(), {3, height, width}, torch::kFloat).clone();
  return {image * 2.0f - 1.0f, layout};
}

}  // namespace sketchout

#pragma once

#include <cstdint>
#include <string>

namespace sketchout {

/// Resolution and width schedule of one generator/critic instantiation.
///
/// The reference layout takes a 128x128 left half and produces a 128x256
/// image through a 4x4x512 bottleneck. Smaller instantiations keep the
/// layer structure and shrink spatial sizes and channel widths uniformly.
struct ArchitectureScale {
  int64_t half_height = 128;
  int64_t half_width = 128;
  /// Every reference channel width is divided by this (power of two).
  int64_t channel_divisor = 1;

  static ArchitectureScale full();
  /// Spatial dims halved, channel widths divided by four.
  static ArchitectureScale desk();
  /// Accepts "full", "desk" or "HxW/div" (e.g. "32x32/8").
  static ArchitectureScale parse(const std::string& text);

  int64_t full_width() const { return 2 * half_width; }
  /// Reference width `reference` scaled down; never below one.
  int64_t channels(int64_t reference) const;

  int64_t bottleneck_height() const { return half_height / 32; }
  int64_t bottleneck_width() const { return half_width / 32; }
  int64_t bottleneck_channels() const { return channels(512); }
  /// Width of one LSTM step (one bottleneck column) and of the LSTM state.
  int64_t hidden_size() const { return bottleneck_height() * bottleneck_channels(); }

  /// Throws std::invalid_argument unless the layer arithmetic closes.
  void validate() const;
  std::string name() const;

  friend bool operator==(const ArchitectureScale&, const ArchitectureScale&) = default;
};

}  // namespace sketchout

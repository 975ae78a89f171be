#include "sketchout/scale.hpp"

#include <charconv>
#include <stdexcept>

namespace sketchout {
namespace {

bool is_power_of_two(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

int64_t parse_int(std::string_view text) {
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

ArchitectureScale ArchitectureScale::full() { return {128, 128, 1}; }

ArchitectureScale ArchitectureScale::desk() { return {64, 64, 4}; }

ArchitectureScale ArchitectureScale::parse(const std::string& text) {
  if (text == "full") return full();
  if (text == "desk") return desk();
  const auto x = text.find('x');
  const auto slash = text.find('/');
  if (x == std::string::npos || slash == std::string::npos || slash < x) {
    throw std::invalid_argument("unknown scale '" + text + "' (expected full, desk or HxW/div)");
  }
  std::string_view view(text);
  ArchitectureScale scale{parse_int(view.substr(0, x)), parse_int(view.substr(x + 1, slash - x - 1)),
                          parse_int(view.substr(slash + 1))};
  scale.validate();
  return scale;
}

int64_t ArchitectureScale::channels(int64_t reference) const {
  const int64_t c = reference / channel_divisor;
  return c < 1 ? 1 : c;
}

void ArchitectureScale::validate() const {
  if (half_height < 32 || half_height % 32 != 0 || half_width < 32 || half_width % 32 != 0) {
    throw std::invalid_argument("scale: half-image dims must be positive multiples of 32, got " +
                                std::to_string(half_height) + "x" + std::to_string(half_width));
  }
  if (!is_power_of_two(bottleneck_width())) {
    throw std::invalid_argument("scale: half_width/32 must be a power of two");
  }
  if (!is_power_of_two(channel_divisor) || channel_divisor > 64) {
    throw std::invalid_argument("scale: channel_divisor must be a power of two <= 64");
  }
}

std::string ArchitectureScale::name() const {
  if (*this == full()) return "full";
  if (*this == desk()) return "desk";
  return std::to_string(half_height) + "x" + std::to_string(half_width) + "/" +
         std::to_string(channel_divisor);
}

}  // namespace sketchout

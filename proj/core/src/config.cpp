#include "sketchout/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sketchout {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: bad value for '" + key + "': '" + value + "'");
  }
  return out;
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter number(T TrainConfig::*field) {
  return [field](TrainConfig& c, const std::string& k, const std::string& v) {
    c.*field = parse_number<T>(k, v);
  };
}

Setter weight(double LossWeights::*field) {
  return [field](TrainConfig& c, const std::string& k, const std::string& v) {
    c.weights.*field = parse_number<double>(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"batch_size", number(&TrainConfig::batch_size)},
      {"lr0", number(&TrainConfig::lr0)},
      {"lr_decay_epoch", number(&TrainConfig::lr_decay_epoch)},
      {"lr_decay_factor", number(&TrainConfig::lr_decay_factor)},
      {"epochs", number(&TrainConfig::epochs)},
      {"weights.lambda_r", weight(&LossWeights::lambda_r)},
      {"weights.lambda_a", weight(&LossWeights::lambda_a)},
      {"weights.lambda_s", weight(&LossWeights::lambda_s)},
      {"weights.alpha", weight(&LossWeights::alpha)},
      {"weights.lambda_w", weight(&LossWeights::lambda_w)},
      {"critic_steps_per_gen_step", number(&TrainConfig::critic_steps_per_gen_step)},
      {"seed", number(&TrainConfig::seed)},
      {"scale", [](TrainConfig& c, const std::string&,
                   const std::string& v) { c.scale = ArchitectureScale::parse(v); }},
      {"mask_floor", number(&TrainConfig::mask_floor)},
      {"adam_beta1", number(&TrainConfig::adam_beta1)},
      {"adam_beta2", number(&TrainConfig::adam_beta2)},
      {"crop_margin", number(&TrainConfig::crop_margin)},
      {"edge_detector",
       [](TrainConfig& c, const std::string&, const std::string& v) { c.edge_detector = v; }},
      {"max_steps", number(&TrainConfig::max_steps)},
      {"checkpoint_interval", number(&TrainConfig::checkpoint_interval)},
  };
  return table;
}

std::string trajectory_text(const TrainConfig& c) {
  std::ostringstream os;
  os << "batch_size = " << c.batch_size << "\n"
     << "lr0 = " << format_double(c.lr0) << "\n"
     << "lr_decay_epoch = " << c.lr_decay_epoch << "\n"
     << "lr_decay_factor = " << format_double(c.lr_decay_factor) << "\n"
     << "weights.lambda_r = " << format_double(c.weights.lambda_r) << "\n"
     << "weights.lambda_a = " << format_double(c.weights.lambda_a) << "\n"
     << "weights.lambda_s = " << format_double(c.weights.lambda_s) << "\n"
     << "weights.alpha = " << format_double(c.weights.alpha) << "\n"
     << "weights.lambda_w = " << format_double(c.weights.lambda_w) << "\n"
     << "critic_steps_per_gen_step = " << c.critic_steps_per_gen_step << "\n"
     << "seed = " << c.seed << "\n"
     << "scale = " << c.scale.name() << "\n"
     << "mask_floor = " << format_double(c.mask_floor) << "\n"
     << "adam_beta1 = " << format_double(c.adam_beta1) << "\n"
     << "adam_beta2 = " << format_double(c.adam_beta2) << "\n"
     << "crop_margin = " << format_double(c.crop_margin) << "\n"
     << "edge_detector = " << c.edge_detector << "\n";
  return os.str();
}

}  // namespace

TrainConfig TrainConfig::full_scale() {
  TrainConfig c;
  c.batch_size = 30;
  c.epochs = 800;
  c.scale = ArchitectureScale::full();
  return c;
}

TrainConfig TrainConfig::desk_scale() { return TrainConfig{}; }

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
    }
    it->second(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << trajectory_text(*this) << "epochs = " << epochs << "\n"
     << "max_steps = " << max_steps << "\n"
     << "checkpoint_interval = " << checkpoint_interval << "\n";
  return os.str();
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (!(lr0 > 0) || !(lr_decay_factor > 0)) {
    throw std::invalid_argument("config: learning rates must be positive");
  }
  if (lr_decay_epoch < 0) throw std::invalid_argument("config: lr_decay_epoch must be >= 0");
  if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (critic_steps_per_gen_step < 0) {
    throw std::invalid_argument("config: critic_steps_per_gen_step must be >= 0");
  }
  if (!(mask_floor > 0 && mask_floor <= 1)) {
    throw std::invalid_argument("config: mask_floor must be in (0,1]");
  }
  if (crop_margin < 0) throw std::invalid_argument("config: crop_margin must be >= 0");
  if (max_steps < 0 || checkpoint_interval < 0) {
    throw std::invalid_argument("config: max_steps and checkpoint_interval must be >= 0");
  }
  weights.validate();
  scale.validate();
}

std::string TrainConfig::fingerprint() const { return fnv1a_hex(trajectory_text(*this)); }

MaskingPolicy TrainConfig::masking_policy() const { return MaskingPolicy{}; }

std::pair<int64_t, int64_t> TrainConfig::source_size() const {
  const auto grow = [&](int64_t v) {
    return static_cast<int64_t>(std::llround(static_cast<double>(v) * (1.0 + crop_margin)));
  };
  const int64_t width = grow(scale.full_width());
  return {grow(scale.half_height), width + width % 2};
}

double lr_at(int64_t epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
  return epoch < cfg.lr_decay_epoch ? cfg.lr0 : cfg.lr0 * cfg.lr_decay_factor;
}

std::string fnv1a_hex(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sketchout

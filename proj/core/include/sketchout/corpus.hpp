#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "sketchout/scenery.hpp"

namespace sketchout {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusItem {
  std::string name;
  torch::Tensor image;                  // [3,H,W] in [-1,1]
  std::optional<SceneryLayout> layout;  // known for synthetic scenes
};

/// Decoded images in a stable order plus the warnings raised while loading.
struct Corpus {
  std::vector<CorpusItem> items;
  std::vector<std::string> warnings;

  size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  std::vector<torch::Tensor> images() const;
};

/// Scales so the image covers height x width (preserving aspect), then
/// center-crops to exactly that size.
cv::Mat resize_cover_crop(const cv::Mat& image, int64_t height, int64_t width);

/// Loads every decodable image under `dir` (non-recursive). If the directory
/// holds `manifest.txt`, its lines (relative paths) define the order;
/// otherwise files are sorted by name. Undecodable files produce a warning
/// and are skipped; a corpus with no usable image throws CorpusError.
Corpus load_corpus(const std::filesystem::path& dir, int64_t height, int64_t width);

/// `count` procedural scenes; scene i depends only on (seed, i).
Corpus synthetic_corpus(size_t count, uint64_t seed, int64_t height, int64_t width);

/// "synthetic:N[:seed]" or a directory path.
Corpus open_corpus(const std::string& source, int64_t height, int64_t width);

}  // namespace sketchout

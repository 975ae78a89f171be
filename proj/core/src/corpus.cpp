#include "sketchout/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <opencv2/imgproc.hpp>

#include "sketchout/image_io.hpp"

namespace sketchout {
namespace fs = std::filesystem;

std::vector<torch::Tensor> Corpus::images() const {
  std::vector<torch::Tensor> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.image);
  return out;
}

cv::Mat resize_cover_crop(const cv::Mat& image, int64_t height, int64_t width) {
  const double scale = std::max(static_cast<double>(height) / image.rows,
                                static_cast<double>(width) / image.cols);
  const int rows = std::max(static_cast<int>(height), static_cast<int>(std::lround(image.rows * scale)));
  const int cols = std::max(static_cast<int>(width), static_cast<int>(std::lround(image.cols * scale)));
  cv::Mat resized;
  if (rows == image.rows && cols == image.cols) {
    resized = image;
  } else {
    cv::resize(image, resized, cv::Size(cols, rows), 0, 0,
               scale < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
  }
  const int top = (rows - static_cast<int>(height)) / 2;
  const int left = (cols - static_cast<int>(width)) / 2;
  return resized(cv::Rect(left, top, static_cast<int>(width), static_cast<int>(height))).clone();
}

namespace {

bool has_image_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  static const char* kExt[] = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp", ".ppm", ".pgm"};
  return std::any_of(std::begin(kExt), std::end(kExt), [&](const char* e) { return ext == e; });
}

std::vector<fs::path> list_files(const fs::path& dir) {
  const auto manifest = dir / "manifest.txt";
  std::vector<fs::path> files;
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      files.push_back(dir / line);
    }
    return files;
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

Corpus load_corpus(const fs::path& dir, int64_t height, int64_t width) {
  if (!fs::is_directory(dir)) throw CorpusError("corpus directory not found: " + dir.string());
  Corpus corpus;
  for (const auto& file : list_files(dir)) {
    cv::Mat mat = read_image(file);
    if (mat.empty()) {
      corpus.warnings.push_back("skipping unreadable image " + file.string());
      continue;
    }
    corpus.items.push_back(
        {fs::relative(file, dir).string(), image_from_mat(resize_cover_crop(mat, height, width)), {}});
  }
  if (corpus.empty()) throw CorpusError("empty corpus: no decodable images in " + dir.string());
  return corpus;
}

Corpus synthetic_corpus(size_t count, uint64_t seed, int64_t height, int64_t width) {
  if (count == 0) throw CorpusError("empty corpus: synthetic corpus of size 0");
  Corpus corpus;
  corpus.items.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    auto rng = make_rng(seed, {0x5ce9e, i});
    auto scene = synth_scenery(rng, height, width);
    corpus.items.push_back({"synthetic_" + std::to_string(i), scene.image, scene.layout});
  }
  return corpus;
}

Corpus open_corpus(const std::string& source, int64_t height, int64_t width) {
  constexpr std::string_view kSynthetic = "synthetic:";
  if (source.rfind(kSynthetic, 0) == 0) {
    const auto rest = source.substr(kSynthetic.size());
    const auto colon = rest.find(':');
    const size_t count = std::stoul(rest.substr(0, colon));
    const uint64_t seed = colon == std::string::npos ? 0 : std::stoull(rest.substr(colon + 1));
    return synthetic_corpus(count, seed, height, width);
  }
  return load_corpus(source, height, width);
}

}  // namespace sketchout

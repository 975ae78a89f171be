#pragma once

#include <torch/torch.h>

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sketchout/checkpoint.hpp"
#include "sketchout/corpus.hpp"
#include "sketchout/edges.hpp"
#include "sketchout/extractors.hpp"

namespace sketchout {

struct FeatureStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  int64_t n = 0;
};

/// exp(mean_i KL(p_i || mean_j p_j)). Rows must be non-negative and sum to 1
/// within 1e-6; log arguments are clamped at 1e-12.
double inception_score(const Eigen::MatrixXd& class_probs);

/// |mu_r - mu_f|^2 + Tr(S_r + S_f - 2 (S_r^1/2 S_f S_r^1/2)^1/2).
double frechet_distance(const FeatureStats& real, const FeatureStats& fake);

/// Symmetric PSD square root by eigendecomposition; eigenvalues above -1e-8
/// are clipped to 0, anything more negative throws.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

/// Mean and unbiased covariance of feature rows. Needs at least 2 rows.
FeatureStats stats_from_features(const Eigen::MatrixXd& features);

/// Features extracted in chunks of `chunk` images, then stats_from_features.
FeatureStats compute_stats(const std::vector<torch::Tensor>& images,
                           const FeatureExtractor& extractor, int64_t chunk = 16);

Eigen::MatrixXd to_eigen(const torch::Tensor& matrix);

struct Rating {
  std::string example_id;
  int rating = 0;
  std::string rater_id;
  std::string timestamp;  // ISO 8601, UTC
};

/// Lines of `example_id,rating,rater_id,timestamp_iso8601`.
struct RatingLog {
  std::vector<Rating> entries;

  /// Blank lines are skipped. Malformed lines and ratings outside {0,1,2}
  /// throw std::invalid_argument naming the line number.
  static RatingLog parse(std::string_view text);
  static RatingLog load(const std::filesystem::path& path);
};

std::string format_rating(const Rating& rating);
/// Throws std::invalid_argument for ratings outside {0,1,2} or ids that
/// contain commas or line breaks.
void validate_rating(const Rating& rating);
std::string iso8601_utc_now();

double mean_satisfaction(const RatingLog& log);

struct EvaluationReport {
  double fid = 0;
  double is = 0;
  int64_t n = 0;
  std::string extractor;
  std::string classifier;
  std::string fingerprint;

  std::string to_json() const;
};

/// Rebuilds every corpus image's right half from its own true right sketch
/// (left half pasted back from the input), then FID of rebuilt full images
/// vs ground truth and IS of the rebuilt images.
EvaluationReport evaluate_rebuild(const ModelCheckpoint& checkpoint, const Corpus& corpus,
                                  const FeatureExtractor& extractor, const Classifier& classifier,
                                  const EdgeDetector& detector, int64_t batch = 8);

}  // namespace sketchout

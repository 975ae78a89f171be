#include "sketchout/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "sketchout/data.hpp"
#include "sketchout/raster.hpp"
#include "sketchout/training.hpp"

namespace sketchout {

double inception_score(const Eigen::MatrixXd& p) {
  if (p.rows() < 1 || p.cols() < 1) throw std::invalid_argument("inception_score: empty matrix");
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if ((p.row(i).array() < 0.0).any() || !p.row(i).allFinite()) {
      throw std::invalid_argument("inception_score: row " + std::to_string(i) +
                                  " has negative or non-finite entries");
    }
    if (std::abs(p.row(i).sum() - 1.0) > 1e-6) {
      throw std::invalid_argument("inception_score: row " + std::to_string(i) +
                                  " does not sum to 1");
    }
  }
  const Eigen::RowVectorXd marginal = p.colwise().mean();
  const Eigen::ArrayXXd log_p = p.array().max(1e-12).log();
  const Eigen::RowVectorXd log_m = marginal.array().max(1e-12).log().matrix();
  double kl_sum = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    kl_sum += (p.row(i).array() * (log_p.row(i) - log_m.array())).sum();
  }
  return std::exp(kl_sum / static_cast<double>(p.rows()));
}

namespace {

torch::Tensor symmetric_tensor(const Eigen::MatrixXd& m) {
  // column-major buffer read as row-major is the transpose
  auto t = torch::from_blob(const_cast<double*>(m.data()), {m.rows(), m.cols()}, torch::kDouble);
  return 0.5 * (t + t.t());
}

/// LAPACK-backed symmetric square root; eigenvalues in [-1e-8, 0) are clipped.
torch::Tensor psd_sqrt(const torch::Tensor& sym) {
  auto [values, vectors] = torch::linalg_eigh(sym);
  const double smallest = sym.size(0) > 0 ? values.min().item<double>() : 0.0;
  if (smallest < -1e-8) {
    throw std::invalid_argument("matrix is not positive semi-definite (eigenvalue " +
                                std::to_string(smallest) + ")");
  }
  auto root = torch::matmul(vectors * values.clamp_min(0.0).sqrt(), vectors.t());
  return 0.5 * (root + root.t());
}

}  // namespace

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  auto root = psd_sqrt(symmetric_tensor(m)).contiguous();
  Eigen::MatrixXd out(m.rows(), m.cols());
  std::memcpy(out.data(), root.data_ptr<double>(), sizeof(double) * root.numel());
  return out;
}

double frechet_distance(const FeatureStats& r, const FeatureStats& f) {
  const auto d = r.mu.size();
  if (f.mu.size() != d || r.sigma.rows() != d || r.sigma.cols() != d || f.sigma.rows() != d ||
      f.sigma.cols() != d) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }
  const auto sigma_r = symmetric_tensor(r.sigma);
  const auto sigma_f = symmetric_tensor(f.sigma);
  const auto root_r = psd_sqrt(sigma_r);
  auto inner = torch::matmul(torch::matmul(root_r, sigma_f), root_r);
  const auto cross = psd_sqrt(0.5 * (inner + inner.t()));
  const double mean_term = (r.mu - f.mu).squaredNorm();
  return mean_term + (sigma_r.trace() + sigma_f.trace() - 2.0 * cross.trace()).item<double>();
}

FeatureStats stats_from_features(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw std::invalid_argument("feature statistics need at least 2 samples");
  FeatureStats s;
  s.n = x.rows();
  s.mu = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - s.mu.transpose();
  s.sigma = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  return s;
}

Eigen::MatrixXd to_eigen(const torch::Tensor& matrix) {
  if (matrix.dim() != 2) throw std::invalid_argument("to_eigen expects a matrix");
  auto t = matrix.detach().to(torch::kDouble).contiguous();
  Eigen::MatrixXd out(t.size(0), t.size(1));
  auto acc = t.accessor<double, 2>();
  for (int64_t i = 0; i < t.size(0); ++i) {
    for (int64_t j = 0; j < t.size(1); ++j) out(i, j) = acc[i][j];
  }
  return out;
}

FeatureStats compute_stats(const std::vector<torch::Tensor>& images,
                           const FeatureExtractor& extractor, int64_t chunk) {
  if (images.size() < 2) throw std::invalid_argument("compute_stats needs at least 2 images");
  std::vector<torch::Tensor> parts;
  for (size_t first = 0; first < images.size(); first += chunk) {
    const auto last = std::min(images.size(), first + static_cast<size_t>(chunk));
    std::vector<torch::Tensor> slice(images.begin() + first, images.begin() + last);
    parts.push_back(extractor.extract(torch::stack(slice)));
  }
  return stats_from_features(to_eigen(torch::cat(parts, 0)));
}

// ---------------------------------------------------------------------------

void validate_rating(const Rating& r) {
  if (r.rating < 0 || r.rating > 2) {
    throw std::invalid_argument("rating must be 0, 1 or 2, got " + std::to_string(r.rating));
  }
  for (const auto* field : {&r.example_id, &r.rater_id, &r.timestamp}) {
    if (field->find_first_of(",\r\n") != std::string::npos) {
      throw std::invalid_argument("rating fields must not contain commas or line breaks");
    }
  }
  if (r.example_id.empty()) throw std::invalid_argument("example_id is empty");
}

std::string format_rating(const Rating& r) {
  validate_rating(r);
  return r.example_id + "," + std::to_string(r.rating) + "," + r.rater_id + "," + r.timestamp;
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  const auto len = std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + len, sizeof(buf) - len, ".%03dZ", static_cast<int>(ms));
  return buf;
}

RatingLog RatingLog::parse(std::string_view text) {
  RatingLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    const auto bad = [&](const std::string& why) {
      return std::invalid_argument("rating log line " + std::to_string(number) + ": " + why);
    };
    if (fields.size() != 4) throw bad("expected 4 comma-separated fields");
    if (fields[1].size() != 1 || fields[1][0] < '0' || fields[1][0] > '2') {
      throw bad("rating must be 0, 1 or 2, got '" + fields[1] + "'");
    }
    if (fields[0].empty()) throw bad("empty example id");
    log.entries.push_back({fields[0], fields[1][0] - '0', fields[2], fields[3]});
  }
  return log;
}

RatingLog RatingLog::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open rating log " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

double mean_satisfaction(const RatingLog& log) {
  if (log.entries.empty()) throw std::invalid_argument("mean_satisfaction: empty rating log");
  double sum = 0;
  for (const auto& e : log.entries) sum += e.rating;
  return sum / static_cast<double>(log.entries.size());
}

// ---------------------------------------------------------------------------

std::string EvaluationReport::to_json() const {
  nlohmann::json j{{"fid", fid}, {"is", is}, {"n", n}, {"extractor", extractor},
                   {"classifier", classifier}, {"model_fingerprint", fingerprint}};
  return j.dump(2);
}

EvaluationReport evaluate_rebuild(const ModelCheckpoint& checkpoint, const Corpus& corpus,
                                  const FeatureExtractor& extractor, const Classifier& classifier,
                                  const EdgeDetector& detector, int64_t batch) {
  if (batch < 1) throw std::invalid_argument("batch must be positive");
  auto models = models_from_checkpoint(checkpoint);
  models.generator->eval();
  const auto& scale = checkpoint.scale;
  torch::NoGradGuard no_grad;

  std::vector<torch::Tensor> truth;
  std::vector<torch::Tensor> rebuilt;
  std::vector<torch::Tensor> probs;
  for (size_t first = 0; first < corpus.size(); first += batch) {
    std::vector<TrainingExample> examples;
    for (size_t i = first; i < std::min(corpus.size(), first + static_cast<size_t>(batch)); ++i) {
      examples.push_back(make_plain_example(corpus.items[i].image, detector, scale));
    }
    const auto b = collate(examples);
    auto out = models.generator->forward(b.image_left, b.sketch_left, b.sketch_right);
    auto pasted = concat_halves(b.image_left, split_halves(out).second);
    probs.push_back(classifier.probabilities(pasted));
    for (int64_t k = 0; k < pasted.size(0); ++k) {
      rebuilt.push_back(pasted[k]);
      truth.push_back(b.full_image[k]);
    }
  }

  EvaluationReport report;
  report.n = static_cast<int64_t>(rebuilt.size());
  report.fid = frechet_distance(compute_stats(truth, extractor), compute_stats(rebuilt, extractor));
  report.is = inception_score(to_eigen(torch::cat(probs, 0)));
  report.extractor = extractor.name();
  report.classifier = classifier.name();
  report.fingerprint = checkpoint.fingerprint;
  return report;
}

}  // namespace sketchout

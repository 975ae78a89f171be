#include "sketchout/service.hpp"

#include <fstream>
#include <json.hpp>
#include <opencv2/core.hpp>

#include "sketchout/evaluation.hpp"
#include "sketchout/generator.hpp"
#include "sketchout/image_io.hpp"
#include "sketchout/raster.hpp"

// after Eigen: resolv.h defines _res
#include <httplib.h>

namespace sketchout {
namespace {

using nlohmann::json;

Reply error_reply(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

std::string dims(int64_t height, int64_t width) {
  return std::to_string(height) + "×" + std::to_string(width);
}

/// Thrown inside request handling; carries the HTTP status.
struct RequestError {
  int status;
  std::string message;
};

cv::Mat decode_field(const json& value, bool grayscale, const std::string& what) {
  if (!value.is_string()) throw RequestError{400, what + " must be a base64 string"};
  std::vector<uint8_t> bytes;
  try {
    bytes = base64_decode(value.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw RequestError{400, what + ": " + e.what()};
  }
  auto mat = decode_image(bytes, grayscale);
  if (mat.empty()) throw RequestError{400, what + ": payload is not a decodable image"};
  return mat;
}

void check_size(const cv::Mat& mat, const ArchitectureScale& scale, const std::string& what) {
  if (mat.rows != scale.half_height || mat.cols != scale.half_width) {
    throw RequestError{422, what + " is " + dims(mat.rows, mat.cols) + "; expected " +
                                dims(scale.half_height, scale.half_width)};
  }
}

json parse_body(std::string_view body) {
  auto parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw RequestError{400, "request body must be a JSON object"};
  }
  return parsed;
}

}  // namespace

struct OutpaintService::Model {
  ModelSet models;
  std::shared_ptr<const EdgeDetector> detector;
  std::string fingerprint;
};

OutpaintService::OutpaintService(std::filesystem::path ratings_path)
    : ratings_path_(std::move(ratings_path)), started_(std::chrono::steady_clock::now()) {}

OutpaintService::~OutpaintService() { wait_loaded(); }

void OutpaintService::load(const ModelCheckpoint& checkpoint) {
  auto model = std::make_shared<Model>();
  model->models = models_from_checkpoint(checkpoint);
  model->models.generator->eval();
  const auto cfg = TrainConfig::parse(checkpoint.config_text);
  model->detector = make_edge_detector(cfg.edge_detector);
  model->fingerprint = checkpoint.fingerprint;
  {
    std::lock_guard lock(model_mutex_);
    model_ = std::move(model);
    load_error_.clear();
  }
  ready_ = true;
}

void OutpaintService::load_in_background(std::filesystem::path checkpoint_path) {
  wait_loaded();
  loader_ = std::thread([this, path = std::move(checkpoint_path)] {
    try {
      load(load_checkpoint(path));
    } catch (const std::exception& e) {
      std::lock_guard lock(model_mutex_);
      load_error_ = e.what();
    }
  });
}

void OutpaintService::wait_loaded() {
  if (loader_.joinable()) loader_.join();
}

Reply OutpaintService::health() const {
  const double uptime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  std::lock_guard lock(model_mutex_);
  if (!ready_ || !model_) {
    json j{{"status", load_error_.empty() ? "loading" : "error"},
           {"model_fingerprint", ""},
           {"scale", ""},
           {"uptime_s", uptime}};
    if (!load_error_.empty()) j["error"] = load_error_;
    return {503, j.dump()};
  }
  json j{{"status", "ok"},
         {"model_fingerprint", model_->fingerprint},
         {"scale", model_->models.scale.name()},
         {"uptime_s", uptime}};
  return {200, j.dump()};
}

Reply OutpaintService::outpaint(std::string_view body) const {
  const auto start = std::chrono::steady_clock::now();
  std::shared_ptr<Model> model;
  {
    std::lock_guard lock(model_mutex_);
    model = model_;
  }
  if (!ready_ || !model) return error_reply(503, "model is not loaded yet");
  const auto& scale = model->models.scale;
  try {
    const auto req = parse_body(body);
    if (!req.contains("image")) throw RequestError{400, "missing field 'image'"};
    if (!req.contains("sketches") || !req["sketches"].is_array()) {
      throw RequestError{400, "missing array field 'sketches'"};
    }
    bool binarize = true;
    if (req.contains("binarize_server_side")) {
      if (!req["binarize_server_side"].is_boolean()) {
        throw RequestError{400, "binarize_server_side must be a boolean"};
      }
      binarize = req["binarize_server_side"].get<bool>();
    }
    const auto& sketch_fields = req["sketches"];
    if (sketch_fields.empty()) throw RequestError{422, "at least one sketch is required"};

    const auto input = decode_field(req["image"], false, "image");
    std::vector<cv::Mat> sketch_mats;
    for (size_t i = 0; i < sketch_fields.size(); ++i) {
      sketch_mats.push_back(decode_field(sketch_fields[i], true, "sketch " + std::to_string(i)));
    }
    check_size(input, scale, "image");
    std::vector<torch::Tensor> sketches;
    for (size_t i = 0; i < sketch_mats.size(); ++i) {
      const auto what = "sketch " + std::to_string(i);
      check_size(sketch_mats[i], scale, what);
      auto plane = plane_from_gray(sketch_mats[i]);
      if (binarize) {
        plane = binarize_sketch(plane);
      } else if (!is_binary(plane)) {
        throw RequestError{422, what + " is not binary (0/255) and binarize_server_side is false"};
      }
      sketches.push_back(plane);
    }

    torch::Tensor result;
    {
      torch::NoGradGuard no_grad;
      std::lock_guard lock(inference_mutex_);
      result = outpaint_steps(model->models.generator, *model->detector, image_from_mat(input),
                              sketches);
    }
    auto out = mat_from_image(result);
    input.copyTo(out(cv::Rect(0, 0, input.cols, input.rows)));

    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    json j{{"image", base64_encode(encode_png(out))},
           {"model_fingerprint", model->fingerprint},
           {"elapsed_ms", elapsed}};
    return {200, j.dump()};
  } catch (const RequestError& e) {
    return error_reply(e.status, e.message);
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

Reply OutpaintService::rate(std::string_view body) {
  try {
    const auto req = parse_body(body);
    if (!req.contains("example_id") || !req["example_id"].is_string()) {
      throw RequestError{400, "missing string field 'example_id'"};
    }
    if (!req.contains("rating") || !req["rating"].is_number()) {
      throw RequestError{400, "missing numeric field 'rating'"};
    }
    Rating r;
    r.example_id = req["example_id"].get<std::string>();
    r.rater_id = req.value("rater_id", std::string());
    const double value = req["rating"].get<double>();
    if (!req["rating"].is_number_integer() || value < 0 || value > 2) {
      throw RequestError{422, "rating must be 0, 1 or 2"};
    }
    r.rating = static_cast<int>(value);
    r.timestamp = iso8601_utc_now();
    std::string line;
    try {
      line = format_rating(r);
    } catch (const std::invalid_argument& e) {
      throw RequestError{422, e.what()};
    }
    {
      std::lock_guard lock(ratings_mutex_);
      std::ofstream out(ratings_path_, std::ios::app | std::ios::binary);
      out << line << '\n';
      out.flush();
      if (!out) throw std::runtime_error("cannot append to rating log " + ratings_path_.string());
    }
    return {200, json{{"status", "ok"}, {"example_id", r.example_id}, {"rating", r.rating},
                      {"timestamp", r.timestamp}}
                     .dump()};
  } catch (const RequestError& e) {
    return error_reply(e.status, e.message);
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

// ---------------------------------------------------------------------------

struct HttpFrontend::Impl {
  httplib::Server server;
  std::thread thread;
};

HttpFrontend::HttpFrontend(OutpaintService& service) : impl_(std::make_unique<Impl>()) {
  const auto send = [](httplib::Response& res, const Reply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  impl_->server.Post("/outpaint", [&service, send](const httplib::Request& req,
                                                   httplib::Response& res) {
    send(res, service.outpaint(req.body));
  });
  impl_->server.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.health());
  });
  impl_->server.Post("/rate", [&service, send](const httplib::Request& req,
                                               httplib::Response& res) {
    send(res, service.rate(req.body));
  });
  impl_->server.set_payload_max_length(64 << 20);
}

HttpFrontend::~HttpFrontend() { stop(); }

bool HttpFrontend::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int HttpFrontend::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpFrontend::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace sketchout

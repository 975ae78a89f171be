#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>

#include "sketchout/checkpoint.hpp"
#include "sketchout/edges.hpp"
#include "sketchout/training.hpp"

namespace sketchout {

/// HTTP status plus a JSON body.
struct Reply {
  int status = 200;
  std::string body;
};

/// Request handlers for POST /outpaint, GET /health and POST /rate.
///
/// /outpaint body: {"image": b64 PNG H x W_half, "sketches": [b64 PNG, ...],
///                  "binarize_server_side": bool (default true)}
/// reply:          {"image": b64 PNG H x W_half*(k+1), "model_fingerprint", "elapsed_ms"}
/// /rate body:     {"example_id", "rating": 0|1|2, "rater_id"}
class OutpaintService {
 public:
  explicit OutpaintService(std::filesystem::path ratings_path);
  ~OutpaintService();

  OutpaintService(const OutpaintService&) = delete;
  OutpaintService& operator=(const OutpaintService&) = delete;

  /// Installs a model; afterwards the service reports "ok".
  void load(const ModelCheckpoint& checkpoint);
  /// Loads the checkpoint on a background thread. Failures are reported
  /// through /health as status "error".
  void load_in_background(std::filesystem::path checkpoint_path);
  /// Blocks until a background load finished (either way).
  void wait_loaded();
  bool ready() const { return ready_.load(); }

  Reply outpaint(std::string_view body) const;
  Reply health() const;
  Reply rate(std::string_view body);

  const std::filesystem::path& ratings_path() const { return ratings_path_; }

 private:
  struct Model;

  std::filesystem::path ratings_path_;
  std::chrono::steady_clock::time_point started_;
  std::atomic<bool> ready_{false};
  std::shared_ptr<Model> model_;
  mutable std::mutex model_mutex_;  // guards model_ and load_error_
  mutable std::mutex inference_mutex_;
  std::mutex ratings_mutex_;
  std::string load_error_;
  std::thread loader_;
};

/// Binds the three endpoints on an HTTP server. listen() blocks; start()
/// runs it on a background thread and returns the bound port.
class HttpFrontend {
 public:
  explicit HttpFrontend(OutpaintService& service);
  ~HttpFrontend();

  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  bool listen(const std::string& host, int port);
  /// port 0 picks a free port.
  int start(const std::string& host, int port = 0);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sketchout

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sketchout/checkpoint.hpp"
#include "sketchout/config.hpp"
#include "sketchout/corpus.hpp"
#include "sketchout/evaluation.hpp"
#include "sketchout/extractors.hpp"
#include "sketchout/generator.hpp"
#include "sketchout/image_io.hpp"
#include "sketchout/raster.hpp"
#include "sketchout/service.hpp"
#include "sketchout/training.hpp"

namespace fs = std::filesystem;
using namespace sketchout;

namespace {

TrainConfig config_from(const std::string& path, const std::string& scale) {
  auto cfg = path.empty() ? TrainConfig::desk_scale() : TrainConfig::load(path);
  if (!scale.empty()) cfg.scale = ArchitectureScale::parse(scale);
  cfg.validate();
  return cfg;
}

int run_train(const std::string& config_path, const std::string& data, const std::string& out,
              const std::string& resume, int64_t max_steps, int64_t epochs, bool quiet) {
  auto cfg = config_from(config_path, "");
  if (max_steps >= 0) cfg.max_steps = max_steps;
  if (epochs > 0) cfg.epochs = epochs;
  const auto [source_h, source_w] = cfg.source_size();
  const auto corpus = open_corpus(data, source_h, source_w);
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "training " << cfg.scale.name() << " on " << corpus.size() << " images, config "
            << cfg.fingerprint() << '\n';
  RunOptions options;
  options.out_dir = out;
  if (!resume.empty()) options.resume = fs::path(resume);
  if (!quiet) {
    options.on_step = [](const StepMetrics& m) {
      std::fprintf(stderr, "step %lld epoch %lld l1 %.5f ls %.5f ld %.4f/%.4f\n",
                   static_cast<long long>(m.step), static_cast<long long>(m.epoch), m.l1, m.ls,
                   m.ld_global, m.ld_local);
    };
  }
  const auto final_ckpt = train(cfg, corpus, options);
  std::cout << (fs::path(out) / "final.bin").string() << " step " << final_ckpt.step << '\n';
  return 0;
}

int run_init(const std::string& config_path, const std::string& scale, uint64_t seed,
             const std::string& out) {
  auto cfg = config_from(config_path, scale);
  cfg.seed = seed;
  Trainer trainer(cfg, make_edge_detector(cfg.edge_detector));
  save_checkpoint(trainer.checkpoint(), out);
  std::cout << out << " fingerprint " << cfg.fingerprint() << '\n';
  return 0;
}

int run_evaluate(const std::string& ckpt_path, const std::string& data,
                 const std::string& extractor_name, const std::string& classifier_name,
                 const std::string& out) {
  const auto ckpt = load_checkpoint(ckpt_path);
  const auto cfg = TrainConfig::parse(ckpt.config_text);
  const auto& scale = ckpt.scale;
  const auto corpus = open_corpus(data, scale.half_height, scale.full_width());
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << '\n';
  const auto extractor = make_feature_extractor(extractor_name);
  const auto classifier = make_classifier(classifier_name, scale.half_height, scale.full_width());
  const auto detector = make_edge_detector(cfg.edge_detector);
  const auto report = evaluate_rebuild(ckpt, corpus, *extractor, *classifier, *detector);
  std::ofstream file(out);
  file << report.to_json() << '\n';
  if (!file) throw std::runtime_error("cannot write report " + out);
  std::cout << report.to_json() << '\n';
  return 0;
}

int run_serve(const std::string& ckpt_path, const std::string& host, int port,
              const std::string& ratings) {
  OutpaintService service(ratings);
  service.load_in_background(ckpt_path);
  HttpFrontend frontend(service);
  std::cerr << "listening on " << host << ":" << port << '\n';
  if (!frontend.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << '\n';
    return 1;
  }
  return 0;
}

int run_outpaint(const std::string& ckpt_path, const std::string& image_path,
                 const std::vector<std::string>& sketch_paths, const std::string& out) {
  const auto ckpt = load_checkpoint(ckpt_path);
  auto models = models_from_checkpoint(ckpt);
  models.generator->eval();
  const auto detector = make_edge_detector(TrainConfig::parse(ckpt.config_text).edge_detector);
  const auto input = read_image(image_path);
  if (input.empty()) throw std::runtime_error("cannot read " + image_path);
  const auto& scale = ckpt.scale;
  if (input.rows != scale.half_height || input.cols != scale.half_width) {
    throw std::runtime_error("image must be " + std::to_string(scale.half_height) + "x" +
                             std::to_string(scale.half_width));
  }
  std::vector<torch::Tensor> sketches;
  for (const auto& p : sketch_paths) {
    const auto gray = read_image(p, true);
    if (gray.empty()) throw std::runtime_error("cannot read " + p);
    sketches.push_back(binarize_sketch(plane_from_gray(gray)));
  }
  torch::NoGradGuard no_grad;
  auto result = mat_from_image(outpaint_steps(models.generator, *detector, image_from_mat(input),
                                              sketches));
  input.copyTo(result(cv::Rect(0, 0, input.cols, input.rows)));
  write_image(out, result);
  return 0;
}

int run_synth(size_t count, uint64_t seed, int64_t height, int64_t width, const std::string& out) {
  fs::create_directories(out);
  const auto corpus = synthetic_corpus(count, seed, height, width);
  std::ofstream manifest(fs::path(out) / "manifest.txt");
  for (size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05zu.png", i);
    write_image(fs::path(out) / name, mat_from_image(corpus.items[i].image));
    manifest << name << '\n';
  }
  return 0;
}

int run_sketch(const std::string& image_path, const std::string& detector_name,
               const std::string& out) {
  const auto input = read_image(image_path);
  if (input.empty()) throw std::runtime_error("cannot read " + image_path);
  const auto detector = make_edge_detector(detector_name);
  write_image(out, gray_from_plane(extract_sketch(image_from_mat(input), *detector)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sketch-guided scenery outpainting"};
  app.require_subcommand(1);

  std::string config, data, out, resume, ckpt, extractor = "random-projection",
                                             classifier = "scenery-layout", ratings = "ratings.csv",
                                             host = "0.0.0.0", scale, image, detector = "sobel";
  std::vector<std::string> sketches;
  int64_t max_steps = -1, epochs = 0, height = 128, width = 256;
  int port = 8080;
  uint64_t seed = 0;
  size_t count = 64;
  bool quiet = false;

  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", config, "flat key = value config (default: desk scale)");
  train_cmd->add_option("--data", data, "image folder or synthetic:N[:seed]")->required();
  train_cmd->add_option("--out", out, "output directory")->required();
  train_cmd->add_option("--resume", resume, "checkpoint to resume from");
  train_cmd->add_option("--max-steps", max_steps, "override max_steps");
  train_cmd->add_option("--epochs", epochs, "override epochs");
  train_cmd->add_flag("--quiet", quiet);

  auto* init_cmd = app.add_subcommand("init", "write a randomly initialised checkpoint");
  init_cmd->add_option("--config", config);
  init_cmd->add_option("--scale", scale, "full, desk or HxW/divisor");
  init_cmd->add_option("--seed", seed);
  init_cmd->add_option("--out", out)->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "rebuild evaluation (FID, IS)");
  eval_cmd->add_option("--ckpt", ckpt)->required();
  eval_cmd->add_option("--data", data)->required();
  eval_cmd->add_option("--extractor", extractor, "random-projection or script:<path>");
  eval_cmd->add_option("--classifier", classifier, "scenery-layout or script:<path>:<K>");
  eval_cmd->add_option("--out", out, "report file")->default_val("report.json");

  auto* serve_cmd = app.add_subcommand("serve", "HTTP inference service");
  serve_cmd->add_option("--ckpt", ckpt)->required();
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--ratings", ratings, "rating log file");

  auto* outpaint_cmd = app.add_subcommand("outpaint", "extend one image from sketches");
  outpaint_cmd->add_option("--ckpt", ckpt)->required();
  outpaint_cmd->add_option("--image", image)->required();
  outpaint_cmd->add_option("--sketch", sketches, "one per step")->required();
  outpaint_cmd->add_option("--out", out)->required();

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic scenery folder");
  synth_cmd->add_option("--count", count);
  synth_cmd->add_option("--seed", seed);
  synth_cmd->add_option("--height", height);
  synth_cmd->add_option("--width", width);
  synth_cmd->add_option("--out", out)->required();

  auto* sketch_cmd = app.add_subcommand("sketch", "extract a binary sketch from an image");
  sketch_cmd->add_option("--image", image)->required();
  sketch_cmd->add_option("--detector", detector);
  sketch_cmd->add_option("--out", out)->required();

  auto* msd_cmd = app.add_subcommand("msd", "mean satisfaction of a rating log");
  msd_cmd->add_option("--ratings", ratings)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train_cmd) return run_train(config, data, out, resume, max_steps, epochs, quiet);
    if (*init_cmd) return run_init(config, scale, seed, out);
    if (*eval_cmd) return run_evaluate(ckpt, data, extractor, classifier, out);
    if (*serve_cmd) return run_serve(ckpt, host, port, ratings);
    if (*outpaint_cmd) return run_outpaint(ckpt, image, sketches, out);
    if (*synth_cmd) return run_synth(count, seed, height, width, out);
    if (*sketch_cmd) return run_sketch(image, detector, out);
    if (*msd_cmd) {
      const auto log = RatingLog::load(ratings);
      std::printf("%.6f (%zu ratings)\n", mean_satisfaction(log), log.entries.size());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

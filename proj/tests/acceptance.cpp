// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "sketchout/corpus.hpp"
#include "sketchout/critics.hpp"
#include "sketchout/data.hpp"
#include "sketchout/evaluation.hpp"
#include "sketchout/generator.hpp"
#include "sketchout/image_io.hpp"
#include "sketchout/losses.hpp"
#include "sketchout/raster.hpp"
#include "sketchout/service.hpp"
#include "sketchout/training.hpp"
#include "support/oracles.hpp"

using namespace sketchout;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr double kGradRelError = 1e-3;
constexpr int kGradInstances = 5;
constexpr double kGpTolerance = 1e-6;
constexpr double kTotalLossTolerance = 1e-9;
constexpr double kMetricTolerance = 1e-6;
constexpr double kFidSelfBound = 1e-3;
constexpr int64_t kOverfitSteps = 400;
constexpr double kOverfitL1Bound = 0.08;
constexpr int64_t kDeterminismSteps = 50;
constexpr int64_t kFrozenSteps = 50;

/// Collects failures for one criterion.
struct Probe {
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<void(Probe&)> run;
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sketchout_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// --- position channels -----------------------------------------------------

void position_channels(Probe& p) {
  for (auto [h, w] : std::vector<std::pair<int64_t, int64_t>>{{4, 4}, {128, 256}}) {
    auto pos = make_position_channels(h, w, torch::kDouble);
    auto acc = pos.accessor<double, 3>();
    bool exact = pos.sizes() == torch::IntArrayRef({2, h, w});
    for (int64_t i = 0; exact && i < h; ++i) {
      for (int64_t j = 0; j < w; ++j) {
        const double x = static_cast<double>(2 * j - w) / static_cast<double>(h);
        const double y = static_cast<double>(2 * i - h) / static_cast<double>(h);
        if (acc[0][i][j] != x || acc[1][i][j] != y) {
          exact = false;
          break;
        }
      }
    }
    const auto tag = std::to_string(h) + "x" + std::to_string(w);
    p.expect(exact, "formula mismatch at " + tag);
    p.expect(pos[0].min().item<double>() == -static_cast<double>(w) / h, "lower bound at " + tag);
    p.expect(pos[0].max().item<double>() == static_cast<double>(w - 2) / h, "upper bound at " + tag);
  }
}

// --- gradient suite --------------------------------------------------------

void gradient_suite(Probe& p) {
  auto rng = make_rng(2024, {});
  double worst = 0;
  int checked = 0;
  auto track = [&](const std::string& what, const oracle::GradCheck& r) {
    worst = std::max(worst, r.max_rel_error);
    checked += r.coordinates;
    p.expect(r.max_rel_error < kGradRelError, what + " rel error " + fmt(r.max_rel_error));
  };

  for (int i = 0; i < kGradInstances; ++i) {
    torch::manual_seed(100 + i);
    const auto tag = " #" + std::to_string(i);

    GatedConv2d conv(ConvSpec(3, 4, 3, 1 + i % 2));
    conv->to(torch::kDouble);
    init_parameters(*conv, 10 + i, 0.3);
    auto x = torch::randn({2, 3, 7, 6}, torch::kDouble).requires_grad_(true);
    auto wc = torch::randn({2, 4, i % 2 ? 4 : 7, i % 2 ? 3 : 6}, torch::kDouble);
    track("gated_conv" + tag,
          oracle::check_gradients([&] { return (conv->forward(x) * wc).sum(); },
                                  {x, conv->feature->weight, conv->gate->weight}, 4, rng));

    GatedResBlock block(8);
    block->to(torch::kDouble);
    init_parameters(*block, 20 + i, 0.3);
    auto xr = torch::randn({1, 8, 5, 5}, torch::kDouble).requires_grad_(true);
    auto wr = torch::randn({1, 8, 5, 5}, torch::kDouble);
    track("gated_resblock" + tag,
          oracle::check_gradients([&] { return (block->forward(xr) * wr).sum(); },
                                  {xr, block->spatial->feature->weight}, 4, rng));

    ConditionalSkip csc(8, 4, 4);
    csc->to(torch::kDouble);
    init_parameters(*csc, 30 + i, 0.3);
    auto d = torch::randn({1, 8, 4, 4}, torch::kDouble).requires_grad_(true);
    auto s = torch::randn({1, 4, 4, 4}, torch::kDouble).requires_grad_(true);
    auto pp = torch::randn({1, 4, 4, 4}, torch::kDouble).requires_grad_(true);
    auto wk = torch::randn({1, 8, 4, 4}, torch::kDouble);
    track("csc" + tag, oracle::check_gradients([&] { return (csc->forward(d, s, pp) * wk).sum(); },
                                               {d, s, pp, csc->mix->conv->weight}, 3, rng));

    auto img = torch::rand({2, 3, 6, 12}, torch::kDouble) * 2 - 1;
    auto rec = (torch::rand({2, 3, 6, 12}, torch::kDouble) * 2 - 1).requires_grad_(true);
    auto mask = build_loss_mask(6, 12, 0.2, torch::kDouble);
    track("masked_l1" + tag,
          oracle::check_gradients([&] { return masked_l1(img, rec, mask); }, {rec}, 6, rng));

    SobelEdgeDetector det;
    auto xs = (torch::rand({1, 3, 10, 10}, torch::kDouble) * 2 - 1).requires_grad_(true);
    auto sk = (torch::rand({1, 1, 10, 10}, torch::kDouble) > 0.5).to(torch::kDouble);
    track("sketch_alignment_loss" + tag,
          oracle::check_gradients([&] { return sketch_alignment_loss(xs, sk, det); }, {xs}, 6, rng));

    const auto tiny = ArchitectureScale::parse("32x32/16");
    Critic critic(tiny.half_height, tiny.half_width, tiny);
    critic->to(torch::kDouble);
    init_parameters(*critic, 40 + i, 0.05);
    CriticFn fn = [&](const torch::Tensor& a, const torch::Tensor& b) { return critic->forward(a, b); };
    auto real = torch::randn({2, 3, 32, 32}, torch::kDouble);
    auto fake = torch::randn({2, 3, 32, 32}, torch::kDouble);
    auto gsk = torch::zeros({2, 1, 32, 32}, torch::kDouble);
    auto eps = torch::rand({2}, torch::kDouble);
    track("gradient_penalty" + tag,
          oracle::check_gradients([&] { return gradient_penalty(fn, real, fake, gsk, 10.0, eps); },
                                  {critic->parameters()[0]}, 4, rng));

    const auto desk = ArchitectureScale::desk();
    auto g = make_generator(desk, 50 + i);
    g->to(torch::kDouble);
    auto il = (torch::rand({1, 3, desk.half_height, desk.half_width}, torch::kDouble) * 2 - 1)
                  .requires_grad_(true);
    auto sl = (torch::rand({1, 1, desk.half_height, desk.half_width}, torch::kDouble) > 0.8)
                  .to(torch::kDouble);
    auto sr = (torch::rand({1, 1, desk.half_height, desk.half_width}, torch::kDouble) > 0.8)
                  .to(torch::kDouble);
    auto wg = torch::randn({1, 3, desk.half_height, 2 * desk.half_width}, torch::kDouble);
    track("generator" + tag,
          oracle::check_gradients([&] { return (g->forward(il, sl, sr) * wg).sum(); },
                                  {il, g->decoder->up_out->conv->feature->weight,
                                   g->sequence->decoder->weight_ih},
                                  3, rng));
  }
  p.note = std::to_string(checked) + " coordinates, worst rel error " + fmt(worst);
}

// --- full-scale shape walk -------------------------------------------------

void shape_walk(Probe& p) {
  const std::vector<LayerShape> expected = {
      {"G-Conv", {64, 64, 64}},          {"Conv", {64, 64, 64}},
      {"G-Conv", {128, 32, 32}},         {"G-Conv", {256, 16, 16}},
      {"G-Resblockx3", {256, 16, 16}},   {"G-Conv", {512, 8, 8}},
      {"G-Resblockx4", {512, 8, 8}},     {"G-Conv", {1024, 4, 4}},
      {"G-Resblockx5", {1024, 4, 4}},    {"Conv", {512, 4, 4}},
      {"Sketch Encoder", {2048}},        {"Position Encoder", {2048}},
      {"LSTM Encoder", {2048}},          {"Sum", {2048}},
      {"LSTM Decoder", {512, 4, 4}},     {"Concat", {512, 4, 8}},
      {"G-Resblockx2", {512, 4, 8}},     {"CSC+G-DeConv", {512, 8, 16}},
      {"G-Resblockx3", {512, 8, 16}},    {"CSC+G-DeConv", {256, 16, 32}},
      {"G-Resblockx4", {256, 16, 32}},   {"CSC+G-DeConv", {128, 32, 64}},
      {"G-DeConv", {64, 64, 128}},       {"G-DeConv", {3, 128, 256}},
  };
  const auto full = ArchitectureScale::full();
  auto g = make_generator(full, 1);
  std::vector<LayerShape> trace;
  g->set_trace(&trace);
  torch::NoGradGuard no_grad;
  auto out = g->forward(torch::rand({1, 3, 128, 128}) * 2 - 1,
                        (torch::rand({1, 1, 128, 128}) > 0.8).to(torch::kFloat),
                        (torch::rand({1, 1, 128, 128}) > 0.8).to(torch::kFloat));
  g->set_trace(nullptr);
  p.expect(out.sizes() == torch::IntArrayRef({1, 3, 128, 256}), "output shape");
  p.expect(trace.size() == expected.size(),
           "trace has " + std::to_string(trace.size()) + " rows, expected " +
               std::to_string(expected.size()));
  for (size_t i = 0; i < std::min(trace.size(), expected.size()); ++i) {
    auto shape = trace[i].shape;
    const bool batch_ok = !shape.empty() && shape.front() == 1;
    if (batch_ok) shape.erase(shape.begin());
    p.expect(batch_ok && trace[i].layer == expected[i].layer && shape == expected[i].shape,
             "row " + std::to_string(i) + " (" + expected[i].layer + ") got " + trace[i].layer);
  }
  p.note = std::to_string(trace.size()) + " rows";
}

// --- loss oracles ----------------------------------------------------------

void loss_oracles(Probe& p) {
  torch::manual_seed(5);
  const auto real = torch::randn({3, 2, 4, 4}, torch::kDouble);
  const auto fake = torch::randn({3, 2, 4, 4}, torch::kDouble);
  const auto sketch = torch::zeros({3, 1, 4, 4}, torch::kDouble);
  const auto eps = torch::tensor({0.1, 0.5, 0.9}, torch::kDouble);
  const double n = 2 * 4 * 4;
  CriticFn unit = [](const torch::Tensor& x, const torch::Tensor&) {
    return x.flatten(1).select(1, 0);
  };
  CriticFn twice = [](const torch::Tensor& x, const torch::Tensor&) {
    return 2.0 * x.flatten(1).select(1, 0);
  };
  CriticFn sum = [](const torch::Tensor& x, const torch::Tensor&) { return x.flatten(1).sum(1); };
  const double gp0 = gradient_penalty(unit, real, fake, sketch, 10.0, eps).item<double>();
  const double gp10 = gradient_penalty(twice, real, fake, sketch, 10.0, eps).item<double>();
  const double gpn = gradient_penalty(sum, real, fake, sketch, 10.0, eps).item<double>();
  p.expect(std::abs(gp0) < kGpTolerance, "gp unit-norm case " + fmt(gp0));
  p.expect(std::abs(gp10 - 10.0) < kGpTolerance, "gp norm-2 case " + fmt(gp10));
  p.expect(std::abs(gpn - 10.0 * std::pow(std::sqrt(n) - 1.0, 2)) < kGpTolerance,
           "gp sum case " + fmt(gpn));

  LossWeights w;
  const double total = total_generator_loss(0.5, 0.1, -0.8, w);
  p.expect(std::abs(total - 0.5974) < kTotalLossTolerance, "total loss " + fmt(total));
  const double total_t = total_generator_loss(torch::tensor(0.5, torch::kDouble),
                                              torch::tensor(0.1, torch::kDouble),
                                              torch::tensor(-0.8, torch::kDouble), w)
                             .item<double>();
  p.expect(std::abs(total_t - 0.5974) < kTotalLossTolerance, "total loss (tensor) " + fmt(total_t));

  auto a = torch::randn({2, 3, 8, 16});
  p.expect(masked_l1(a, a, build_loss_mask(8, 16, 0.2)).item<double>() == 0.0, "masked_l1(x, x)");
  p.expect(masked_l1(a, torch::randn_like(a), torch::zeros({8, 16})).item<double>() == 0.0,
           "masked_l1 with zero mask");
  SobelEdgeDetector det;
  auto flat = torch::full({2, 3, 16, 16}, 0.3);
  p.expect(sketch_alignment_loss(flat, torch::zeros({2, 1, 16, 16}), det).item<double>() == 0.0,
           "sketch loss on flat image");
}

// --- metric oracles --------------------------------------------------------

void metric_oracles(Probe& p) {
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(9, 4, 0.25);
  p.expect(std::abs(inception_score(uniform) - 1.0) < kMetricTolerance, "IS uniform");
  for (int n : {2, 5, 10}) {
    const double is = inception_score(Eigen::MatrixXd::Identity(n, n));
    p.expect(std::abs(is - n) < kMetricTolerance, "IS one-hot " + std::to_string(n));
  }
  const int d = 16;
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  FeatureStats zero{Eigen::VectorXd::Zero(d), eye, 10};
  FeatureStats shifted{Eigen::VectorXd::Unit(d, 2), eye, 10};
  FeatureStats wide{Eigen::VectorXd::Zero(d), 4 * eye, 10};
  p.expect(std::abs(frechet_distance(zero, zero)) < kMetricTolerance, "FID identical");
  p.expect(std::abs(frechet_distance(zero, shifted) - 1.0) < kMetricTolerance, "FID unit shift");
  p.expect(std::abs(frechet_distance(wide, zero) - d) < kMetricTolerance, "FID 4I vs I");

  const auto desk = ArchitectureScale::desk();
  auto corpus = synthetic_corpus(64, 11, desk.half_height, 2 * desk.half_width);
  RandomProjectionExtractor ex;
  auto a = compute_stats(corpus.images(), ex);
  auto b = compute_stats(corpus.images(), ex, 7);
  const double self = frechet_distance(a, b);
  p.expect(self < kFidSelfBound, "FID(self, self) " + fmt(self));
  p.note = "FID(self, self) = " + fmt(self);
}

// --- augmentation statistics -----------------------------------------------

void augmentation(Probe& p) {
  MaskingPolicy policy;
  auto sketch = torch::ones({1, 128, 128});
  std::vector<int64_t> counts(3, 0);
  bool zero = true, local = true;
  for (uint64_t i = 0; i < 10000; ++i) {
    auto rng = make_rng(4242, {i});
    auto r = random_sketch_mask(sketch, policy, rng);
    counts[static_cast<int>(r.branch)]++;
    if (r.branch == MaskBranch::kUnchanged) {
      local = local && torch::equal(r.sketch, sketch);
      continue;
    }
    const auto& patch = r.patch;
    auto changed = r.sketch != sketch;
    zero = zero && r.sketch.narrow(1, patch.top, patch.height)
                           .narrow(2, patch.left, patch.width)
                           .abs()
                           .sum()
                           .item<double>() == 0.0;
    local = local && changed.sum().item<int64_t>() == patch.height * patch.width;
    const auto other = r.branch == MaskBranch::kTop ? changed.narrow(1, 64, 64)
                                                    : changed.narrow(1, 0, 64);
    local = local && other.sum().item<int64_t>() == 0;
  }
  const double stat = oracle::chi_square(counts, {0.4, 0.2, 0.4});
  p.expect(stat < oracle::chi_square_2dof_critical_01(), "chi-square " + fmt(stat));
  p.expect(zero, "masked pixels not zero");
  p.expect(local, "mask leaked outside its half");
  p.note = "counts " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
           std::to_string(counts[2]) + ", chi2 " + fmt(stat);
}

// --- CSC identity ----------------------------------------------------------

void csc_identity(Probe& p) {
  const auto desk = ArchitectureScale::desk();
  auto g = make_generator(desk, 9);
  torch::NoGradGuard no_grad;
  const auto hh = desk.half_height, hw = desk.half_width;
  auto il = torch::rand({2, 3, hh, hw}) * 2 - 1;
  auto sl = (torch::rand({2, 1, hh, hw}) > 0.8).to(torch::kFloat);
  auto sa = (torch::rand({2, 1, hh, hw}) > 0.8).to(torch::kFloat);
  auto sb = (torch::rand({2, 1, hh, hw}) > 0.5).to(torch::kFloat);
  auto [pl, pr] = g->position_halves(2);
  auto left = g->encode_context(il, sl, pl);
  auto ga = g->encode_guidance(sa, pr);
  auto gb = g->encode_guidance(sb, pr);
  auto right = g->predict_hidden_sequence(left, ga.sketch_state, ga.position_state);
  p.expect(!torch::equal(ga.pyramid.sketch_levels[0], gb.pyramid.sketch_levels[0]),
           "guidance pyramids coincide; test is vacuous");
  p.expect(torch::equal(g->decode_full(left, right, ga.pyramid),
                        g->decode_full(left, right, gb.pyramid)),
           "decode_full depends on the guiding sketch");
}

// --- training-based criteria -----------------------------------------------

TrainConfig desk_run_config() {
  auto cfg = TrainConfig::desk_scale();
  cfg.seed = 31;
  cfg.batch_size = 4;
  cfg.checkpoint_interval = 1000;
  return cfg;
}

void frozen_detector(Probe& p) {
  auto cfg = desk_run_config();
  auto detector = make_edge_detector(cfg.edge_detector);
  std::vector<torch::Tensor> before;
  for (const auto& t : detector->parameters()) before.push_back(t.clone());
  Trainer trainer(cfg, detector);
  auto [h, w] = cfg.source_size();
  auto corpus = synthetic_corpus(8, 3, h, w);
  for (int64_t step = 0; step < kFrozenSteps; ++step) {
    const int64_t epoch = step / 2;
    trainer.set_epoch(epoch);
    auto order = epoch_order(corpus.size(), epoch, cfg.seed);
    auto batch = make_training_batch(corpus, order, (step % 2) * 4, 4, epoch, cfg, *detector);
    auto rng = make_rng(cfg.seed, {99, static_cast<uint64_t>(step)});
    trainer.train_step(batch, rng);
  }
  auto after = detector->parameters();
  p.expect(after.size() == before.size() && !before.empty(), "parameter list changed");
  for (size_t i = 0; i < std::min(after.size(), before.size()); ++i) {
    const auto& x = before[i];
    const auto& y = after[i];
    const bool same = x.sizes() == y.sizes() && x.dtype() == y.dtype() &&
                      std::memcmp(x.contiguous().data_ptr(), y.contiguous().data_ptr(),
                                  x.numel() * x.element_size()) == 0;
    p.expect(same, "detector tensor " + std::to_string(i) + " changed");
    p.expect(!y.requires_grad(), "detector tensor " + std::to_string(i) + " requires grad");
  }
  p.note = std::to_string(before.size()) + " detector tensors after " +
           std::to_string(trainer.step()) + " steps";
}

void overfit_smoke(Probe& p) {
  // Reference smoke run: desk scale, lr 3e-4 decayed tenfold at epoch 200.
  auto cfg = TrainConfig::desk_scale();
  cfg.seed = 1;
  cfg.lr0 = 3e-4;
  cfg.max_steps = kOverfitSteps;
  cfg.checkpoint_interval = 1000;
  auto [h, w] = cfg.source_size();
  auto corpus = synthetic_corpus(8, 1, h, w);
  RunOptions opts;
  opts.out_dir = scratch("overfit");
  double last_logged = 0;
  opts.on_step = [&](const StepMetrics& m) { last_logged = m.l1; };
  auto ckpt = train(cfg, corpus, opts);
  p.expect(ckpt.step == kOverfitSteps, "ran " + std::to_string(ckpt.step) + " steps");

  auto detector = make_edge_detector(cfg.edge_detector);
  Trainer trainer(cfg, detector);
  trainer.restore(ckpt);
  const int64_t epoch = ckpt.epoch;
  auto batch = make_training_batch(corpus, epoch_order(corpus.size(), epoch, cfg.seed), 0,
                                   corpus.size(), epoch, cfg, *detector);
  const double l1 = trainer.evaluate_l1(batch);
  p.expect(l1 < kOverfitL1Bound, "training-batch masked_l1 " + fmt(l1));
  p.note = "masked_l1 " + fmt(l1) + " (last logged " + fmt(last_logged) + ")";
  fs::remove_all(opts.out_dir);
}

void determinism(Probe& p) {
  auto cfg = desk_run_config();
  cfg.max_steps = kDeterminismSteps;
  cfg.checkpoint_interval = 5;
  auto [h, w] = cfg.source_size();
  auto corpus = synthetic_corpus(10, 8, h, w);  // 3 batches per epoch, last one short

  RunOptions a, b, c;
  a.out_dir = scratch("det_a");
  b.out_dir = scratch("det_b");
  c.out_dir = scratch("det_c");
  auto ca = train(cfg, corpus, a);
  train(cfg, corpus, b);
  const auto log_a = slurp(a.out_dir / "metrics.csv");
  p.expect(log_a == slurp(b.out_dir / "metrics.csv"), "two seeded runs logged different metrics");
  p.expect(ca.step == kDeterminismSteps, "first run stopped at " + std::to_string(ca.step));

  auto first = cfg;
  first.max_steps = 23;  // inside an epoch
  auto part = train(first, corpus, c);
  p.expect(part.batch_in_epoch != 0, "interruption landed on an epoch boundary");
  const auto mid = c.out_dir / "interrupted.bin";
  fs::rename(c.out_dir / "final.bin", mid);
  c.resume = mid;
  auto cc = train(cfg, corpus, c);
  p.expect(log_a == slurp(c.out_dir / "metrics.csv"), "resumed metric stream differs");
  const auto same = [](const std::vector<NamedTensor>& x, const std::vector<NamedTensor>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i].name != y[i].name || !torch::equal(x[i].value, y[i].value)) return false;
    }
    return true;
  };
  p.expect(same(ca.generator, cc.generator) && same(ca.critic_global, cc.critic_global) &&
               same(ca.critic_local, cc.critic_local),
           "resumed weights differ from the uninterrupted run");
  p.expect(same(ca.generator_optimizer, cc.generator_optimizer) &&
               same(ca.critic_optimizer, cc.critic_optimizer),
           "optimizer state differs");

  int64_t lines = 0;
  for (char ch : log_a) lines += ch == '\n';
  p.note = std::to_string(lines) + " metric lines, resumed at step " + std::to_string(part.step);
  for (auto* o : {&a, &b, &c}) fs::remove_all(o->out_dir);
}

// --- service contract ------------------------------------------------------

std::string png64(const cv::Mat& m) { return base64_encode(encode_png(m)); }

void service_contract(Probe& p) {
  const auto dir = scratch("service");
  const auto ratings = dir / "ratings.csv";
  const auto desk = ArchitectureScale::desk();
  const int hh = static_cast<int>(desk.half_height), hw = static_cast<int>(desk.half_width);

  OutpaintService service(ratings);
  p.expect(service.health().status == 503, "health before load");

  cv::Mat image(hh, hw, CV_8UC3);
  cv::randu(image, 0, 256);
  cv::Mat sketch(hh, hw, CV_8UC1, cv::Scalar(0));
  cv::line(sketch, {0, hh / 2}, {hw - 1, hh / 4}, cv::Scalar(255), 1);
  auto req = [&](int k) {
    json j{{"image", png64(image)}, {"sketches", json::array()}};
    for (int i = 0; i < k; ++i) j["sketches"].push_back(png64(sketch));
    return j;
  };
  p.expect(service.outpaint(req(1).dump()).status == 503, "outpaint before load");

  auto cfg = TrainConfig::desk_scale();
  auto ckpt_path = dir / "random.bin";
  save_checkpoint(Trainer(cfg, make_edge_detector(cfg.edge_detector)).checkpoint(), ckpt_path);
  service.load_in_background(ckpt_path);
  service.wait_loaded();
  p.expect(service.health().status == 200, "health after load");

  for (int k : {1, 2, 3}) {
    auto r = service.outpaint(req(k).dump());
    if (r.status != 200) {
      p.expect(false, "k=" + std::to_string(k) + " status " + std::to_string(r.status));
      continue;
    }
    auto out = decode_image(base64_decode(json::parse(r.body)["image"].get<std::string>()), false);
    p.expect(out.rows == hh && out.cols == hw * (k + 1), "k=" + std::to_string(k) + " width");
    cv::Mat diff;
    cv::absdiff(out(cv::Rect(0, 0, hw, hh)), image, diff);
    p.expect(cv::countNonZero(diff.reshape(1)) == 0, "left paste not byte-exact");
  }

  auto status = [&](const json& j) { return service.outpaint(j.dump()).status; };
  p.expect(service.outpaint("{oops").status == 400, "invalid JSON");
  auto missing = req(1);
  missing.erase("image");
  p.expect(status(missing) == 400, "missing image");
  auto undecodable = req(1);
  undecodable["sketches"][0] = base64_encode({0, 1, 2});
  p.expect(status(undecodable) == 400, "undecodable sketch");
  auto small = req(1);
  small["image"] = png64(image(cv::Rect(0, 0, hw, hh - 2)));
  p.expect(status(small) == 422, "wrong image size");
  p.expect(status(req(0)) == 422, "empty sketch list");
  auto grey = req(1);
  cv::Mat soft = sketch / 2;
  grey["sketches"][0] = png64(soft);
  grey["binarize_server_side"] = false;
  p.expect(status(grey) == 422, "non-binary sketch without binarization");

  p.expect(service.rate(json{{"example_id", "e1"}, {"rating", 2}, {"rater_id", "r"}}.dump())
                   .status == 200,
           "rate 2");
  p.expect(service.rate(json{{"example_id", "e1"}, {"rating", 3}}.dump()).status == 422, "rate 3");
  auto log = RatingLog::load(ratings);
  p.expect(log.entries.size() == 1 && log.entries[0].rating == 2, "rating log content");
  fs::remove_all(dir);
}

}  // namespace

int main() {
  torch::set_num_threads(std::max(1, torch::get_num_threads()));
  const std::vector<Criterion> criteria = {
      {"position-channels", 1, position_channels},
      {"gradient-suite", 300, gradient_suite},
      {"shape-walk", 60, shape_walk},
      {"loss-oracles", 60, loss_oracles},
      {"metric-oracles", 120, metric_oracles},
      {"augmentation-statistics", 300, augmentation},
      {"csc-identity", 60, csc_identity},
      {"frozen-detector", 600, frozen_detector},
      {"overfit-smoke", 900, overfit_smoke},
      {"determinism", 900, determinism},
      {"service-contract", 300, service_contract},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Probe probe;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(probe);
    } catch (const std::exception& e) {
      probe.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      probe.failures.push_back("took " + fmt(secs) + " s, budget " + fmt(c.budget_s) + " s");
    }
    const bool ok = probe.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("%s %s (%.1f s)", ok ? "PASS" : "FAIL", c.name.c_str(), secs);
    if (!probe.note.empty()) std::printf(" %s", probe.note.c_str());
    std::printf("\n");
    for (const auto& f : probe.failures) std::printf("    %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}

#include "sketchout/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "sketchout/losses.hpp"
#include "sketchout/raster.hpp"

namespace sketchout {
namespace fs = std::filesystem;
namespace {

enum StreamTag : uint64_t { kGeneratorInit = 1, kGlobalInit, kLocalInit, kShuffle, kExample, kStep };

/// Adam moments in parameter order. The step count rides along as a
/// 0-d int64 tensor.
std::vector<NamedTensor> save_optimizer(const torch::optim::Adam& opt) {
  std::vector<NamedTensor> out;
  int64_t index = 0;
  for (const auto& group : opt.param_groups()) {
    for (const auto& p : group.params()) {
      const auto prefix = "p" + std::to_string(index++) + ".";
      auto it = opt.state().find(p.unsafeGetTensorImpl());
      if (it == opt.state().end()) continue;
      const auto& st = static_cast<const torch::optim::AdamParamState&>(*it->second);
      out.push_back({prefix + "step", torch::tensor(st.step(), torch::kInt64)});
      out.push_back({prefix + "exp_avg", st.exp_avg().detach().clone()});
      out.push_back({prefix + "exp_avg_sq", st.exp_avg_sq().detach().clone()});
    }
  }
  return out;
}

void load_optimizer(torch::optim::Adam& opt, const std::vector<NamedTensor>& tensors) {
  std::map<std::string, torch::Tensor> by_name;
  for (const auto& [name, value] : tensors) by_name[name] = value;
  opt.state().clear();
  int64_t index = 0;
  for (const auto& group : opt.param_groups()) {
    for (const auto& p : group.params()) {
      const auto prefix = "p" + std::to_string(index++) + ".";
      auto step = by_name.find(prefix + "step");
      if (step == by_name.end()) continue;
      auto avg = by_name.find(prefix + "exp_avg");
      auto sq = by_name.find(prefix + "exp_avg_sq");
      if (avg == by_name.end() || sq == by_name.end() || !avg->second.sizes().equals(p.sizes()) ||
          !sq->second.sizes().equals(p.sizes())) {
        throw CheckpointError("optimizer state for parameter " + std::to_string(index - 1) +
                              " is incomplete or mis-shaped");
      }
      auto st = std::make_unique<torch::optim::AdamParamState>();
      st->step(step->second.item<int64_t>());
      st->exp_avg(avg->second.to(p.options()).clone());
      st->exp_avg_sq(sq->second.to(p.options()).clone());
      opt.state()[p.unsafeGetTensorImpl()] = std::move(st);
    }
  }
}

void set_lr(torch::optim::Optimizer& opt, double lr) {
  for (auto& group : opt.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

void set_requires_grad(const std::vector<torch::Tensor>& params, bool flag) {
  for (auto p : params) p.set_requires_grad(flag);
}

double checked(const torch::Tensor& value, const char* term) {
  const double v = value.item<double>();
  if (!std::isfinite(v)) {
    throw TrainingError(std::string("non-finite loss term '") + term + "' (" + std::to_string(v) + ")");
  }
  return v;
}

torch::Tensor uniform_eps(Rng& rng, int64_t n) {
  auto eps = torch::empty({n}, torch::kDouble);
  auto acc = eps.accessor<double, 1>();
  for (int64_t i = 0; i < n; ++i) acc[i] = uniform01(rng);
  return eps;
}

CriticFn as_fn(Critic& critic) {
  return [&critic](const torch::Tensor& image, const torch::Tensor& sketch) {
    return critic->forward(image, sketch);
  };
}

}  // namespace

// ---------------------------------------------------------------------------

ModelSet ModelSet::create(const ArchitectureScale& scale, uint64_t seed) {
  ModelSet m;
  m.scale = scale;
  m.generator = make_generator(scale, derive_seed(seed, {kGeneratorInit}));
  m.global_critic = make_global_critic(scale, derive_seed(seed, {kGlobalInit}));
  m.local_critic = make_local_critic(scale, derive_seed(seed, {kLocalInit}));
  return m;
}

void restore_models(ModelSet& models, const ModelCheckpoint& ckpt) {
  if (!(models.scale == ckpt.scale)) {
    throw CheckpointError("architecture mismatch: checkpoint scale " + ckpt.scale.name() +
                          " cannot load into a model of scale " + models.scale.name());
  }
  restore(*models.generator, ckpt.generator, "generator");
  restore(*models.global_critic, ckpt.critic_global, "global critic");
  restore(*models.local_critic, ckpt.critic_local, "local critic");
}

ModelSet models_from_checkpoint(const ModelCheckpoint& ckpt) {
  ckpt.scale.validate();
  ModelSet m;
  m.scale = ckpt.scale;
  m.generator = Generator(ckpt.scale);
  m.global_critic = Critic(ckpt.scale.half_height, ckpt.scale.full_width(), ckpt.scale);
  m.local_critic = Critic(ckpt.scale.half_height, ckpt.scale.half_width, ckpt.scale);
  restore_models(m, ckpt);
  return m;
}

std::string StepMetrics::csv() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%lld,%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                static_cast<long long>(step), static_cast<long long>(epoch), l1, ls, lg_global,
                lg_local, ld_global, ld_local, gp_global, gp_local, lr);
  return buf;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(TrainConfig cfg, std::shared_ptr<const EdgeDetector> detector)
    : cfg_(std::move(cfg)), detector_(std::move(detector)) {
  cfg_.validate();
  if (!detector_) detector_ = make_edge_detector(cfg_.edge_detector);
  models_ = ModelSet::create(cfg_.scale, cfg_.seed);
  const auto adam = [&] {
    return torch::optim::AdamOptions(cfg_.lr0).betas({cfg_.adam_beta1, cfg_.adam_beta2});
  };
  gen_opt_ = std::make_unique<torch::optim::Adam>(models_.generator->parameters(), adam());
  critic_opt_ = std::make_unique<torch::optim::Adam>(critic_parameters(), adam());
  mask_ = build_loss_mask(cfg_.scale.half_height, cfg_.scale.full_width(), cfg_.mask_floor)
              .view({1, 1, cfg_.scale.half_height, cfg_.scale.full_width()});
  set_epoch(0);
}

std::vector<torch::Tensor> Trainer::critic_parameters() const {
  auto params = models_.global_critic->parameters();
  auto local = models_.local_critic->parameters();
  params.insert(params.end(), local.begin(), local.end());
  return params;
}

void Trainer::set_epoch(int64_t epoch) {
  epoch_ = epoch;
  const double lr = lr_at(epoch, cfg_);
  set_lr(*gen_opt_, lr);
  set_lr(*critic_opt_, lr);
}

void Trainer::set_progress(int64_t epoch, int64_t batch_in_epoch) {
  set_epoch(epoch);
  batch_in_epoch_ = batch_in_epoch;
}

StepMetrics Trainer::train_step(const Batch& batch, Rng& rng) {
  auto& gen = models_.generator;
  auto& global = models_.global_critic;
  auto& local = models_.local_critic;
  const auto& w = cfg_.weights;
  const int64_t n = batch.size();

  StepMetrics m;
  m.epoch = epoch_;
  m.lr = lr_at(epoch_, cfg_);

  for (int64_t k = 0; k < cfg_.critic_steps_per_gen_step; ++k) {
    torch::Tensor fake;
    {
      torch::NoGradGuard no_grad;
      fake = gen->forward(batch.image_left, batch.sketch_left, batch.sketch_right);
    }
    const auto fake_right = split_halves(fake).second;
    auto dg_real = global->forward(batch.full_image, batch.full_sketch);
    auto dg_fake = global->forward(fake, batch.full_sketch);
    auto dl_real = local->forward(batch.image_right, batch.sketch_right);
    auto dl_fake = local->forward(fake_right, batch.sketch_right);
    auto gp_g = gradient_penalty(as_fn(global), batch.full_image, fake, batch.full_sketch,
                                 w.lambda_w, uniform_eps(rng, n));
    auto gp_l = gradient_penalty(as_fn(local), batch.image_right, fake_right, batch.sketch_right,
                                 w.lambda_w, uniform_eps(rng, n));
    auto ld_g = critic_loss(dg_real, dg_fake, gp_g);
    auto ld_l = critic_loss(dl_real, dl_fake, gp_l);
    m.gp_global = checked(gp_g, "gp_global");
    m.gp_local = checked(gp_l, "gp_local");
    m.ld_global = checked(ld_g, "ld_global");
    m.ld_local = checked(ld_l, "ld_local");
    critic_opt_->zero_grad();
    (ld_g + ld_l).backward();
    critic_opt_->step();
  }

  const auto critic_params = critic_parameters();
  set_requires_grad(critic_params, false);
  try {
    auto out = gen->forward(batch.image_left, batch.sketch_left, batch.sketch_right);
    auto out_right = split_halves(out).second;
    auto l1 = masked_l1(batch.full_image, out, mask_);
    auto ls = sketch_alignment_loss(out_right, batch.sketch_right, *detector_);
    torch::Tensor dg, dl;
    if (w.lambda_a > 0) {
      dg = global->forward(out, batch.full_sketch);
      dl = local->forward(out_right, batch.sketch_right);
    } else {
      torch::NoGradGuard no_grad;
      dg = global->forward(out.detach(), batch.full_sketch);
      dl = local->forward(out_right.detach(), batch.sketch_right);
    }
    auto lg_adv = generator_adv_loss(dg, dl, w.alpha);
    auto total = total_generator_loss(l1, ls, lg_adv, w);
    m.l1 = checked(l1, "l1");
    m.ls = checked(ls, "ls");
    m.lg_global = checked(-dg.mean(), "lg_global");
    m.lg_local = checked(-dl.mean(), "lg_local");
    checked(total, "generator_total");
    gen_opt_->zero_grad();
    total.backward();
    gen_opt_->step();
  } catch (...) {
    set_requires_grad(critic_params, true);
    throw;
  }
  set_requires_grad(critic_params, true);

  m.step = step_++;
  ++batch_in_epoch_;
  return m;
}

double Trainer::evaluate_l1(const Batch& batch) {
  torch::NoGradGuard no_grad;
  auto out = models_.generator->forward(batch.image_left, batch.sketch_left, batch.sketch_right);
  return masked_l1(batch.full_image, out, mask_).item<double>();
}

ModelCheckpoint Trainer::checkpoint() const {
  ModelCheckpoint ckpt;
  ckpt.fingerprint = cfg_.fingerprint();
  ckpt.config_text = cfg_.to_text();
  ckpt.scale = cfg_.scale;
  ckpt.epoch = epoch_;
  ckpt.batch_in_epoch = batch_in_epoch_;
  ckpt.step = step_;
  ckpt.generator = snapshot(*models_.generator);
  ckpt.critic_global = snapshot(*models_.global_critic);
  ckpt.critic_local = snapshot(*models_.local_critic);
  ckpt.generator_optimizer = save_optimizer(*gen_opt_);
  ckpt.critic_optimizer = save_optimizer(*critic_opt_);
  return ckpt;
}

void Trainer::restore(const ModelCheckpoint& ckpt) {
  if (ckpt.fingerprint != cfg_.fingerprint()) {
    throw CheckpointError("config fingerprint mismatch: checkpoint " + ckpt.fingerprint +
                          ", current configuration " + cfg_.fingerprint());
  }
  restore_models(models_, ckpt);
  load_optimizer(*gen_opt_, ckpt.generator_optimizer);
  load_optimizer(*critic_opt_, ckpt.critic_optimizer);
  step_ = ckpt.step;
  set_progress(ckpt.epoch, ckpt.batch_in_epoch);
}

// ---------------------------------------------------------------------------

std::vector<size_t> epoch_order(size_t corpus_size, int64_t epoch, uint64_t seed) {
  std::vector<size_t> order(corpus_size);
  std::iota(order.begin(), order.end(), size_t{0});
  auto rng = make_rng(seed, {kShuffle, static_cast<uint64_t>(epoch)});
  for (size_t i = corpus_size; i > 1; --i) {
    const auto j = static_cast<size_t>(uniform_int(rng, 0, static_cast<int64_t>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Batch make_training_batch(const Corpus& corpus, const std::vector<size_t>& order, size_t first,
                          size_t count, int64_t epoch, const TrainConfig& cfg,
                          const EdgeDetector& detector) {
  std::vector<TrainingExample> examples;
  examples.reserve(count);
  const auto policy = cfg.masking_policy();
  for (size_t k = first; k < first + count && k < order.size(); ++k) {
    const auto index = order[k];
    auto rng = make_rng(cfg.seed, {kExample, static_cast<uint64_t>(epoch), index});
    examples.push_back(make_example(corpus.items[index].image, detector, rng, policy, cfg.scale));
  }
  return collate(examples);
}

ModelCheckpoint train(const TrainConfig& cfg, const Corpus& corpus, const RunOptions& options) {
  if (corpus.empty()) throw CorpusError("empty corpus");
  Trainer trainer(cfg, make_edge_detector(cfg.edge_detector));
  if (options.resume) trainer.restore(load_checkpoint(*options.resume));

  std::error_code ec;
  fs::create_directories(options.out_dir, ec);
  if (ec) throw TrainingError("cannot create output directory " + options.out_dir.string());
  const auto metrics_path = options.out_dir / "metrics.csv";
  std::ofstream metrics(metrics_path, options.resume ? std::ios::app : std::ios::trunc);
  if (!metrics) throw TrainingError("cannot open metrics log " + metrics_path.string());

  const auto save = [&](const fs::path& path) { save_checkpoint(trainer.checkpoint(), path); };

  const auto batch_size = static_cast<size_t>(cfg.batch_size);
  const size_t batches_per_epoch = (corpus.size() + batch_size - 1) / batch_size;
  bool stop = cfg.max_steps > 0 && trainer.step() >= cfg.max_steps;
  for (int64_t epoch = trainer.epoch(); epoch < cfg.epochs && !stop; ++epoch) {
    trainer.set_progress(epoch, trainer.epoch() == epoch ? trainer.batch_in_epoch() : 0);
    const auto order = epoch_order(corpus.size(), epoch, cfg.seed);
    for (auto b = static_cast<size_t>(trainer.batch_in_epoch()); b < batches_per_epoch; ++b) {
      const auto batch = make_training_batch(corpus, order, b * batch_size, batch_size, epoch, cfg,
                                             trainer.detector());
      auto rng = make_rng(cfg.seed, {kStep, static_cast<uint64_t>(trainer.step())});
      const auto m = trainer.train_step(batch, rng);
      metrics << m.csv() << '\n';
      metrics.flush();
      if (!metrics) throw TrainingError("cannot append to metrics log " + metrics_path.string());
      if (options.on_step) options.on_step(m);
      if (cfg.max_steps > 0 && trainer.step() >= cfg.max_steps) {
        stop = true;
        break;
      }
    }
    if (trainer.batch_in_epoch() >= static_cast<int64_t>(batches_per_epoch)) {
      trainer.set_progress(epoch + 1, 0);
      if (cfg.checkpoint_interval > 0 && (epoch + 1) % cfg.checkpoint_interval == 0) {
        char name[64];
        std::snprintf(name, sizeof(name), "ckpt_epoch_%04lld.bin", static_cast<long long>(epoch + 1));
        save(options.out_dir / name);
        save(options.out_dir / "latest.bin");
      }
    }
  }
  auto final_ckpt = trainer.checkpoint();
  save_checkpoint(final_ckpt, options.out_dir / "final.bin");
  return final_ckpt;
}

}  // namespace sketchout

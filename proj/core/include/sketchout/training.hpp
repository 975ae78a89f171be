#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchout/checkpoint.hpp"
#include "sketchout/config.hpp"
#include "sketchout/corpus.hpp"
#include "sketchout/critics.hpp"
#include "sketchout/data.hpp"
#include "sketchout/edges.hpp"
#include "sketchout/generator.hpp"

namespace sketchout {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Generator plus both critics at one scale.
struct ModelSet {
  ArchitectureScale scale;
  Generator generator{nullptr};
  Critic global_critic{nullptr};
  Critic local_critic{nullptr};

  static ModelSet create(const ArchitectureScale& scale, uint64_t seed);
};

/// Rebuilds the models stored in a checkpoint (inference use).
ModelSet models_from_checkpoint(const ModelCheckpoint& checkpoint);

/// Loads checkpoint weights into existing models; the scales must agree.
void restore_models(ModelSet& models, const ModelCheckpoint& checkpoint);

/// One line of the metrics log.
struct StepMetrics {
  int64_t step = 0;
  int64_t epoch = 0;
  double l1 = 0, ls = 0;
  double lg_global = 0, lg_local = 0;
  double ld_global = 0, ld_local = 0;
  double gp_global = 0, gp_local = 0;
  double lr = 0;

  static constexpr const char* kColumns =
      "step,epoch,l1,ls,lg_global,lg_local,ld_global,ld_local,gp_global,gp_local,lr";
  std::string csv() const;
};

/// Owns models, optimizers and counters for one run. Critic parameters only
/// move inside critic updates and generator parameters only inside
/// generator updates.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::shared_ptr<const EdgeDetector> detector);

  /// critic_steps_per_gen_step critic updates, then one generator update.
  /// Throws TrainingError naming the offending term on a non-finite loss.
  StepMetrics train_step(const Batch& batch, Rng& rng);

  /// Applies lr_at(epoch) to both optimizers.
  void set_epoch(int64_t epoch);

  /// Masked L1 of the current generator on `batch`, without gradients.
  double evaluate_l1(const Batch& batch);

  ModelCheckpoint checkpoint() const;
  /// Restores models, optimizer moments and counters. The checkpoint's
  /// fingerprint must match this trainer's configuration.
  void restore(const ModelCheckpoint& checkpoint);

  ModelSet& models() { return models_; }
  const TrainConfig& config() const { return cfg_; }
  const EdgeDetector& detector() const { return *detector_; }
  const torch::Tensor& loss_mask() const { return mask_; }

  int64_t step() const { return step_; }
  int64_t epoch() const { return epoch_; }
  int64_t batch_in_epoch() const { return batch_in_epoch_; }
  void set_progress(int64_t epoch, int64_t batch_in_epoch);

 private:
  std::vector<torch::Tensor> critic_parameters() const;

  TrainConfig cfg_;
  std::shared_ptr<const EdgeDetector> detector_;
  ModelSet models_;
  std::unique_ptr<torch::optim::Adam> gen_opt_;
  std::unique_ptr<torch::optim::Adam> critic_opt_;
  torch::Tensor mask_;  // [1,1,H,2W_half]
  int64_t step_ = 0;
  int64_t epoch_ = 0;
  int64_t batch_in_epoch_ = 0;
};

/// Augmented batch for positions [first, first+count) of the epoch order.
/// Example randomness derives from (seed, epoch, corpus index).
Batch make_training_batch(const Corpus& corpus, const std::vector<size_t>& order, size_t first,
                          size_t count, int64_t epoch, const TrainConfig& cfg,
                          const EdgeDetector& detector);

/// Corpus visiting order for an epoch, derived from (seed, epoch).
std::vector<size_t> epoch_order(size_t corpus_size, int64_t epoch, uint64_t seed);

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;
  std::function<void(const StepMetrics&)> on_step;
};

/// Runs epochs until cfg.epochs (or cfg.max_steps). Writes metrics.csv,
/// ckpt_epoch_NNNN.bin every checkpoint_interval epochs, latest.bin and
/// final.bin into out_dir. Returns the final checkpoint.
ModelCheckpoint train(const TrainConfig& cfg, const Corpus& corpus, const RunOptions& options);

}  // namespace sketchout

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rawnet/audio.hpp"
#include "rawnet/model.hpp"
#include "rawnet/signal.hpp"
#include "rawnet/tape.hpp"

namespace rawnet {

struct OptimizerConfig {
  Real lr = 1e-2;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
  void validate() const;
};

/// Adam variant keeping an element-wise running maximum of the second
/// moment; no bias correction.
///   m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2;  vhat <- max(vhat, v)
///   theta <- theta - lr m / (sqrt(vhat) + eps)
class AmsGrad {
 public:
  struct Slot {
    std::vector<Real> m, v, vhat;
  };

  explicit AmsGrad(OptimizerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  void update(const std::string& name, std::span<Real> theta, std::span<const Real> grad);

  const OptimizerConfig& config() const { return cfg_; }
  std::map<std::string, Slot>& slots() { return slots_; }
  const std::map<std::string, Slot>& slots() const { return slots_; }

 private:
  OptimizerConfig cfg_;
  std::map<std::string, Slot> slots_;
};

struct TrainConfig {
  std::size_t clip_samples = 3200;
  std::size_t batch_size = 16;
  std::size_t steps = 1000;
  NoiseConfig noise;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 100;  // 0 disables periodic checkpoints
  Real clip_norm = 5.0;                // global gradient norm cap; 0 disables
  /// Round parameters and optimizer moments to float32 after every update so
  /// the checkpoint format stores the exact training state.
  bool f32_state = true;
  void validate(std::size_t frame_size) const;
};

/// One training window: noisy coder input plus teacher-forcing inputs and clean targets.
struct TrainItem {
  std::vector<Real> coder_input;
  std::vector<int> prev_levels;
  std::vector<int> targets;
};

/// Builds one item from a clean window. Teacher inputs are mu-law levels of
/// the voder-noised window shifted right by one (position 0 gets 128).
TrainItem make_item(std::span<const Real> clean, const NoiseConfig& noise, Rng& rng);

/// Draws batch_size random windows of clip_samples from clips long enough
/// to hold one; shorter clips are skipped (warning via `warn`).
std::vector<TrainItem> make_batch(const std::vector<AudioClip>& dataset, const TrainConfig& cfg, Rng& rng,
                                  const std::function<void(const std::string&)>& warn = {});

/// Mean per-sample cross-entropy of one teacher-forced window through coder and voder.
Tensor item_loss(const TrainItem& item, const ModelParams& params, Tape* tape = nullptr,
                 std::size_t* correct = nullptr);

struct Gradients {
  Real loss = 0;
  std::map<std::string, std::vector<Real>> grads;
  Real norm() const;
};

/// Mean batch loss and its gradient w.r.t. every named parameter. Items run
/// on parallel workers and their gradients are summed in item order.
Gradients compute_gradients(const ModelParams& params, const std::vector<TrainItem>& batch);

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

struct StepStats {
  Real loss = 0;
  Real grad_norm = 0;
};

/// Forward + backward + clipped AMSGrad update. Throws NonFiniteError naming
/// the step and the offending tensor when the loss or a gradient blows up.
StepStats train_step(ModelParams& params, const std::vector<TrainItem>& batch, AmsGrad& opt, const TrainConfig& cfg,
                     std::uint64_t step_index = 0);

struct TeacherForcedEval {
  Real loss = 0;
  Real accuracy = 0;  // fraction of positions whose argmax equals the target
};
TeacherForcedEval evaluate_teacher_forced(const ModelParams& params, const TrainItem& item);

/// Rounds every value to the nearest float32.
void round_to_f32(std::span<Real> values);
void round_to_f32(ModelParams& params);

struct OverfitResult {
  ModelParams params;
  std::vector<Real> losses;  // one per step, before that step's update
  TeacherForcedEval final_eval;
  std::size_t steps_run = 0;
};

struct OverfitOptions {
  std::size_t max_steps = 2000;
  /// Stop once the teacher-forced loss drops below this and the accuracy
  /// reaches min_accuracy (checked every eval_every steps). 0 runs max_steps.
  Real target_loss = 0;
  Real min_accuracy = 0;
  std::size_t eval_every = 25;
  std::function<void(std::size_t, Real)> on_step;
};

/// Trains on the first clip_samples of one clip with noise disabled.
OverfitResult overfit_single_clip(const AudioClip& clip, const ModelConfig& model, const TrainConfig& train,
                                  const OptimizerConfig& opt, const OverfitOptions& options);

}  // namespace rawnet

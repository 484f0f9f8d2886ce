#include "rawnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "rawnet/coder.hpp"
#include "rawnet/error.hpp"
#include "rawnet/mulaw.hpp"
#include "rawnet/ops.hpp"
#include "rawnet/voder.hpp"

namespace rawnet {

void OptimizerConfig::validate() const {
  if (!(lr >= 0)) throw ConfigError("optimizer lr must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1)) throw ConfigError("optimizer beta1 must be in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) throw ConfigError("optimizer beta2 must be in [0, 1)");
  if (!(eps > 0)) throw ConfigError("optimizer eps must be > 0");
}

void AmsGrad::update(const std::string& name, std::span<Real> theta, std::span<const Real> grad) {
  if (theta.size() != grad.size()) throw ShapeError("amsgrad: gradient size mismatch for '" + name + "'");
  Slot& s = slots_[name];
  if (s.m.empty()) {
    s.m.assign(theta.size(), 0);
    s.v.assign(theta.size(), 0);
    s.vhat.assign(theta.size(), 0);
  }
  if (s.m.size() != theta.size()) throw ShapeError("amsgrad: state size mismatch for '" + name + "'");
  const Real b1 = cfg_.beta1, b2 = cfg_.beta2;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const Real g = grad[i];
    s.m[i] = b1 * s.m[i] + (1 - b1) * g;
    s.v[i] = b2 * s.v[i] + (1 - b2) * g * g;
    s.vhat[i] = std::max(s.vhat[i], s.v[i]);
    theta[i] -= cfg_.lr * s.m[i] / (std::sqrt(s.vhat[i]) + cfg_.eps);
  }
}

void TrainConfig::validate(std::size_t frame_size) const {
  if (clip_samples == 0 || clip_samples % frame_size != 0)
    throw ConfigError("train clip_samples (" + std::to_string(clip_samples) + ") must be a positive multiple of " +
                      "the frame size (" + std::to_string(frame_size) + ")");
  if (batch_size == 0) throw ConfigError("train batch_size must be >= 1");
  if (!(noise.voder_sigma >= 0) || !(noise.coder_sigma >= 0)) throw ConfigError("noise sigmas must be >= 0");
  if (!(clip_norm >= 0)) throw ConfigError("clip_norm must be >= 0");
}

TrainItem make_item(std::span<const Real> clean, const NoiseConfig& noise, Rng& rng) {
  TrainItem item;
  item.coder_input = inject_noise(clean, noise.coder_sigma, rng);
  const auto noisy = inject_noise(clean, noise.voder_sigma, rng);
  item.targets.resize(clean.size());
  item.prev_levels.resize(clean.size());
  for (std::size_t t = 0; t < clean.size(); ++t) {
    item.targets[t] = mulaw::encode(clean[t]);
    item.prev_levels[t] = t == 0 ? mulaw::kZeroLevel : mulaw::encode(noisy[t - 1]);
  }
  return item;
}

std::vector<TrainItem> make_batch(const std::vector<AudioClip>& dataset, const TrainConfig& cfg, Rng& rng,
                                  const std::function<void(const std::string&)>& warn) {
  std::vector<const AudioClip*> usable;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].size() >= cfg.clip_samples)
      usable.push_back(&dataset[i]);
    else if (warn)
      warn("skipping clip " + std::to_string(i) + ": " + std::to_string(dataset[i].size()) +
           " samples is shorter than " + std::to_string(cfg.clip_samples));
  }
  if (usable.empty()) throw ConfigError("make_batch: no clip holds a full training window");
  std::vector<TrainItem> batch;
  batch.reserve(cfg.batch_size);
  for (std::size_t b = 0; b < cfg.batch_size; ++b) {
    const AudioClip& clip = *usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng)];
    const std::size_t start =
        std::uniform_int_distribution<std::size_t>(0, clip.size() - cfg.clip_samples)(rng);
    batch.push_back(make_item(std::span(clip.samples).subspan(start, cfg.clip_samples), cfg.noise, rng));
  }
  return batch;
}

Tensor item_loss(const TrainItem& item, const ModelParams& params, Tape* tape, std::size_t* correct) {
  const std::size_t T = item.targets.size();
  if (item.prev_levels.size() != T || item.coder_input.size() != T)
    throw ShapeError("item_loss: coder input, teacher inputs and targets differ in length");
  const auto& cfg = params.config;
  const std::size_t K = cfg.frame_size();
  Tensor feats = coder_forward(item.coder_input, params, tape);
  Tensor cond = condition_features(feats, params, tape);
  const VoderWeights w(params);

  Tensor h1({cfg.voder.gru1_hidden});
  Tensor h2({cfg.voder.gru2_hidden});
  Tensor cond_row;
  std::vector<Tensor> losses;
  losses.reserve(T);
  if (correct != nullptr) *correct = 0;
  for (std::size_t t = 0; t < T; ++t) {
    if (t % K == 0) cond_row = ops::row(cond, t / K, tape);
    Tensor x = ops::concat(ops::embedding(item.prev_levels[t], w.embed, tape), cond_row, tape);
    h1 = ops::gru_step(x, h1, w.gru1, tape);
    h2 = ops::gru_step(h1, h2, w.gru2, tape);
    Tensor logits = ops::dualfc(h2, w.dualfc, tape);
    auto ce = ops::softmax_cross_entropy(logits, item.targets[t], tape);
    if (correct != nullptr) {
      auto lv = logits.values();
      const auto best = std::max_element(lv.begin(), lv.end()) - lv.begin();
      if (best == item.targets[t]) ++*correct;
    }
    losses.push_back(std::move(ce.loss));
  }
  return ops::mean(losses, tape);
}

Real Gradients::norm() const {
  Real sq = 0;
  for (const auto& [_, g] : grads)
    for (Real v : g) sq += v * v;
  return std::sqrt(sq);
}

Gradients compute_gradients(const ModelParams& params, const std::vector<TrainItem>& batch) {
  if (batch.empty()) throw ConfigError("compute_gradients: empty batch");
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<Real> losses(batch.size());
  std::vector<std::map<std::string, std::vector<Real>>> item_grads(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < n; ++b) {
    const auto i = static_cast<std::size_t>(b);
    try {
      ModelParams worker = params.alias();
      worker.set_requires_grad(true);
      Tape tape;
      Tensor loss = item_loss(batch[i], worker, &tape);
      tape.backward(loss);
      losses[i] = loss.item();
      for (auto& [name, t] : worker.tensors) {
        auto g = t.grad();
        item_grads[i].emplace(name, std::vector<Real>(g.begin(), g.end()));
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Fixed-order reduction keeps results independent of the thread count.
  Gradients out;
  const Real scale = Real{1} / static_cast<Real>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += losses[i];
    for (auto& [name, g] : item_grads[i]) {
      auto& acc = out.grads[name];
      if (acc.empty()) acc.assign(g.size(), 0);
      for (std::size_t k = 0; k < g.size(); ++k) acc[k] += g[k];
    }
  }
  out.loss *= scale;
  for (auto& [_, g] : out.grads)
    for (auto& v : g) v *= scale;
  return out;
}

void round_to_f32(std::span<Real> values) {
  for (auto& v : values) v = static_cast<Real>(static_cast<float>(v));
}

void round_to_f32(ModelParams& params) {
  for (auto& [_, t] : params.tensors) round_to_f32(t.values());
}

StepStats train_step(ModelParams& params, const std::vector<TrainItem>& batch, AmsGrad& opt, const TrainConfig& cfg,
                     std::uint64_t step_index) {
  auto non_finite_params = [&] {
    std::string names;
    for (const auto& [name, t] : params.tensors)
      if (!all_finite(t.values())) names += (names.empty() ? "" : ", ") + name;
    return names.empty() ? std::string("none") : names;
  };
  Gradients g;
  try {
    g = compute_gradients(params, batch);
  } catch (const NumericError& e) {
    throw NonFiniteError("step " + std::to_string(step_index) + ": " + e.what() +
                         "; non-finite parameters: " + non_finite_params());
  }
  if (!std::isfinite(g.loss))
    throw NonFiniteError("step " + std::to_string(step_index) + ": non-finite loss " + std::to_string(g.loss) +
                         "; non-finite parameters: " + non_finite_params());
  for (const auto& [name, grad] : g.grads)
    if (!all_finite(grad))
      throw NonFiniteError("step " + std::to_string(step_index) + ": non-finite gradient in '" + name + "'");

  StepStats stats{g.loss, g.norm()};
  if (cfg.clip_norm > 0 && stats.grad_norm > cfg.clip_norm) {
    const Real scale = cfg.clip_norm / stats.grad_norm;
    for (auto& [_, grad] : g.grads)
      for (auto& v : grad) v *= scale;
  }
  for (auto& [name, t] : params.tensors) {
    opt.update(name, t.values(), g.grads.at(name));
    if (cfg.f32_state) {
      round_to_f32(t.values());
      auto& slot = opt.slots().at(name);
      round_to_f32(slot.m);
      round_to_f32(slot.v);
      round_to_f32(slot.vhat);
    }
  }
  return stats;
}

TeacherForcedEval evaluate_teacher_forced(const ModelParams& params, const TrainItem& item) {
  std::size_t correct = 0;
  Tensor loss = item_loss(item, params, nullptr, &correct);
  return {loss.item(), static_cast<Real>(correct) / static_cast<Real>(item.targets.size())};
}

OverfitResult overfit_single_clip(const AudioClip& clip, const ModelConfig& model, const TrainConfig& train,
                                  const OptimizerConfig& opt_cfg, const OverfitOptions& options) {
  train.validate(model.frame_size());
  if (clip.size() < train.clip_samples)
    throw InputTooShortError("overfit: clip has " + std::to_string(clip.size()) + " samples, needs " +
                             std::to_string(train.clip_samples));
  Rng rng(train.seed);
  const NoiseConfig silent{0, 0, train.seed};
  const TrainItem item = make_item(std::span(clip.samples).subspan(0, train.clip_samples), silent, rng);
  const std::vector<TrainItem> batch{item};

  OverfitResult result{init_params(model, train.seed), {}, {}, 0};
  if (train.f32_state) round_to_f32(result.params);
  AmsGrad opt(opt_cfg);
  for (std::size_t step = 0; step < options.max_steps; ++step) {
    const StepStats s = train_step(result.params, batch, opt, train, step);
    result.losses.push_back(s.loss);
    result.steps_run = step + 1;
    if (options.on_step) options.on_step(step, s.loss);
    if (options.target_loss > 0 && s.loss < options.target_loss && options.eval_every > 0 &&
        result.steps_run % options.eval_every == 0) {
      const auto eval = evaluate_teacher_forced(result.params, item);
      if (eval.loss < options.target_loss && eval.accuracy >= options.min_accuracy) break;
    }
  }
  result.final_eval = evaluate_teacher_forced(result.params, item);
  return result;
}

}  // namespace rawnet

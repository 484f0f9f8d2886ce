#include "rawnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rawnet/coder.hpp"
#include "rawnet/kernels.hpp"
#include "rawnet/model.hpp"
#include "rawnet/ops.hpp"
#include "rawnet/signal.hpp"
#include "rawnet/trainer.hpp"

namespace rawnet {

GradCheckReport grad_check(std::string name, const LossBuilder& loss,
                           std::vector<std::pair<std::string, Tensor>> tensors, const GradCheckOptions& opts) {
  GradCheckReport report;
  report.name = std::move(name);
  for (auto& [_, t] : tensors) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tape tape;
  tape.backward(loss(&tape));

  std::mt19937_64 rng(opts.seed);
  for (auto& [tname, t] : tensors) {
    const std::vector<Real> analytic(t.grad().begin(), t.grad().end());
    std::vector<std::size_t> idx(t.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (opts.max_entries_per_tensor > 0 && idx.size() > opts.max_entries_per_tensor) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(opts.max_entries_per_tensor);
      std::sort(idx.begin(), idx.end());
    }
    auto v = t.values();
    for (std::size_t i : idx) {
      const Real saved = v[i];
      v[i] = saved + opts.eps;
      const Real fp = loss(nullptr).item();
      v[i] = saved - opts.eps;
      const Real fm = loss(nullptr).item();
      v[i] = saved;
      const Real numeric = (fp - fm) / (2 * opts.eps);
      const Real a = analytic[i];
      const Real err = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), opts.denom_floor});
      ++report.checked;
      if (!(err <= report.max_rel_error)) {
        report.max_rel_error = std::isnan(err) ? INFINITY : err;
        report.worst = tname + "[" + std::to_string(i) + "]";
      }
    }
  }
  report.passed = report.max_rel_error <= opts.tol;
  return report;
}

namespace {

Tensor random_tensor(Shape shape, Rng& rng, Real lo = -1, Real hi = 1) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<Real> dist(lo, hi);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

std::vector<Real> random_weights(std::size_t n, Rng& rng) {
  std::vector<Real> w(n);
  std::uniform_real_distribution<Real> dist(-1, 1);
  for (auto& v : w) v = dist(rng);
  return w;
}

// Dense layer whose recorded backward has the wrong sign.
Tensor faulty_dense(const Tensor& x, const Tensor& W, const Tensor& b, Activation act, Tape* tape) {
  Tensor y = ops::dense(x, W, b, act, nullptr);
  if (Tape::wants(tape, {&x, &W, &b})) {
    tape->record("dense(sign-flipped)", {x, W, b}, y, [x, W, b, y, act]() mutable {
      if (!y.has_grad()) return;
      const std::size_t m = W.dim(0), n = W.dim(1);
      std::vector<Real> dpre(m);
      for (std::size_t i = 0; i < m; ++i) {
        const Real yv = y.values()[i];
        const Real d = act == Activation::tanh ? 1 - yv * yv : 1;
        dpre[i] = -y.grad()[i] * d;
      }
      if (b.requires_grad())
        for (std::size_t i = 0; i < m; ++i) b.grad_buffer()[i] += dpre[i];
      if (W.requires_grad()) kernels::outer_acc(dpre, x.values(), W.grad_buffer());
      if (x.requires_grad()) kernels::gemv_t_acc(W.values(), m, n, dpre, x.grad_buffer());
    });
  }
  return y;
}

}  // namespace

std::vector<GradCheckReport> run_gradcheck_suite(const GradCheckSuiteOptions& opts) {
  Rng rng(opts.seed);
  const auto& co = opts.check;
  std::vector<GradCheckReport> reports;

  {
    Tensor x = random_tensor({2, 11}, rng), w = random_tensor({3, 2, 3}, rng), b = random_tensor({3}, rng);
    const auto r = random_weights(3 * 5, rng);
    reports.push_back(grad_check(
        "conv1d", [&](Tape* t) { return ops::dot(ops::conv1d(x, w, b, 2, t), r, t); },
        {{"x", x}, {"w", w}, {"b", b}}, co));
  }
  {
    Tensor x = random_tensor({2, 10}, rng);
    const auto r = random_weights(2 * 3, rng);
    reports.push_back(grad_check(
        "maxpool1d", [&](Tape* t) { return ops::dot(ops::maxpool1d(x, 3, t), r, t); }, {{"x", x}}, co));
  }
  {
    Tensor x = random_tensor({5}, rng), W = random_tensor({4, 5}, rng), b = random_tensor({4}, rng);
    const auto r = random_weights(4, rng);
    const bool flip = opts.plant_sign_flip;
    reports.push_back(grad_check(
        "dense",
        [&](Tape* t) {
          Tensor y = flip ? faulty_dense(x, W, b, Activation::tanh, t) : ops::dense(x, W, b, Activation::tanh, t);
          return ops::dot(y, r, t);
        },
        {{"x", x}, {"W", W}, {"b", b}}, co));
  }
  {
    const std::size_t n = 3, m = 4;
    GruParams p{random_tensor({3 * m, n}, rng), random_tensor({3 * m, m}, rng), random_tensor({3 * m}, rng)};
    std::vector<Tensor> xs{random_tensor({n}, rng), random_tensor({n}, rng), random_tensor({n}, rng)};
    Tensor h0 = random_tensor({m}, rng);
    const auto r = random_weights(m, rng);
    reports.push_back(grad_check(
        "gru_step x3",
        [&](Tape* t) {
          Tensor h = h0;
          for (const auto& x : xs) h = ops::gru_step(x, h, p, t);
          return ops::dot(h, r, t);
        },
        {{"W", p.W}, {"U", p.U}, {"b", p.b}, {"h0", h0}, {"x0", xs[0]}, {"x1", xs[1]}, {"x2", xs[2]}}, co));
  }
  {
    Tensor E = random_tensor({256, 3}, rng);
    const auto r1 = random_weights(3, rng), r2 = random_weights(3, rng);
    reports.push_back(grad_check(
        "embedding",
        [&](Tape* t) {
          // Level 17 is used twice so its row accumulates two contributions.
          Tensor a = ops::dot(ops::embedding(17, E, t), r1, t);
          Tensor b = ops::dot(ops::embedding(17, E, t), r2, t);
          Tensor c = ops::dot(ops::embedding(200, E, t), r1, t);
          return ops::mean({a, b, c}, t);
        },
        {{"E", E}}, co));
  }
  {
    const std::size_t n = 4, m = 5;
    DualFcParams p{random_tensor({m, n}, rng), random_tensor({m, n}, rng), random_tensor({m}, rng),
                   random_tensor({m}, rng),    random_tensor({m}, rng),    random_tensor({m}, rng)};
    Tensor x = random_tensor({n}, rng);
    const auto r = random_weights(m, rng);
    reports.push_back(grad_check(
        "dualfc", [&](Tape* t) { return ops::dot(ops::dualfc(x, p, t), r, t); },
        {{"x", x}, {"W1", p.W1}, {"W2", p.W2}, {"a1", p.a1}, {"a2", p.a2}, {"b1", p.b1}, {"b2", p.b2}}, co));
  }
  {
    Tensor logits = random_tensor({256}, rng, -3, 3);
    reports.push_back(grad_check(
        "softmax_cross_entropy", [&](Tape* t) { return ops::softmax_cross_entropy(logits, 42, t).loss; },
        {{"logits", logits}}, co));
  }

  const ModelConfig small = ModelConfig::gradcheck();
  {
    ModelParams params = init_params(small, opts.seed);
    std::vector<Real> clip(320);
    std::uniform_real_distribution<Real> dist(-0.8, 0.8);
    for (auto& v : clip) v = dist(rng);
    const std::size_t frames = clip.size() / small.frame_size();
    const auto r = random_weights(frames * small.coder.feat_dim, rng);
    std::vector<std::pair<std::string, Tensor>> named;
    for (auto& [name, t] : params.tensors)
      if (name.rfind("coder.", 0) == 0) named.emplace_back(name, t);
    reports.push_back(grad_check(
        "coder stack", [&](Tape* t) { return ops::dot(coder_forward(clip, params, t), r, t); }, named, co));
  }
  {
    ModelParams params = init_params(small, opts.seed + 1);
    std::vector<Real> clip(4 * small.frame_size());
    for (std::size_t i = 0; i < clip.size(); ++i) clip[i] = 0.6 * std::sin(0.35 * static_cast<Real>(i));
    Rng item_rng(opts.seed);
    const TrainItem item = make_item(clip, NoiseConfig{0.05, 0.05, opts.seed}, item_rng);
    std::vector<std::pair<std::string, Tensor>> named(params.tensors.begin(), params.tensors.end());
    reports.push_back(grad_check(
        "coder+voder", [&](Tape* t) { return item_loss(item, params, t); }, named, co));
  }
  return reports;
}

}  // namespace rawnet

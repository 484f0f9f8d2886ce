#include "rawnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rawnet/error.hpp"
#include "rawnet/kernels.hpp"

namespace rawnet {

Activation parse_activation(std::string_view name) {
  if (name == "none" || name == "linear") return Activation::none;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation act) {
  switch (act) {
    case Activation::none: return "none";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "none";
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

namespace {

// Neumaier compensated sum.
struct CompensatedSum {
  Real sum = 0, c = 0;
  void add(Real x) {
    const Real t = sum + x;
    c += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  Real value() const { return sum + c; }
};

}  // namespace

std::vector<Real> softmax(std::span<const Real> logits) {
  std::vector<Real> p(logits.size());
  const Real mx = *std::max_element(logits.begin(), logits.end());
  Real sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

namespace ops {
namespace {

std::string dims_msg(std::string_view op, std::string_view what, std::size_t expected, std::size_t got) {
  return std::string(op) + ": " + std::string(what) + " expected " + std::to_string(expected) + ", got " +
         std::to_string(got);
}

void expect_rank(std::string_view op, std::string_view name, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank)
    throw ShapeError(std::string(op) + ": " + std::string(name) + " must have rank " + std::to_string(rank) +
                     ", got shape " + shape_str(t.shape()));
}

void expect_dim(std::string_view op, std::string_view what, std::size_t expected, std::size_t got) {
  if (expected != got) throw ShapeError(dims_msg(op, what, expected, got));
}

inline Real apply(Activation act, Real v) {
  switch (act) {
    case Activation::none: return v;
    case Activation::tanh: return std::tanh(v);
    case Activation::relu: return v > 0 ? v : Real{0};
    case Activation::sigmoid: return Real{1} / (Real{1} + std::exp(-v));
  }
  return v;
}

// Derivative expressed through the activation output y.
inline Real derivative(Activation act, Real y) {
  switch (act) {
    case Activation::none: return 1;
    case Activation::tanh: return 1 - y * y;
    case Activation::relu: return y > 0 ? Real{1} : Real{0};
    case Activation::sigmoid: return y * (1 - y);
  }
  return 1;
}

inline Real sigmoid(Real v) { return Real{1} / (Real{1} + std::exp(-v)); }

void add_into(std::span<Real> dst, std::span<const Real> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, Tape* tape) {
  constexpr std::string_view op = "conv1d";
  expect_rank(op, "input", x, 2);
  expect_rank(op, "kernel", w, 3);
  expect_rank(op, "bias", b, 1);
  if (stride == 0) throw ShapeError("conv1d: stride must be >= 1");
  expect_dim(op, "kernel in_channels (dim 1) vs input channels", x.dim(0), w.dim(1));
  expect_dim(op, "bias length vs kernel out_channels", w.dim(0), b.dim(0));
  const kernels::Conv1dDims d{x.dim(0), w.dim(0), w.dim(2), stride, x.dim(1)};
  if (d.in_length < d.kernel)
    throw InputTooShortError("conv1d: input length " + std::to_string(d.in_length) + " is shorter than kernel " +
                             std::to_string(d.kernel));
  Tensor y({d.out_channels, d.out_length()});
  kernels::conv1d_forward(d, x.values(), w.values(), b.values(), y.values());
  if (Tape::wants(tape, {&x, &w, &b})) {
    tape->record(std::string(op), {x, w, b}, y, [d, x, w, b, y]() mutable {
      if (!y.has_grad()) return;
      std::span<Real> dx, dw, db;
      if (x.requires_grad()) dx = x.grad_buffer();
      if (w.requires_grad()) dw = w.grad_buffer();
      if (b.requires_grad()) db = b.grad_buffer();
      kernels::conv1d_backward(d, x.values(), w.values(), y.grad(), dx, dw, db);
    });
  }
  return y;
}

Tensor maxpool1d(const Tensor& x, std::size_t width, Tape* tape) {
  expect_rank("maxpool1d", "input", x, 2);
  if (width == 0) throw ShapeError("maxpool1d: width must be >= 1");
  const std::size_t C = x.dim(0), L = x.dim(1);
  if (L < width)
    throw InputTooShortError("maxpool1d: input length " + std::to_string(L) + " is shorter than width " +
                             std::to_string(width));
  const std::size_t Lo = L / width;
  Tensor y({C, Lo});
  std::vector<std::size_t> argmax(C * Lo);
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < Lo; ++t) {
      std::size_t best = c * L + t * width;
      for (std::size_t j = 1; j < width; ++j) {
        const std::size_t idx = c * L + t * width + j;
        if (xv[idx] > xv[best]) best = idx;
      }
      argmax[c * Lo + t] = best;
      yv[c * Lo + t] = xv[best];
    }
  }
  if (Tape::wants(tape, {&x})) {
    tape->record("maxpool1d", {x}, y, [x, y, argmax = std::move(argmax)]() mutable {
      if (!y.has_grad()) return;
      auto dx = x.grad_buffer();
      auto dy = y.grad();
      for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += dy[i];
    });
  }
  return y;
}

Tensor activate(const Tensor& x, Activation act, Tape* tape) {
  Tensor y(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = apply(act, xv[i]);
  if (Tape::wants(tape, {&x})) {
    tape->record("activate", {x}, y, [x, y, act]() mutable {
      if (!y.has_grad()) return;
      auto dx = x.grad_buffer();
      auto dy = y.grad();
      auto yv = y.values();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * derivative(act, yv[i]);
    });
  }
  return y;
}

Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b, Activation act, Tape* tape) {
  constexpr std::string_view op = "dense";
  expect_rank(op, "weight", W, 2);
  expect_rank(op, "bias", b, 1);
  const std::size_t m = W.dim(0), n = W.dim(1);
  expect_dim(op, "input length vs weight columns", n, x.size());
  expect_dim(op, "bias length vs weight rows", m, b.dim(0));
  Tensor y({m});
  auto yv = y.values();
  kernels::gemv(W.values(), m, n, x.values(), b.values(), yv);
  for (auto& v : yv) v = apply(act, v);
  if (Tape::wants(tape, {&x, &W, &b})) {
    tape->record(std::string(op), {x, W, b}, y, [x, W, b, y, act, m, n]() mutable {
      if (!y.has_grad()) return;
      std::vector<Real> dpre(m);
      auto dy = y.grad();
      auto yv = y.values();
      for (std::size_t i = 0; i < m; ++i) dpre[i] = dy[i] * derivative(act, yv[i]);
      if (b.requires_grad()) add_into(b.grad_buffer(), dpre);
      if (W.requires_grad()) kernels::outer_acc(dpre, x.values(), W.grad_buffer());
      if (x.requires_grad()) kernels::gemv_t_acc(W.values(), m, n, dpre, x.grad_buffer());
    });
  }
  return y;
}

Tensor dense_rows(const Tensor& X, const Tensor& W, const Tensor& b, Activation act, Tape* tape) {
  constexpr std::string_view op = "dense_rows";
  expect_rank(op, "input", X, 2);
  expect_rank(op, "weight", W, 2);
  expect_rank(op, "bias", b, 1);
  const std::size_t R = X.dim(0), m = W.dim(0), n = W.dim(1);
  expect_dim(op, "input columns vs weight columns", n, X.dim(1));
  expect_dim(op, "bias length vs weight rows", m, b.dim(0));
  Tensor Y({R, m});
  auto xv = X.values();
  auto yv = Y.values();
  for (std::size_t r = 0; r < R; ++r) {
    auto yr = yv.subspan(r * m, m);
    kernels::gemv(W.values(), m, n, xv.subspan(r * n, n), b.values(), yr);
    for (auto& v : yr) v = apply(act, v);
  }
  if (Tape::wants(tape, {&X, &W, &b})) {
    tape->record(std::string(op), {X, W, b}, Y, [X, W, b, Y, act, R, m, n]() mutable {
      if (!Y.has_grad()) return;
      std::vector<Real> dpre(m);
      auto dy = Y.grad();
      auto yv = Y.values();
      auto xv = X.values();
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t i = 0; i < m; ++i) dpre[i] = dy[r * m + i] * derivative(act, yv[r * m + i]);
        if (b.requires_grad()) add_into(b.grad_buffer(), dpre);
        if (W.requires_grad()) kernels::outer_acc(dpre, xv.subspan(r * n, n), W.grad_buffer());
        if (X.requires_grad()) kernels::gemv_t_acc(W.values(), m, n, dpre, X.grad_buffer().subspan(r * n, n));
      }
    });
  }
  return Y;
}

Tensor gru_step(const Tensor& x, const Tensor& h, const GruParams& p, Tape* tape) {
  constexpr std::string_view op = "gru_step";
  expect_rank(op, "W", p.W, 2);
  expect_rank(op, "U", p.U, 2);
  expect_rank(op, "b", p.b, 1);
  const std::size_t m = p.U.dim(1), n = p.W.dim(1);
  expect_dim(op, "U rows vs 3*hidden", 3 * m, p.U.dim(0));
  expect_dim(op, "W rows vs 3*hidden", 3 * m, p.W.dim(0));
  expect_dim(op, "b length vs 3*hidden", 3 * m, p.b.dim(0));
  expect_dim(op, "input length vs W columns", n, x.size());
  expect_dim(op, "hidden state length vs hidden size", m, h.size());

  auto hv = h.values();
  std::vector<Real> a(3 * m);
  kernels::gemv(p.W.values(), 3 * m, n, x.values(), p.b.values(), a);
  std::vector<Real> u(2 * m);
  kernels::gemv(p.U.values().subspan(0, 2 * m * m), 2 * m, m, hv, {}, u);
  std::vector<Real> z(m), r(m), rh(m), c(m);
  for (std::size_t i = 0; i < m; ++i) {
    z[i] = sigmoid(a[i] + u[i]);
    r[i] = sigmoid(a[m + i] + u[m + i]);
    rh[i] = r[i] * hv[i];
  }
  std::vector<Real> uc(m);
  kernels::gemv(p.U.values().subspan(2 * m * m, m * m), m, m, rh, {}, uc);
  Tensor out({m});
  auto ov = out.values();
  for (std::size_t i = 0; i < m; ++i) {
    c[i] = std::tanh(a[2 * m + i] + uc[i]);
    ov[i] = (1 - z[i]) * hv[i] + z[i] * c[i];
  }

  if (Tape::wants(tape, {&x, &h, &p.W, &p.U, &p.b})) {
    tape->record(std::string(op), {x, h, p.W, p.U, p.b}, out,
                 [x, h, p, out, m, n, z = std::move(z), r = std::move(r), rh = std::move(rh),
                  c = std::move(c)]() mutable {
                   if (!out.has_grad()) return;
                   auto dout = out.grad();
                   auto hv = h.values();
                   std::vector<Real> dpre(3 * m);  // z, r, candidate pre-activations
                   std::vector<Real> dh(m);
                   for (std::size_t i = 0; i < m; ++i) {
                     const Real dz = dout[i] * (c[i] - hv[i]);
                     dh[i] = dout[i] * (1 - z[i]);
                     dpre[i] = dz * z[i] * (1 - z[i]);
                     dpre[2 * m + i] = dout[i] * z[i] * (1 - c[i] * c[i]);
                   }
                   auto Uc = p.U.values().subspan(2 * m * m, m * m);
                   std::vector<Real> drh(m, 0);
                   kernels::gemv_t_acc(Uc, m, m, std::span<const Real>(dpre).subspan(2 * m, m), drh);
                   for (std::size_t i = 0; i < m; ++i) {
                     dpre[m + i] = drh[i] * hv[i] * r[i] * (1 - r[i]);
                     dh[i] += drh[i] * r[i];
                   }
                   std::span<const Real> dzr(dpre.data(), 2 * m);
                   if (h.requires_grad()) {
                     kernels::gemv_t_acc(p.U.values().subspan(0, 2 * m * m), 2 * m, m, dzr, dh);
                     add_into(h.grad_buffer(), dh);
                   }
                   if (p.U.requires_grad()) {
                     auto dU = p.U.grad_buffer();
                     kernels::outer_acc(dzr, hv, dU.subspan(0, 2 * m * m));
                     kernels::outer_acc(std::span<const Real>(dpre).subspan(2 * m, m), rh, dU.subspan(2 * m * m));
                   }
                   if (p.b.requires_grad()) add_into(p.b.grad_buffer(), dpre);
                   if (p.W.requires_grad()) kernels::outer_acc(dpre, x.values(), p.W.grad_buffer());
                   if (x.requires_grad()) kernels::gemv_t_acc(p.W.values(), 3 * m, n, dpre, x.grad_buffer());
                 });
  }
  return out;
}

Tensor embedding(int level, const Tensor& E, Tape* tape) {
  expect_rank("embedding", "table", E, 2);
  const std::size_t V = E.dim(0), d = E.dim(1);
  if (level < 0 || static_cast<std::size_t>(level) >= V)
    throw IndexError("embedding: level " + std::to_string(level) + " outside [0, " + std::to_string(V - 1) + "]");
  const auto row_off = static_cast<std::size_t>(level) * d;
  auto src = E.values().subspan(row_off, d);
  Tensor y({d}, std::vector<Real>(src.begin(), src.end()));
  if (Tape::wants(tape, {&E})) {
    tape->record("embedding", {E}, y, [E, y, row_off, d]() mutable {
      if (!y.has_grad()) return;
      add_into(E.grad_buffer().subspan(row_off, d), y.grad());
    });
  }
  return y;
}

Tensor dualfc(const Tensor& x, const DualFcParams& p, Tape* tape) {
  constexpr std::string_view op = "dualfc";
  expect_rank(op, "W1", p.W1, 2);
  expect_rank(op, "W2", p.W2, 2);
  const std::size_t m = p.W1.dim(0), n = p.W1.dim(1);
  expect_dim(op, "W2 rows vs W1 rows", m, p.W2.dim(0));
  expect_dim(op, "W2 columns vs W1 columns", n, p.W2.dim(1));
  expect_dim(op, "input length vs W columns", n, x.size());
  for (const Tensor* t : {&p.a1, &p.a2, &p.b1, &p.b2}) expect_dim(op, "gain/bias length vs W rows", m, t->size());

  std::vector<Real> t1(m), t2(m);
  kernels::gemv(p.W1.values(), m, n, x.values(), p.b1.values(), t1);
  kernels::gemv(p.W2.values(), m, n, x.values(), p.b2.values(), t2);
  Tensor y({m});
  auto yv = y.values();
  auto a1 = p.a1.values(), a2 = p.a2.values();
  for (std::size_t i = 0; i < m; ++i) {
    t1[i] = std::tanh(t1[i]);
    t2[i] = std::tanh(t2[i]);
    yv[i] = a1[i] * t1[i] + a2[i] * t2[i];
  }
  if (Tape::wants(tape, {&x, &p.W1, &p.W2, &p.a1, &p.a2, &p.b1, &p.b2})) {
    tape->record(std::string(op), {x, p.W1, p.W2, p.a1, p.a2, p.b1, p.b2}, y,
                 [x, p, y, m, n, t1 = std::move(t1), t2 = std::move(t2)]() mutable {
                   if (!y.has_grad()) return;
                   auto dy = y.grad();
                   auto a1 = p.a1.values(), a2 = p.a2.values();
                   std::vector<Real> d1(m), d2(m);
                   for (std::size_t i = 0; i < m; ++i) {
                     d1[i] = dy[i] * a1[i] * (1 - t1[i] * t1[i]);
                     d2[i] = dy[i] * a2[i] * (1 - t2[i] * t2[i]);
                   }
                   if (p.a1.requires_grad()) {
                     auto g = p.a1.grad_buffer();
                     for (std::size_t i = 0; i < m; ++i) g[i] += dy[i] * t1[i];
                   }
                   if (p.a2.requires_grad()) {
                     auto g = p.a2.grad_buffer();
                     for (std::size_t i = 0; i < m; ++i) g[i] += dy[i] * t2[i];
                   }
                   if (p.b1.requires_grad()) add_into(p.b1.grad_buffer(), d1);
                   if (p.b2.requires_grad()) add_into(p.b2.grad_buffer(), d2);
                   if (p.W1.requires_grad()) kernels::outer_acc(d1, x.values(), p.W1.grad_buffer());
                   if (p.W2.requires_grad()) kernels::outer_acc(d2, x.values(), p.W2.grad_buffer());
                   if (x.requires_grad()) {
                     auto dx = x.grad_buffer();
                     kernels::gemv_t_acc(p.W1.values(), m, n, d1, dx);
                     kernels::gemv_t_acc(p.W2.values(), m, n, d2, dx);
                   }
                 });
  }
  return y;
}

CrossEntropy softmax_cross_entropy(const Tensor& logits, int target, Tape* tape) {
  const std::size_t V = logits.size();
  if (target < 0 || static_cast<std::size_t>(target) >= V)
    throw IndexError("softmax_cross_entropy: target " + std::to_string(target) + " outside [0, " +
                     std::to_string(V - 1) + "]");
  if (!all_finite(logits.values())) throw NumericError("softmax_cross_entropy: non-finite logits");
  auto lv = logits.values();
  const Real mx = *std::max_element(lv.begin(), lv.end());
  CompensatedSum acc;
  for (Real v : lv) acc.add(std::exp(v - mx));
  const Real log_sum = std::log(acc.value());
  const Real log_z = mx + log_sum;
  CrossEntropy out;
  out.probs.resize(V);
  for (std::size_t i = 0; i < V; ++i) out.probs[i] = std::exp(lv[i] - log_z);
  out.loss = Tensor::scalar((mx - lv[static_cast<std::size_t>(target)]) + log_sum);
  if (Tape::wants(tape, {&logits})) {
    tape->record("softmax_cross_entropy", {logits}, out.loss,
                 [logits, loss = out.loss, probs = out.probs, target]() mutable {
                   if (!loss.has_grad()) return;
                   const Real g = loss.grad()[0];
                   auto dl = logits.grad_buffer();
                   for (std::size_t i = 0; i < dl.size(); ++i) dl[i] += g * probs[i];
                   dl[static_cast<std::size_t>(target)] -= g;
                 });
  }
  return out;
}

Tensor concat(const Tensor& a, const Tensor& b, Tape* tape) {
  const std::size_t na = a.size(), nb = b.size();
  std::vector<Real> v;
  v.reserve(na + nb);
  v.insert(v.end(), a.values().begin(), a.values().end());
  v.insert(v.end(), b.values().begin(), b.values().end());
  Tensor y({na + nb}, std::move(v));
  if (Tape::wants(tape, {&a, &b})) {
    tape->record("concat", {a, b}, y, [a, b, y, na, nb]() mutable {
      if (!y.has_grad()) return;
      auto dy = y.grad();
      if (a.requires_grad()) add_into(a.grad_buffer(), dy.subspan(0, na));
      if (b.requires_grad()) add_into(b.grad_buffer(), dy.subspan(na, nb));
    });
  }
  return y;
}

Tensor row(const Tensor& X, std::size_t i, Tape* tape) {
  expect_rank("row", "input", X, 2);
  if (i >= X.dim(0))
    throw IndexError("row: index " + std::to_string(i) + " outside " + std::to_string(X.dim(0)) + " rows");
  const std::size_t n = X.dim(1);
  auto src = X.values().subspan(i * n, n);
  Tensor y({n}, std::vector<Real>(src.begin(), src.end()));
  if (Tape::wants(tape, {&X})) {
    tape->record("row", {X}, y, [X, y, i, n]() mutable {
      if (!y.has_grad()) return;
      add_into(X.grad_buffer().subspan(i * n, n), y.grad());
    });
  }
  return y;
}

Tensor stack_rows(const std::vector<Tensor>& rows, Tape* tape) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const std::size_t n = rows.front().size();
  std::vector<Real> v;
  v.reserve(rows.size() * n);
  bool any_grad = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    expect_dim("stack_rows", "row " + std::to_string(r) + " length", n, rows[r].size());
    v.insert(v.end(), rows[r].values().begin(), rows[r].values().end());
    any_grad = any_grad || rows[r].requires_grad();
  }
  Tensor Y({rows.size(), n}, std::move(v));
  if (tape != nullptr && any_grad) {
    tape->record("stack_rows", rows, Y, [rows, Y, n]() mutable {
      if (!Y.has_grad()) return;
      auto dy = Y.grad();
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].requires_grad()) add_into(rows[r].grad_buffer(), dy.subspan(r * n, n));
    });
  }
  return Y;
}

Tensor transpose(const Tensor& X, Tape* tape) {
  expect_rank("transpose", "input", X, 2);
  const std::size_t R = X.dim(0), C = X.dim(1);
  Tensor Y({C, R});
  auto xv = X.values();
  auto yv = Y.values();
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) yv[j * R + i] = xv[i * C + j];
  if (Tape::wants(tape, {&X})) {
    tape->record("transpose", {X}, Y, [X, Y, R, C]() mutable {
      if (!Y.has_grad()) return;
      auto dy = Y.grad();
      auto dx = X.grad_buffer();
      for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = 0; j < C; ++j) dx[i * C + j] += dy[j * R + i];
    });
  }
  return Y;
}

Tensor reflect_pad(const Tensor& X, std::size_t left, std::size_t right, Tape* tape) {
  expect_rank("reflect_pad", "input", X, 2);
  const std::size_t C = X.dim(0), L = X.dim(1), Lp = L + left + right;
  std::vector<std::size_t> src(Lp);
  for (std::size_t t = 0; t < Lp; ++t)
    src[t] = reflect_index(static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(left), L);
  Tensor Y({C, Lp});
  auto xv = X.values();
  auto yv = Y.values();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < Lp; ++t) yv[c * Lp + t] = xv[c * L + src[t]];
  if (Tape::wants(tape, {&X})) {
    tape->record("reflect_pad", {X}, Y, [X, Y, C, L, Lp, src = std::move(src)]() mutable {
      if (!Y.has_grad()) return;
      auto dy = Y.grad();
      auto dx = X.grad_buffer();
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < Lp; ++t) dx[c * L + src[t]] += dy[c * Lp + t];
    });
  }
  return Y;
}

Tensor mean(const std::vector<Tensor>& scalars, Tape* tape) {
  if (scalars.empty()) throw ShapeError("mean: no inputs");
  CompensatedSum acc;
  bool any_grad = false;
  for (const auto& s : scalars) {
    acc.add(s.item());
    any_grad = any_grad || s.requires_grad();
  }
  const Real scale = Real{1} / static_cast<Real>(scalars.size());
  Tensor y = Tensor::scalar(acc.value() * scale);
  if (tape != nullptr && any_grad) {
    tape->record("mean", scalars, y, [scalars, y, scale]() mutable {
      if (!y.has_grad()) return;
      const Real g = y.grad()[0] * scale;
      for (auto& s : scalars)
        if (s.requires_grad()) s.grad_buffer()[0] += g;
    });
  }
  return y;
}

Tensor dot(const Tensor& x, std::span<const Real> weights, Tape* tape) {
  expect_dim("dot", "weights length vs input size", x.size(), weights.size());
  Real acc = 0;
  auto xv = x.values();
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i] * weights[i];
  Tensor y = Tensor::scalar(acc);
  if (Tape::wants(tape, {&x})) {
    tape->record("dot", {x}, y, [x, y, w = std::vector<Real>(weights.begin(), weights.end())]() mutable {
      if (!y.has_grad()) return;
      const Real g = y.grad()[0];
      auto dx = x.grad_buffer();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g * w[i];
    });
  }
  return y;
}

}  // namespace ops
}  // namespace rawnet

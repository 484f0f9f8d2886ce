#include "rawnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "rawnet/error.hpp"

namespace rawnet {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (shape[i] == 0) throw ShapeError("tensor extent of axis " + std::to_string(i) + " must be positive");
}
}  // namespace

Tensor::Tensor(Shape shape, bool requires_grad) {
  check_shape(shape);
  const std::size_t n = shape_size(shape);
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->values = std::make_shared<std::vector<Real>>(n, Real{0});
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<Real> values, bool requires_grad) {
  check_shape(shape);
  if (shape_size(shape) != values.size())
    throw ShapeError("tensor of shape " + shape_str(shape) + " needs " + std::to_string(shape_size(shape)) +
                     " values, got " + std::to_string(values.size()));
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->values = std::make_shared<std::vector<Real>>(std::move(values));
  impl_->requires_grad = requires_grad;
}

const Tensor::Impl& Tensor::impl() const {
  if (!impl_) throw Error("use of undefined tensor");
  return *impl_;
}

Tensor::Impl& Tensor::impl() {
  if (!impl_) throw Error("use of undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  return s[axis];
}

std::size_t Tensor::size() const { return impl().values->size(); }

std::span<const Real> Tensor::values() const { return *impl().values; }
std::span<Real> Tensor::values() { return *impl().values; }

Real Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return values()[0];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }
void Tensor::set_requires_grad(bool flag) { impl().requires_grad = flag; }

bool Tensor::has_grad() const { return !impl().grad.empty(); }

std::span<const Real> Tensor::grad() const {
  auto& self = const_cast<Impl&>(impl());
  if (self.grad.empty()) self.grad.assign(self.values->size(), Real{0});
  return self.grad;
}

std::span<Real> Tensor::grad_buffer() const {
  if (!impl_) throw Error("use of undefined tensor");
  Impl& self = *impl_;
  if (self.grad.empty()) self.grad.assign(self.values->size(), Real{0});
  return self.grad;
}

void Tensor::zero_grad() {
  auto& g = impl().grad;
  std::fill(g.begin(), g.end(), Real{0});
}

void Tensor::drop_grad() {
  impl().grad.clear();
  impl().grad.shrink_to_fit();
}

Tensor Tensor::clone() const {
  Tensor out(shape(), std::vector<Real>(values().begin(), values().end()), requires_grad());
  return out;
}

Tensor Tensor::alias() const {
  Tensor out;
  out.impl_ = std::make_shared<Impl>();
  out.impl_->shape = impl().shape;
  out.impl_->values = impl().values;
  out.impl_->requires_grad = impl().requires_grad;
  return out;
}

Tensor Tensor::reshaped(Shape shape) const {
  check_shape(shape);
  if (shape_size(shape) != size())
    throw ShapeError("cannot reshape " + shape_str(this->shape()) + " to " + shape_str(shape));
  Tensor out = alias();
  out.impl_->shape = std::move(shape);
  return out;
}

bool all_finite(std::span<const Real> values) {
  return std::all_of(values.begin(), values.end(), [](Real v) { return std::isfinite(v); });
}

}  // namespace rawnet

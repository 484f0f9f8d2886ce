#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rawnet {

using Real = double;
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major n-d array with optional gradient buffer.
///
/// Tensor is a handle: copies share the same storage, as autodiff tapes need
/// to refer back to the exact tensors an op consumed. Use clone() for a deep
/// copy and alias() for a new leaf that shares values but owns its gradient
/// (one per data-parallel worker).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  // a braced single integer would otherwise bind to requires_grad
  Tensor(Shape, int) = delete;
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  static Tensor scalar(Real v, bool requires_grad = false) { return Tensor({1}, {v}, requires_grad); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const Real> values() const;
  std::span<Real> values();
  Real operator[](std::size_t i) const { return values()[i]; }
  Real item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  /// Gradient buffer; zeros if nothing has been accumulated yet.
  std::span<const Real> grad() const;
  /// Mutable gradient buffer, allocated (zero-filled) on first use.
  std::span<Real> grad_buffer() const;
  void zero_grad();
  void drop_grad();

  Tensor clone() const;
  Tensor alias() const;
  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }

  /// Reinterprets the values under a new shape with the same element count.
  Tensor reshaped(Shape shape) const;

 private:
  struct Impl {
    Shape shape;
    std::shared_ptr<std::vector<Real>> values;
    std::vector<Real> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
  const Impl& impl() const;
  Impl& impl();
};

bool all_finite(std::span<const Real> values);

}  // namespace rawnet

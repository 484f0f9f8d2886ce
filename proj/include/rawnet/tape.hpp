#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rawnet/tensor.hpp"

namespace rawnet {

/// Ordered record of differentiable ops executed in one forward pass.
///
/// Single-threaded. Independent tapes can run on separate threads as long as
/// their leaves do not share gradient buffers (see Tensor::alias).
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Record {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  /// True when an op over these inputs must be recorded.
  static bool wants(const Tape* tape, std::initializer_list<const Tensor*> inputs);

  void record(std::string op, std::vector<Tensor> inputs, Tensor output, BackwardFn backward);

  /// Seeds d(root)/d(root) = 1 and runs every record in reverse order.
  /// Gradients accumulate into existing buffers; call zero_grad on leaves first.
  void backward(Tensor root);

  std::size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }
  void clear() { records_.clear(); }

 private:
  std::vector<Record> records_;
};

}  // namespace rawnet

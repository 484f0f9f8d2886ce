#include "rawnet/tape.hpp"

#include "rawnet/error.hpp"

namespace rawnet {

bool Tape::wants(const Tape* tape, std::initializer_list<const Tensor*> inputs) {
  if (tape == nullptr) return false;
  for (const Tensor* t : inputs)
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  return false;
}

void Tape::record(std::string op, std::vector<Tensor> inputs, Tensor output, BackwardFn backward) {
  output.set_requires_grad(true);
  records_.push_back(Record{std::move(op), std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(Tensor root) {
  if (!root.defined()) throw TapeError("backward on undefined tensor");
  if (root.size() != 1) throw TapeError("backward root must be a scalar, got " + shape_str(root.shape()));
  std::size_t end = records_.size();
  while (end > 0 && !records_[end - 1].output.same_as(root)) --end;
  if (end == 0) throw TapeError("backward before forward: root tensor was not produced on this tape");
  root.grad_buffer()[0] += Real{1};
  for (std::size_t i = end; i-- > 0;) records_[i].backward();
}

}  // namespace rawnet

#include "mf/tensor.hpp"

#include <cmath>

#include "mf/error.hpp"

namespace mf {

static std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  Tensor t;
  t.shape = std::move(shape);
  for (std::size_t d : t.shape) {
    if (d == 0) throw DimensionError("tensor: zero-sized dimension");
  }
  t.values = std::make_shared<std::vector<double>>(shape_numel(t.shape), 0.0);
  t.requires_grad = requires_grad;
  if (requires_grad) t.ensure_grad();
  return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data,
                    bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor: shape does not match value count");
  }
  Tensor t;
  t.shape = std::move(shape);
  t.values = std::make_shared<std::vector<double>>(std::move(data));
  t.requires_grad = requires_grad;
  if (requires_grad) t.ensure_grad();
  return t;
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

std::size_t Tensor::numel() const { return values ? values->size() : 0; }

std::size_t Tensor::rows() const {
  if (shape.size() == 1) return 1;
  if (shape.size() == 2) return shape[0];
  throw DimensionError("tensor: rows() needs rank 1 or 2");
}

std::size_t Tensor::cols() const {
  if (shape.size() == 1) return shape[0];
  if (shape.size() == 2) return shape[1];
  throw DimensionError("tensor: cols() needs rank 1 or 2");
}

double Tensor::scalar_value() const {
  if (!is_scalar()) throw DimensionError("tensor: not a scalar");
  return (*values)[0];
}

void Tensor::ensure_grad() {
  if (!grad) grad = std::make_shared<std::vector<double>>(numel(), 0.0);
}

void Tensor::zero_grad() {
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
}

void Tensor::check_finite(const std::string& what) const {
  for (double v : *values) {
    if (!std::isfinite(v)) throw NumericError(what + ": non-finite value");
  }
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() {
  prev_ = g_active_tape;
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::replay_backward() {
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

void backward(const Tensor& loss) {
  if (!loss.is_scalar()) throw DimensionError("backward: loss must be scalar");
  Tape* tape = Tape::active();
  if (!tape) throw NumericError("backward: no active tape");
  if (!loss.grad) throw NumericError("backward: loss was not recorded");
  (*loss.grad)[0] = 1.0;
  tape->replay_backward();
}

}  // namespace mf

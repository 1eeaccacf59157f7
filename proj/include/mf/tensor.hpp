#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mf {

// Dense row-major tensor of 64-bit floats with explicit shape metadata.
// Copies share storage (handle semantics); the gradient buffer exists iff
// requires_grad is set and always matches values in length.
struct Tensor {
  std::vector<std::size_t> shape;
  std::shared_ptr<std::vector<double>> values;
  std::shared_ptr<std::vector<double>> grad;
  bool requires_grad = false;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v);

  std::size_t numel() const;
  // 2-D accessors; rank-1 tensors count as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double at(std::size_t i) const { return (*values)[i]; }
  double& at(std::size_t i) { return (*values)[i]; }
  double at2(std::size_t r, std::size_t c) const { return (*values)[r * cols() + c]; }
  double& at2(std::size_t r, std::size_t c) { return (*values)[r * cols() + c]; }

  bool is_scalar() const { return numel() == 1; }
  double scalar_value() const;

  void ensure_grad();
  void zero_grad();
  // Throws NumericError naming `what` if any value is NaN/Inf.
  void check_finite(const std::string& what) const;
};

// Reverse-mode operation tape. Ops executed while a tape is active append a
// backward closure; backward() replays them in reverse order (creation order
// is a valid topological order). Cleared once per training step by the
// caller. At most one tape is active per thread.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }
  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

  void replay_backward();

 private:
  std::vector<std::function<void()>> nodes_;
  Tape* prev_ = nullptr;
};

// Seeds d(loss) = 1 and accumulates gradients of every recorded input.
// The loss must be scalar and produced under the active tape.
void backward(const Tensor& loss);

}  // namespace mf

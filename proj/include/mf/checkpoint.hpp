#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mf/tensor.hpp"

namespace mf {

// Ordered named-tensor store; the payload of a checkpoint file.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }

  std::size_t total_parameters() const;
  void zero_grads();
  double grad_norm() const;
  void clip_grad_norm(double max_norm);

  // Deep copy of values (fresh storage, gradients reset).
  ParameterStore clone() const;
  // Overwrite values in place from another store with identical names/shapes.
  void copy_values_from(const ParameterStore& other);

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Tensor> by_name_;
};

// Binary container: magic "PETCKPT1", u64 tensor count; per tensor
// u64 name length, UTF-8 name, u64 rank, u64 dims, f64 values.
// All integers and floats little-endian. Round-trips bit-exactly.
void save_checkpoint(const ParameterStore& store, const std::string& path);
ParameterStore load_checkpoint(const std::string& path);

}  // namespace mf

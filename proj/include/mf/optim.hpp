#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mf/checkpoint.hpp"

namespace mf {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// AdamW with decoupled weight decay and bias correction. Moment buffers are
// keyed by parameter name; the step counter increases once per step() call.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  void step(ParameterStore& params);
  std::int64_t step_count() const { return step_count_; }
  const AdamWConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamWConfig cfg_;
  std::int64_t step_count_ = 0;
  std::unordered_map<std::string, std::vector<double>> m_;
  std::unordered_map<std::string, std::vector<double>> v_;
};

}  // namespace mf

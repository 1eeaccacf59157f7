#include "mf/optim.hpp"

#include <cmath>

#include "mf/error.hpp"

namespace mf {

void AdamW::step(ParameterStore& params) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (const auto& name : params.names()) {
    Tensor& p = params.get(name);
    if (!p.requires_grad || !p.grad) continue;
    const std::size_t n = p.numel();
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) m.assign(n, 0.0);
    if (v.empty()) v.assign(n, 0.0);
    if (m.size() != n || v.size() != n)
      throw DimensionError("adamw: moment size mismatch for " + name);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = (*p.grad)[i];
      if (!std::isfinite(g))
        throw NumericError("adamw: non-finite gradient in parameter " + name);
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      double& w = (*p.values)[i];
      w -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * w);
    }
  }
}

}  // namespace mf

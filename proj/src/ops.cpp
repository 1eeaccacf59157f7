#include "mf/ops.hpp"

#include <algorithm>
#include <cmath>

#include "mf/error.hpp"

namespace mf {

namespace {

bool tracked(const Tensor& t) { return t.requires_grad && Tape::active(); }

Tensor out_like(std::vector<std::size_t> shape, bool track) {
  return Tensor::zeros(std::move(shape), track);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape) throw DimensionError(std::string(op) + ": shape mismatch");
}

void record(std::function<void()> fn) { Tape::active()->record(std::move(fn)); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const bool track = tracked(a) || tracked(b);
  Tensor out = out_like(a.shape, track);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) (*out.values)[i] = (*a.values)[i] + (*b.values)[i];
  if (track) {
    record([a, b, out]() {
      const std::size_t m = out.numel();
      if (a.requires_grad)
        for (std::size_t i = 0; i < m; ++i) (*a.grad)[i] += (*out.grad)[i];
      if (b.requires_grad)
        for (std::size_t i = 0; i < m; ++i) (*b.grad)[i] += (*out.grad)[i];
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const bool track = tracked(a) || tracked(b);
  Tensor out = out_like(a.shape, track);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) (*out.values)[i] = (*a.values)[i] - (*b.values)[i];
  if (track) {
    record([a, b, out]() {
      const std::size_t m = out.numel();
      if (a.requires_grad)
        for (std::size_t i = 0; i < m; ++i) (*a.grad)[i] += (*out.grad)[i];
      if (b.requires_grad)
        for (std::size_t i = 0; i < m; ++i) (*b.grad)[i] -= (*out.grad)[i];
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const bool track = tracked(a) || tracked(b);
  Tensor out = out_like(a.shape, track);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) (*out.values)[i] = (*a.values)[i] * (*b.values)[i];
  if (track) {
    record([a, b, out]() {
      const std::size_t m = out.numel();
      if (a.requires_grad)
        for (std::size_t i = 0; i < m; ++i) (*a.grad)[i] += (*out.grad)[i] * (*b.values)[i];
      if (b.requires_grad)
        for (std::size_t i = 0; i < m; ++i) (*b.grad)[i] += (*out.grad)[i] * (*a.values)[i];
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  const bool track = tracked(a);
  Tensor out = out_like(a.shape, track);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) (*out.values)[i] = (*a.values)[i] * c;
  if (track) {
    record([a, out, c]() {
      const std::size_t m = out.numel();
      for (std::size_t i = 0; i < m; ++i) (*a.grad)[i] += (*out.grad)[i] * c;
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0]) {
    throw DimensionError("matmul: inner dimensions disagree");
  }
  const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  const bool track = tracked(a) || tracked(b);
  Tensor out = out_like({m, n}, track);
  {
    const double* pa = a.values->data();
    const double* pb = b.values->data();
    double* pc = out.values->data();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = pa[i * k + kk];
        if (aik == 0.0) continue;
        const double* brow = pb + kk * n;
        double* crow = pc + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  }
  if (track) {
    record([a, b, out, m, k, n]() {
      const double* pdc = out.grad->data();
      if (a.requires_grad) {
        // dA = dC . B^T
        double* pda = a.grad->data();
        const double* pb = b.values->data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double* brow = pb + kk * n;
            const double* dcrow = pdc + i * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
            pda[i * k + kk] += acc;
          }
        }
      }
      if (b.requires_grad) {
        // dB = A^T . dC
        double* pdb = b.grad->data();
        const double* pa = a.values->data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* dcrow = pdc + i * n;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = pa[i * k + kk];
            if (aik == 0.0) continue;
            double* dbrow = pdb + kk * n;
            for (std::size_t j = 0; j < n; ++j) dbrow[j] += aik * dcrow[j];
          }
        }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.shape.size() != 2) throw DimensionError("transpose: rank 2 required");
  const std::size_t m = a.shape[0], n = a.shape[1];
  const bool track = tracked(a);
  Tensor out = out_like({n, m}, track);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) (*out.values)[j * m + i] = (*a.values)[i * n + j];
  if (track) {
    record([a, out, m, n]() {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*a.grad)[i * n + j] += (*out.grad)[j * m + i];
    });
  }
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  if (b.shape.size() != 1 || x.cols() != b.shape[0]) {
    throw DimensionError("add_bias: bias must match last dimension");
  }
  const std::size_t m = x.rows(), n = x.cols();
  const bool track = tracked(x) || tracked(b);
  Tensor out = out_like(x.shape, track);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      (*out.values)[i * n + j] = (*x.values)[i * n + j] + (*b.values)[j];
  if (track) {
    record([x, b, out, m, n]() {
      if (x.requires_grad) {
        const std::size_t total = m * n;
        for (std::size_t i = 0; i < total; ++i) (*x.grad)[i] += (*out.grad)[i];
      }
      if (b.requires_grad) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) (*b.grad)[j] += (*out.grad)[i * n + j];
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  const bool track = tracked(x);
  Tensor out = out_like(x.shape, track);
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) (*out.values)[i] = std::max(0.0, (*x.values)[i]);
  if (track) {
    record([x, out, n]() {
      for (std::size_t i = 0; i < n; ++i)
        if ((*x.values)[i] > 0.0) (*x.grad)[i] += (*out.grad)[i];
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  const bool track = tracked(x);
  Tensor out = out_like(x.shape, track);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xr = x.values->data() + i * n;
    double* yr = out.values->data() + i * n;
    double mx = xr[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    for (std::size_t j = 0; j < n; ++j) yr[j] /= sum;
  }
  if (track) {
    record([x, out, m, n]() {
      for (std::size_t i = 0; i < m; ++i) {
        const double* yr = out.values->data() + i * n;
        const double* dyr = out.grad->data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += dyr[j] * yr[j];
        double* dxr = x.grad->data() + i * n;
        for (std::size_t j = 0; j < n; ++j) dxr[j] += yr[j] * (dyr[j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.shape.size() != 1 || gain.shape[0] != n || bias.shape.size() != 1 ||
      bias.shape[0] != n) {
    throw DimensionError("layer_norm: gain/bias must match last dimension");
  }
  const bool track = tracked(x) || tracked(gain) || tracked(bias);
  Tensor out = out_like(x.shape, track);
  // Normalized rows kept for the backward pass.
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xr = x.values->data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xr[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    double* hr = xhat->data() + i * n;
    double* yr = out.values->data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      hr[j] = (xr[j] - mean) * is;
      yr[j] = hr[j] * (*gain.values)[j] + (*bias.values)[j];
    }
  }
  if (track) {
    record([x, gain, bias, out, xhat, inv_std, m, n]() {
      for (std::size_t i = 0; i < m; ++i) {
        const double* dyr = out.grad->data() + i * n;
        const double* hr = xhat->data() + i * n;
        if (gain.requires_grad)
          for (std::size_t j = 0; j < n; ++j) (*gain.grad)[j] += dyr[j] * hr[j];
        if (bias.requires_grad)
          for (std::size_t j = 0; j < n; ++j) (*bias.grad)[j] += dyr[j];
        if (x.requires_grad) {
          double mean_g = 0.0, mean_gh = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double g = dyr[j] * (*gain.values)[j];
            mean_g += g;
            mean_gh += g * hr[j];
          }
          mean_g /= static_cast<double>(n);
          mean_gh /= static_cast<double>(n);
          double* dxr = x.grad->data() + i * n;
          const double is = (*inv_std)[i];
          for (std::size_t j = 0; j < n; ++j) {
            const double g = dyr[j] * (*gain.values)[j];
            dxr[j] += (g - mean_g - hr[j] * mean_gh) * is;
          }
        }
      }
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count) {
  const std::size_t m = x.rows(), n = x.cols();
  if (start + count > m || count == 0) throw DimensionError("slice_rows: out of range");
  const bool track = tracked(x);
  Tensor out = out_like({count, n}, track);
  std::copy(x.values->data() + start * n, x.values->data() + (start + count) * n,
            out.values->data());
  if (track) {
    record([x, out, start, count, n]() {
      for (std::size_t i = 0; i < count * n; ++i)
        (*x.grad)[start * n + i] += (*out.grad)[i];
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  const std::size_t m = x.rows(), n = x.cols();
  if (start + count > n || count == 0) throw DimensionError("slice_cols: out of range");
  const bool track = tracked(x);
  Tensor out = out_like({m, count}, track);
  for (std::size_t i = 0; i < m; ++i)
    std::copy(x.values->data() + i * n + start, x.values->data() + i * n + start + count,
              out.values->data() + i * count);
  if (track) {
    record([x, out, start, count, m, n]() {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < count; ++j)
          (*x.grad)[i * n + start + j] += (*out.grad)[i * count + j];
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: empty input");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  bool track = false;
  for (const Tensor& p : parts) {
    if (p.cols() != n) throw DimensionError("concat_rows: column mismatch");
    m += p.rows();
    track = track || tracked(p);
  }
  Tensor out = out_like({m, n}, track);
  std::size_t row = 0;
  for (const Tensor& p : parts) {
    std::copy(p.values->begin(), p.values->end(), out.values->data() + row * n);
    row += p.rows();
  }
  if (track) {
    record([parts, out, n]() {
      std::size_t row = 0;
      for (const Tensor& p : parts) {
        const std::size_t pr = p.rows();
        if (p.requires_grad) {
          for (std::size_t i = 0; i < pr * n; ++i)
            (*p.grad)[i] += (*out.grad)[row * n + i];
        }
        row += pr;
      }
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: empty input");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  bool track = false;
  for (const Tensor& p : parts) {
    if (p.rows() != m) throw DimensionError("concat_cols: row mismatch");
    n += p.cols();
    track = track || tracked(p);
  }
  Tensor out = out_like({m, n}, track);
  std::size_t col = 0;
  for (const Tensor& p : parts) {
    const std::size_t pc = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      std::copy(p.values->data() + i * pc, p.values->data() + (i + 1) * pc,
                out.values->data() + i * n + col);
    col += pc;
  }
  if (track) {
    record([parts, out, m, n]() {
      std::size_t col = 0;
      for (const Tensor& p : parts) {
        const std::size_t pc = p.cols();
        if (p.requires_grad) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < pc; ++j)
              (*p.grad)[i * pc + j] += (*out.grad)[i * n + col + j];
        }
        col += pc;
      }
    });
  }
  return out;
}

Tensor embed_rows(const std::vector<int>& ids, const Tensor& table) {
  const std::size_t v = table.rows(), d = table.cols();
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= v)
      throw DataError("embed_rows: token id out of range");
  }
  const bool track = tracked(table);
  Tensor out = out_like({ids.size(), d}, track);
  for (std::size_t t = 0; t < ids.size(); ++t)
    std::copy(table.values->data() + static_cast<std::size_t>(ids[t]) * d,
              table.values->data() + (static_cast<std::size_t>(ids[t]) + 1) * d,
              out.values->data() + t * d);
  if (track) {
    record([ids, table, out, d]() {
      for (std::size_t t = 0; t < ids.size(); ++t) {
        const std::size_t r = static_cast<std::size_t>(ids[t]);
        for (std::size_t j = 0; j < d; ++j)
          (*table.grad)[r * d + j] += (*out.grad)[t * d + j];
      }
    });
  }
  return out;
}

Tensor sum_all(const Tensor& x) {
  const bool track = tracked(x);
  Tensor out = out_like({1}, track);
  double acc = 0.0;
  for (double v : *x.values) acc += v;
  (*out.values)[0] = acc;
  if (track) {
    record([x, out]() {
      const double g = (*out.grad)[0];
      for (double& dv : *x.grad) dv += g;
    });
  }
  return out;
}

Tensor mean_max_pool_rows(const Tensor& x, std::size_t start, std::size_t end) {
  const std::size_t m = x.rows(), n = x.cols();
  if (start >= end || end > m) throw DimensionError("mean_max_pool_rows: empty span");
  const std::size_t len = end - start;
  const bool track = tracked(x);
  Tensor out = out_like({1, 2 * n}, track);
  auto argmax = std::make_shared<std::vector<std::size_t>>(n);
  for (std::size_t j = 0; j < n; ++j) {
    double best = x.at2(start, j);
    std::size_t best_i = start;
    double mean = best;
    for (std::size_t i = start + 1; i < end; ++i) {
      const double v = x.at2(i, j);
      mean += v;
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    (*argmax)[j] = best_i;
    (*out.values)[j] = best;
    (*out.values)[n + j] = mean / static_cast<double>(len);
  }
  if (track) {
    record([x, out, argmax, start, end, n, len]() {
      for (std::size_t j = 0; j < n; ++j) {
        (*x.grad)[(*argmax)[j] * n + j] += (*out.grad)[j];
        const double gm = (*out.grad)[n + j] / static_cast<double>(len);
        for (std::size_t i = start; i < end; ++i) (*x.grad)[i * n + j] += gm;
      }
    });
  }
  return out;
}

Tensor cross_entropy_mean(const Tensor& logits, const std::vector<int>& targets,
                          int ignore_id) {
  const std::size_t m = logits.rows(), v = logits.cols();
  if (targets.size() != m) throw DimensionError("cross_entropy: target count mismatch");
  std::size_t kept = 0;
  for (int t : targets) {
    if (t == ignore_id) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= v)
      throw DataError("cross_entropy: target id out of range");
    ++kept;
  }
  if (kept == 0) throw NumericError("cross_entropy: every position ignored, mean undefined");
  const bool track = tracked(logits);
  Tensor out = out_like({1}, track);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] == ignore_id) continue;
    const double* lr = logits.values->data() + i * v;
    double mx = lr[0];
    for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, lr[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < v; ++j) sum += std::exp(lr[j] - mx);
    total += std::log(sum) + mx - lr[targets[i]];
  }
  (*out.values)[0] = total / static_cast<double>(kept);
  if (track) {
    record([logits, out, targets, ignore_id, m, v, kept]() {
      const double g = (*out.grad)[0] / static_cast<double>(kept);
      for (std::size_t i = 0; i < m; ++i) {
        if (targets[i] == ignore_id) continue;
        const double* lr = logits.values->data() + i * v;
        double* dlr = logits.grad->data() + i * v;
        double mx = lr[0];
        for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, lr[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < v; ++j) sum += std::exp(lr[j] - mx);
        for (std::size_t j = 0; j < v; ++j) {
          const double p = std::exp(lr[j] - mx) / sum;
          dlr[j] += g * (p - (static_cast<std::size_t>(targets[i]) == j ? 1.0 : 0.0));
        }
      }
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ConfigError("dropout: rate must be < 1");
  const bool track = tracked(x);
  Tensor out = out_like(x.shape, track);
  const std::size_t n = x.numel();
  auto mask = std::make_shared<std::vector<double>>(n);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < n; ++i) {
    (*mask)[i] = rng.uniform() >= rate ? keep_scale : 0.0;
    (*out.values)[i] = (*x.values)[i] * (*mask)[i];
  }
  if (track) {
    record([x, out, mask, n]() {
      for (std::size_t i = 0; i < n; ++i) (*x.grad)[i] += (*out.grad)[i] * (*mask)[i];
    });
  }
  return out;
}

}  // namespace mf

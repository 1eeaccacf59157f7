#pragma once

#include <vector>

#include "mf/rng.hpp"
#include "mf/tensor.hpp"

namespace mf {

// All ops record their backward rule on the active tape when any input
// requires gradients. Shapes are validated up front; mismatches throw
// DimensionError.

Tensor add(const Tensor& a, const Tensor& b);            // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);            // elementwise
Tensor scale(const Tensor& a, double c);
Tensor matmul(const Tensor& a, const Tensor& b);         // [m,k] x [k,n]
Tensor transpose(const Tensor& a);                       // 2-D
Tensor add_bias(const Tensor& x, const Tensor& b);       // [m,n] + [n] row broadcast
Tensor relu(const Tensor& x);
Tensor softmax_rows(const Tensor& x);                    // stable, rows sum to 1
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor embed_rows(const std::vector<int>& ids, const Tensor& table);
Tensor sum_all(const Tensor& x);                         // -> scalar

// [max ; mean] over rows [start, end); output shape [1, 2*cols].
Tensor mean_max_pool_rows(const Tensor& x, std::size_t start, std::size_t end);

// Mean negative log-softmax over rows whose target != ignore_id.
// Throws NumericError when every position is ignored.
Tensor cross_entropy_mean(const Tensor& logits, const std::vector<int>& targets,
                          int ignore_id);

// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng);

}  // namespace mf

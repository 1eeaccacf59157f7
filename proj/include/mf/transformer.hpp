#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mf/checkpoint.hpp"
#include "mf/config.hpp"
#include "mf/ops.hpp"
#include "mf/tensor.hpp"

namespace mf {

// One decoded hypothesis. `tokens` are the generated ids (bos excluded,
// final eos included when produced); total_log_prob is the sum of
// step_log_probs; normalized_score = total / length^alpha is the beam
// ranking key.
struct DecodeResult {
  std::vector<int> tokens;
  std::vector<double> step_log_probs;
  double total_log_prob = 0.0;
  double normalized_score = 0.0;
  bool truncated = false;
};

// Additive attention masks: 0 keeps a key, kMaskedLogit drops it.
constexpr double kMaskedLogit = -1e30;
Tensor causal_mask_bias(std::size_t len);
Tensor key_pad_mask_bias(std::size_t query_len, const std::vector<bool>& key_is_pad);

// Softmax(Q K^T / sqrt(d_k)) V for a single head. Throws NumericError when a
// query has every key masked out.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor* mask_bias);

// Per-forward options. `delta` is the [T_src, 2] phrase-importance matrix
// consumed by the decoder's cross-attention key fusion; null for the
// vanilla path.
struct RunState {
  bool training = false;
  Rng* dropout_rng = nullptr;
  const Tensor* delta = nullptr;
};

// Encoder-decoder transformer with pre-layer-norm residual blocks, learned
// absolute position embeddings and packed multi-head projections. When
// phrase_enhanced is set the parameter store additionally carries
// phrase_classifier.{W,b} and decoder.layer{i}.fusion.W_delta.
struct Model {
  ModelConfig config;
  ParameterStore params;
  bool phrase_enhanced = false;

  static Model create(const ModelConfig& cfg, std::uint64_t seed, bool phrase_enhanced);

  // Hidden states [T_x, d]; padded positions are never attended to.
  Tensor encode(const std::vector<int>& src_ids, const RunState& rs = {}) const;

  // Teacher-forced logits [len(prefix), vocab]; row t conditions on
  // prefix[0..t] only. prefix must start with bos.
  Tensor decode_logits(const std::vector<int>& prefix, const Tensor& enc_h,
                       const std::vector<int>& src_ids, const RunState& rs = {}) const;

  std::size_t parameter_count() const { return params.total_parameters(); }
};

// Greedy decoding: argmax each step (ties to the lowest id), stops at eos or
// after max_len generated tokens.
DecodeResult greedy_decode(const Model& model, const std::vector<int>& src_ids,
                           std::size_t max_len, const Tensor* delta = nullptr);

// Beam search over `width` slots; finished hypotheses keep competing by total
// log-probability. Output is sorted by length-normalized score (descending),
// ties broken by earlier completion then lexicographic token order. Returns
// min(width, completed) hypotheses, or truncated ones when nothing completed.
std::vector<DecodeResult> beam_search(const Model& model, const std::vector<int>& src_ids,
                                      std::size_t width, std::size_t max_len,
                                      double length_alpha = 1.0,
                                      const Tensor* delta = nullptr);

// Checkpoint + ".config" sidecar.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace mf

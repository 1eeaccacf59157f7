#pragma once

#include <cstddef>
#include <string>

namespace mf {

// Architecture hyperparameters. d_model must split evenly over heads;
// the per-head key and value widths are both d_model / num_heads.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t num_heads = 4;
  std::size_t d_ff = 128;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t max_sequence_length = 160;
  int pad_id = 0;
  int bos_id = 1;
  int eos_id = 2;
  double dropout = 0.1;

  std::size_t head_dim() const { return d_model / num_heads; }
  // Width of the packed key state across heads (= d_model).
  std::size_t key_width() const { return num_heads * head_dim(); }

  void validate() const;

  // Flat UTF-8 key=value text, one pair per line.
  std::string to_kv_text() const;
  static ModelConfig from_kv_text(const std::string& text);
  void save(const std::string& path) const;
  static ModelConfig load(const std::string& path);
};

}  // namespace mf

#pragma once

#include <string>
#include <vector>

#include "mf/tensor.hpp"
#include "mf/transformer.hpp"

namespace mf {

// Token-index interval [start, end) into a model input sequence. `label`
// carries the ground-truth selection bit when known (-1 otherwise);
// `probability` the predicted selection probability (negative when unset).
struct PhraseSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  int label = -1;
  double probability = -1.0;
};

// Model variants: vanilla fine-tuning, classifier-only joint training,
// key fusion with rounded predictions, and full soft fusion.
enum class PetMode { kFineTuned, kClsGen, kOneHot, kPet };
PetMode pet_mode_from_string(const std::string& s);
std::string to_string(PetMode mode);

// Where the per-span z values in a delta matrix come from.
enum class DeltaSource { kTrainingLabels, kPredictedSoft, kPredictedHard };

// Segment boundaries of an assembled input, all [begin, end).
struct SegmentMap {
  std::size_t context_begin = 0, context_end = 0;
  std::size_t fa_begin = 0, fa_end = 0;
  bool has_context() const { return context_end > context_begin; }
  bool has_fa() const { return fa_end > fa_begin; }
};

// One training/inference item: assembled input, generation target (ending
// with eos), resolved phrase spans inside the context segment.
struct PetBatchItem {
  std::vector<int> input_ids;
  std::vector<int> target_ids;
  std::vector<PhraseSpan> spans;
  SegmentMap segments;
};

// [max-pool ; mean-pool] over the span's hidden-state rows -> [1, 2d].
Tensor pool_phrase(const Tensor& h, const PhraseSpan& span);

// Two-class logits [L, 2] from pooled phrase encodings (class 1 = select).
Tensor phrase_logits(const Tensor& h, const std::vector<PhraseSpan>& spans,
                     const ParameterStore& params);

// Softmax probabilities of the select class, one per span, each in (0,1).
std::vector<double> classify_phrases(const Tensor& h, const std::vector<PhraseSpan>& spans,
                                     const ParameterStore& params);

// Per-token importance matrix [t_x, 2]: rows default to [1,0]; tokens inside
// span i get [1-z_i, z_i]; tokens in [forced_begin, forced_end) get [0,1].
// kTrainingLabels requires z in {0,1}; kPredictedHard rounds to {0,1}.
// Spans must be pairwise disjoint.
Tensor build_delta(std::size_t t_x, const std::vector<PhraseSpan>& spans,
                   const std::vector<double>& z, DeltaSource source,
                   std::size_t forced_begin = 0, std::size_t forced_end = 0);

// Fused key state: delta W_delta + H W_k.
Tensor fuse_keys(const Tensor& h, const Tensor& delta, const Tensor& w_k,
                 const Tensor& w_delta);

// Token cross-entropy over non-pad target positions plus lambda times the
// per-phrase mean classification cross-entropy. phrase_logits_t may be null
// (or labels empty) for items without phrases.
Tensor joint_loss(const Tensor& gen_logits, const std::vector<int>& target_ids, int pad_id,
                  const Tensor* phrase_logits_t, const std::vector<int>& phrase_labels,
                  double lambda);

struct PetForwardResult {
  Tensor encoder_h;
  Tensor gen_logits;      // [len(target), vocab] teacher-forced
  Tensor phrase_logits_t; // [L, 2]; empty when the classifier did not run
  std::vector<double> phrase_probs;
  Tensor delta;           // [T_x, 2]; empty when fusion was off
  bool classifier_ran = false;
  bool fusion_applied = false;
};

// Full PET pass for one item. Training uses ground-truth labels in delta;
// inference uses predicted probabilities (soft or rounded per mode).
PetForwardResult pet_forward(const Model& model, const PetBatchItem& item, PetMode mode,
                             bool training, Rng* dropout_rng = nullptr);

// Parameter count a phrase-enhanced model adds over the vanilla one:
// classifier (2d x 2 + 2) plus one [2, key_width] fusion layer per decoder
// layer.
std::size_t pet_parameter_overhead(const ModelConfig& cfg);

}  // namespace mf

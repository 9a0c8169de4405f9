#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hm3/checkpoint.hpp"
#include "hm3/layout.hpp"

namespace hm3 {

inline constexpr std::size_t kMaxTokens = 512;
inline constexpr std::uint32_t kEmptyTokenId = 0;

struct TokenSequence {
  std::vector<std::uint32_t> ids;
};

// Lowercases, splits on non-alphanumeric runs, hashes each token with 64-bit
// FNV-1a modulo vocab_size. Text with no tokens maps to the reserved id 0.
// Sequences are truncated at 512 tokens.
TokenSequence tokenize(const std::string& text, std::size_t vocab_size);

// mean-pooled embedding -> dense + tanh -> head. Deterministic; internal
// accumulation in double, logits rounded to float.
std::vector<float> forward(const Checkpoint& cp, const TokenSequence& toks);

// Per-segment probability vectors; each segment sums to 1.
struct SegmentedDistribution {
  std::vector<std::vector<double>> per_segment;
};

// Numerically stable softmax applied to each segment individually.
SegmentedDistribution softmax_star(const std::vector<float>& logits,
                                   const SegmentLayout& layout);

struct SegmentPrediction {
  std::string model_id;
  std::string label;
  std::size_t class_index = 0; // within the segment
  double probability = 0.0;
};

// Argmax per segment, ties broken toward the lowest class index.
std::vector<SegmentPrediction> predict(const Checkpoint& cp,
                                       const SegmentLayout& layout,
                                       const std::string& text);

std::vector<SegmentPrediction> predict_from_logits(
    const std::vector<float>& logits, const SegmentLayout& layout);

// Layout for a checkpoint evaluated on its own: the embedded layout when
// present, otherwise a single segment covering the whole label space.
SegmentLayout effective_layout(const Checkpoint& cp,
                               const std::string& fallback_model_id);

} // namespace hm3

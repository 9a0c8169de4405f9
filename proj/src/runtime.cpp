#include "hm3/runtime.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "hm3/errors.hpp"
#include "hm3/rng.hpp"

namespace hm3 {

TokenSequence tokenize(const std::string& text, std::size_t vocab_size) {
  if (vocab_size < 2)
    throw ValidationError("tokenize: vocab_size must be at least 2");
  TokenSequence seq;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (seq.ids.size() < kMaxTokens)
      seq.ids.push_back(
          static_cast<std::uint32_t>(fnv1a64(token) % vocab_size));
    token.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc))
      token.push_back(static_cast<char>(std::tolower(uc)));
    else
      flush();
    if (seq.ids.size() >= kMaxTokens) break;
  }
  flush();
  if (seq.ids.empty()) seq.ids.push_back(kEmptyTokenId);
  return seq;
}

std::vector<float> forward(const Checkpoint& cp, const TokenSequence& toks) {
  const std::size_t vocab = cp.arch.vocab_size;
  const std::size_t embed = cp.arch.embed_dim;
  const std::size_t hidden = cp.arch.hidden_dim;
  const std::size_t out_dim = cp.arch.head_out_dim;

  const Tensor& embed_w = cp.tensor("embed.weight");
  const Tensor& dense_w = cp.tensor("dense.weight");
  const Tensor& dense_b = cp.tensor("dense.bias");
  const Tensor& head_w = cp.tensor("head.weight");
  const Tensor& head_b = cp.tensor("head.bias");

  if (toks.ids.empty())
    throw ValidationError("forward: empty token sequence");

  std::vector<double> pooled(embed, 0.0);
  for (std::uint32_t id : toks.ids) {
    if (id >= vocab)
      throw ValidationError("token id " + std::to_string(id) +
                            " out of range for vocab_size " +
                            std::to_string(vocab));
    const float* row = embed_w.data.data() + static_cast<std::size_t>(id) * embed;
    for (std::size_t d = 0; d < embed; ++d)
      pooled[d] += static_cast<double>(row[d]);
  }
  const double inv_t = 1.0 / static_cast<double>(toks.ids.size());
  for (double& v : pooled) v *= inv_t;

  std::vector<double> hidden_act(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    double acc = static_cast<double>(dense_b.data[j]);
    for (std::size_t i = 0; i < embed; ++i)
      acc += static_cast<double>(dense_w.data[i * hidden + j]) * pooled[i];
    hidden_act[j] = std::tanh(acc);
  }

  std::vector<float> logits(out_dim);
  for (std::size_t k = 0; k < out_dim; ++k) {
    double acc = static_cast<double>(head_b.data[k]);
    for (std::size_t j = 0; j < hidden; ++j)
      acc += static_cast<double>(head_w.data[j * out_dim + k]) * hidden_act[j];
    logits[k] = static_cast<float>(acc);
  }
  return logits;
}

SegmentedDistribution softmax_star(const std::vector<float>& logits,
                                   const SegmentLayout& layout) {
  if (logits.size() != layout.total_width())
    throw ValidationError("softmax_star: got " +
                          std::to_string(logits.size()) + " logits for layout "
                          "width " + std::to_string(layout.total_width()));
  SegmentedDistribution dist;
  dist.per_segment.reserve(layout.segments.size());
  for (const Segment& seg : layout.segments) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < seg.width(); ++j)
      max_logit = std::max(max_logit,
                           static_cast<double>(logits[seg.offset + j]));
    std::vector<double> probs(seg.width());
    double denom = 0.0;
    for (std::size_t j = 0; j < seg.width(); ++j) {
      probs[j] = std::exp(static_cast<double>(logits[seg.offset + j]) - max_logit);
      denom += probs[j];
    }
    for (double& p : probs) p /= denom;
    dist.per_segment.push_back(std::move(probs));
  }
  return dist;
}

std::vector<SegmentPrediction> predict_from_logits(
    const std::vector<float>& logits, const SegmentLayout& layout) {
  const SegmentedDistribution dist = softmax_star(logits, layout);
  std::vector<SegmentPrediction> out;
  out.reserve(layout.segments.size());
  for (std::size_t s = 0; s < layout.segments.size(); ++s) {
    const Segment& seg = layout.segments[s];
    const std::vector<double>& probs = dist.per_segment[s];
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.size(); ++j)
      if (probs[j] > probs[best]) best = j; // strict: ties keep lowest index
    out.push_back(SegmentPrediction{seg.model_id, seg.labels[best], best,
                                    probs[best]});
  }
  return out;
}

std::vector<SegmentPrediction> predict(const Checkpoint& cp,
                                       const SegmentLayout& layout,
                                       const std::string& text) {
  return predict_from_logits(
      forward(cp, tokenize(text, cp.arch.vocab_size)), layout);
}

SegmentLayout effective_layout(const Checkpoint& cp,
                               const std::string& fallback_model_id) {
  if (cp.layout) return *cp.layout;
  SegmentLayout layout;
  layout.segments.push_back(
      Segment{fallback_model_id, cp.label_space.labels, 0});
  layout.validate();
  return layout;
}

} // namespace hm3

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hm3/checkpoint.hpp"
#include "hm3/layout.hpp"

namespace hm3 {

using ModelLabels = std::pair<std::string, LabelSpace>;

// Replaces uninformative labels (case-insensitive "label<digits>", with an
// optional -/_ separator, or empty) by "<model_id>:class<i>", then prefixes
// every label that occurs in two or more models with its model_id until the
// combined label set is globally unique.
std::vector<LabelSpace> sanitize_labels(const std::vector<ModelLabels>& models);

// Segment i sits at offset sum of the widths before it, in input order.
SegmentLayout build_layout(const std::vector<ModelLabels>& models);

// Zero-pads the output head of a fine-tuned checkpoint into the shared
// layout: the model's own columns and bias entries are copied, every other
// column and entry is exactly zero. Non-head tensors pass through unchanged.
Checkpoint expand_head(const Checkpoint& cp, const SegmentLayout& layout,
                       const std::string& model_id);

// Replaces the base model's output layer with zeros spanning the full layout.
Checkpoint make_base(const Checkpoint& base, const SegmentLayout& layout);

} // namespace hm3

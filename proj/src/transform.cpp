#include "hm3/transform.hpp"

#include <cctype>
#include <map>
#include <set>

#include "hm3/errors.hpp"

namespace hm3 {

namespace {

bool is_uninformative(const std::string& label) {
  if (label.empty()) return true;
  // case-insensitive "label", optional -/_ separator, then digits
  static const std::string prefix = "label";
  if (label.size() <= prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(label[i])) != prefix[i])
      return false;
  std::size_t pos = prefix.size();
  if (label[pos] == '_' || label[pos] == '-') ++pos;
  if (pos >= label.size()) return false;
  for (; pos < label.size(); ++pos)
    if (!std::isdigit(static_cast<unsigned char>(label[pos]))) return false;
  return true;
}

} // namespace

std::vector<LabelSpace> sanitize_labels(const std::vector<ModelLabels>& models) {
  if (models.empty())
    throw ValidationError("sanitize_labels: no models given");

  std::vector<LabelSpace> out;
  out.reserve(models.size());
  for (const auto& [model_id, space] : models) {
    space.validate();
    LabelSpace s = space;
    for (std::size_t i = 0; i < s.labels.size(); ++i)
      if (is_uninformative(s.labels[i]))
        s.labels[i] = model_id + ":class" + std::to_string(i);
    s.validate();
    out.push_back(std::move(s));
  }

  // Prefix cross-model duplicates with their model_id until globally unique.
  for (int round = 0; round < 16; ++round) {
    std::map<std::string, int> owners;
    for (const LabelSpace& s : out) {
      std::set<std::string> in_model(s.labels.begin(), s.labels.end());
      for (const std::string& l : in_model) ++owners[l];
    }
    bool any = false;
    for (std::size_t m = 0; m < out.size(); ++m) {
      for (std::string& l : out[m].labels) {
        if (owners.at(l) >= 2) {
          l = models[m].first + ":" + l;
          any = true;
        }
      }
      out[m].validate(); // within-model uniqueness must survive prefixing
    }
    if (!any) return out;
  }
  throw ValidationError("sanitize_labels: could not make labels unique");
}

SegmentLayout build_layout(const std::vector<ModelLabels>& models) {
  if (models.empty())
    throw ValidationError("build_layout: no models given");
  SegmentLayout layout;
  std::size_t offset = 0;
  for (const auto& [model_id, space] : models) {
    Segment seg;
    seg.model_id = model_id;
    seg.labels = space.labels;
    seg.offset = offset;
    offset += seg.width();
    layout.segments.push_back(std::move(seg));
  }
  layout.validate();
  return layout;
}

Checkpoint expand_head(const Checkpoint& cp, const SegmentLayout& layout,
                       const std::string& model_id) {
  cp.validate();
  layout.validate();
  if (cp.role != Role::fine_tuned)
    throw ValidationError("expand_head expects a fine_tuned checkpoint, got " +
                          role_name(cp.role));
  const Segment& seg = layout.segment(model_id);
  if (seg.width() != cp.arch.head_out_dim)
    throw ValidationError(
        "segment '" + model_id + "' width " + std::to_string(seg.width()) +
        " does not match checkpoint head width " +
        std::to_string(cp.arch.head_out_dim));

  const std::size_t hidden = cp.arch.hidden_dim;
  const std::size_t old_w = cp.arch.head_out_dim;
  const std::size_t new_w = layout.total_width();

  const Tensor& head_w = cp.tensor("head.weight");
  const Tensor& head_b = cp.tensor("head.bias");

  Tensor new_w_tensor = Tensor::zeros({hidden, new_w});
  for (std::size_t h = 0; h < hidden; ++h)
    for (std::size_t j = 0; j < old_w; ++j)
      new_w_tensor.data[h * new_w + seg.offset + j] = head_w.data[h * old_w + j];

  Tensor new_b_tensor = Tensor::zeros({new_w});
  for (std::size_t j = 0; j < old_w; ++j)
    new_b_tensor.data[seg.offset + j] = head_b.data[j];

  Checkpoint out;
  out.arch = cp.arch;
  out.arch.head_out_dim = new_w;
  out.tensors = cp.tensors;
  out.tensors["head.weight"] = std::move(new_w_tensor);
  out.tensors["head.bias"] = std::move(new_b_tensor);
  out.label_space.labels = layout.all_labels();
  out.role = Role::expanded;
  out.layout = layout;
  out.validate();
  return out;
}

Checkpoint make_base(const Checkpoint& base, const SegmentLayout& layout) {
  base.validate();
  layout.validate();
  if (base.role != Role::base)
    throw ValidationError("make_base expects a base checkpoint, got " +
                          role_name(base.role));

  const std::size_t hidden = base.arch.hidden_dim;
  const std::size_t new_w = layout.total_width();

  Checkpoint out;
  out.arch = base.arch;
  out.arch.head_out_dim = new_w;
  out.tensors = base.tensors;
  out.tensors["head.weight"] = Tensor::zeros({hidden, new_w});
  out.tensors["head.bias"] = Tensor::zeros({new_w});
  out.label_space.labels = layout.all_labels();
  out.role = Role::expanded;
  out.layout = layout;
  out.validate();
  return out;
}

} // namespace hm3

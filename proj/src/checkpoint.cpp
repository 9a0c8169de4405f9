#include "hm3/checkpoint.hpp"

#include <set>

#include "hm3/errors.hpp"

namespace hm3 {

void LabelSpace::validate() const {
  if (labels.empty())
    throw ValidationError("label space must not be empty");
  std::set<std::string> seen;
  for (const std::string& l : labels) {
    if (l.empty())
      throw ValidationError("label space contains an empty label");
    if (!seen.insert(l).second)
      throw ValidationError("duplicate label '" + l + "' in label space");
  }
}

std::string arch_family_name(ArchFamily f) {
  switch (f) {
    case ArchFamily::tiny_text_v1: return "tiny_text_v1";
  }
  throw ValidationError("unknown architecture family enum value");
}

ArchFamily arch_family_from_name(const std::string& name) {
  if (name == "tiny_text_v1") return ArchFamily::tiny_text_v1;
  throw FormatError("unknown architecture family '" + name + "'");
}

bool ArchDescriptor::same_backbone(const ArchDescriptor& other) const {
  return family == other.family && vocab_size == other.vocab_size &&
         embed_dim == other.embed_dim && hidden_dim == other.hidden_dim;
}

void ArchDescriptor::validate() const {
  if (vocab_size == 0 || embed_dim == 0 || hidden_dim == 0 || head_out_dim == 0)
    throw ValidationError("architecture dimensions must be positive");
}

std::string role_name(Role r) {
  switch (r) {
    case Role::base: return "base";
    case Role::fine_tuned: return "fine_tuned";
    case Role::merged: return "merged";
    case Role::expanded: return "expanded";
  }
  throw ValidationError("unknown role enum value");
}

Role role_from_name(const std::string& name) {
  if (name == "base") return Role::base;
  if (name == "fine_tuned") return Role::fine_tuned;
  if (name == "merged") return Role::merged;
  if (name == "expanded") return Role::expanded;
  throw FormatError("unknown checkpoint role '" + name + "'");
}

bool is_head_tensor(const std::string& name) {
  return name == "head.weight" || name == "head.bias";
}

const Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end())
    throw ValidationError("checkpoint has no tensor named '" + name + "'");
  return it->second;
}

namespace {

void require_shape(const Checkpoint& cp, const std::string& name,
                   const std::vector<std::size_t>& want) {
  const Tensor& t = cp.tensor(name);
  if (t.shape != want)
    throw ValidationError("tensor '" + name + "' has shape " +
                          shape_to_string(t.shape) + ", expected " +
                          shape_to_string(want));
}

} // namespace

void Checkpoint::validate() const {
  arch.validate();
  label_space.validate();
  if (label_space.size() != arch.head_out_dim)
    throw ValidationError("label space size " +
                          std::to_string(label_space.size()) +
                          " does not match head_out_dim " +
                          std::to_string(arch.head_out_dim));

  require_shape(*this, "embed.weight", {arch.vocab_size, arch.embed_dim});
  require_shape(*this, "dense.weight", {arch.embed_dim, arch.hidden_dim});
  require_shape(*this, "dense.bias", {arch.hidden_dim});
  require_shape(*this, "head.weight", {arch.hidden_dim, arch.head_out_dim});
  require_shape(*this, "head.bias", {arch.head_out_dim});

  for (const auto& [name, t] : tensors) t.validate();

  if (layout) {
    layout->validate();
    if (layout->total_width() != arch.head_out_dim)
      throw ValidationError("layout width " +
                            std::to_string(layout->total_width()) +
                            " does not match head_out_dim " +
                            std::to_string(arch.head_out_dim));
    if (layout->all_labels() != label_space.labels)
      throw ValidationError("layout labels do not match checkpoint label space");
  }
  if (recipe) recipe->validate();
}

CompatibilityReport compatible_for_merge(const std::vector<const Checkpoint*>& cps) {
  if (cps.size() < 2)
    throw ValidationError("compatibility check needs at least two checkpoints");
  CompatibilityReport report;
  const Checkpoint& ref = *cps.front();
  for (std::size_t i = 1; i < cps.size(); ++i) {
    const Checkpoint& cp = *cps[i];
    const std::string tag = "checkpoint[" + std::to_string(i) + "]";
    if (cp.arch.family != ref.arch.family)
      report.diagnostics.push_back(tag + ": family " +
                                   arch_family_name(cp.arch.family) + " != " +
                                   arch_family_name(ref.arch.family));
    if (cp.arch.vocab_size != ref.arch.vocab_size)
      report.diagnostics.push_back(tag + ": vocab_size " +
                                   std::to_string(cp.arch.vocab_size) + " != " +
                                   std::to_string(ref.arch.vocab_size));
    if (cp.arch.embed_dim != ref.arch.embed_dim)
      report.diagnostics.push_back(tag + ": embed_dim " +
                                   std::to_string(cp.arch.embed_dim) + " != " +
                                   std::to_string(ref.arch.embed_dim));
    if (cp.arch.hidden_dim != ref.arch.hidden_dim)
      report.diagnostics.push_back(tag + ": hidden_dim " +
                                   std::to_string(cp.arch.hidden_dim) + " != " +
                                   std::to_string(ref.arch.hidden_dim));

    for (const auto& [name, t] : ref.tensors) {
      auto it = cp.tensors.find(name);
      if (it == cp.tensors.end()) {
        report.diagnostics.push_back(tag + ": missing tensor '" + name + "'");
        continue;
      }
      if (!is_head_tensor(name) && it->second.shape != t.shape)
        report.diagnostics.push_back(tag + ": tensor '" + name + "' shape " +
                                     shape_to_string(it->second.shape) +
                                     " != " + shape_to_string(t.shape));
    }
    for (const auto& [name, t] : cp.tensors)
      if (!ref.tensors.count(name))
        report.diagnostics.push_back(tag + ": extra tensor '" + name + "'");
  }
  report.compatible = report.diagnostics.empty();
  return report;
}

} // namespace hm3

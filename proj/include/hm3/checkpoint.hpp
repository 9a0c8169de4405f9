#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hm3/layout.hpp"
#include "hm3/recipe.hpp"
#include "hm3/tensor.hpp"

namespace hm3 {

// Ordered list of class names; index is the class id.
struct LabelSpace {
  std::vector<std::string> labels;

  std::size_t size() const { return labels.size(); }
  void validate() const; // non-empty, unique, no empty strings
};

enum class ArchFamily { tiny_text_v1 };

std::string arch_family_name(ArchFamily f);
ArchFamily arch_family_from_name(const std::string& name);

struct ArchDescriptor {
  ArchFamily family = ArchFamily::tiny_text_v1;
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t head_out_dim = 0;

  bool same_backbone(const ArchDescriptor& other) const;
  void validate() const;
};

enum class Role { base, fine_tuned, merged, expanded };

std::string role_name(Role r);
Role role_from_name(const std::string& name);

// Named tensors + architecture + label space: the unit of merging.
// Tensors iterate in lexicographic name order everywhere; that order is the
// canonical flat order used for trimming tie-breaks and serialization.
struct Checkpoint {
  ArchDescriptor arch;
  std::map<std::string, Tensor> tensors;
  LabelSpace label_space;
  Role role = Role::fine_tuned;
  // Provenance blocks carried through the manifest.
  std::optional<SegmentLayout> layout;
  std::optional<MergeRecipe> recipe;

  const Tensor& tensor(const std::string& name) const;
  void validate() const;
};

struct CompatibilityReport {
  bool compatible = true;
  std::vector<std::string> diagnostics;
};

// True iff all arch fields except head_out_dim match and all tensor shapes
// except the head tensors match. Diagnostics list every mismatch found.
CompatibilityReport compatible_for_merge(const std::vector<const Checkpoint*>& cps);

bool is_head_tensor(const std::string& name);

} // namespace hm3

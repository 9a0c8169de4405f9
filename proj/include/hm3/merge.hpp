#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hm3/checkpoint.hpp"
#include "hm3/recipe.hpp"
#include "hm3/tensor.hpp"

namespace hm3 {

// Per-tensor difference fine-tuned minus base, entry-for-entry shape match
// with the base checkpoint.
struct TaskVector {
  std::map<std::string, Tensor> tensors;
};

TaskVector task_vector(const Checkpoint& base, const Checkpoint& ft);

// base + lambda * tv, accumulated in double and rounded to float.
Checkpoint apply_task_vector(const Checkpoint& base, const TaskVector& tv,
                             double lambda);

// Keeps the top keep_fraction of values by magnitude and zeroes the rest.
// Global scope ranks across all tensors of the task vector; per_tensor ranks
// each tensor on its own. Ties at the threshold are resolved in lexicographic
// tensor-name order, then flat-index order.
TaskVector trim_task_vector(const TaskVector& tv, double keep_fraction,
                            TrimScope scope);

// Drops each value independently with probability 1-density and rescales
// survivors by 1/density. Drop decisions come from a counter-based generator
// keyed by (seed, tensor name, flat index), so they are independent of
// iteration order and thread schedule.
TaskVector dare(const TaskVector& tv, double density, std::uint64_t seed);

// Sign election and same-sign averaging over already-trimmed task vectors:
// per parameter, elect the sign of the sum (sign of zero counts as +), then
// average the non-zero values that carry the elected sign.
TaskVector ties_combine(const std::vector<TaskVector>& tvs);

// Weighted average of whole checkpoints. Default weights are uniform.
Checkpoint soup_merge(const std::vector<const Checkpoint*>& cps,
                      const MergeRecipe& recipe);

// trim -> elect sign -> disjoint mean, then base + lambda * merged.
Checkpoint ties_merge(const Checkpoint& base,
                      const std::vector<const Checkpoint*>& cps,
                      const MergeRecipe& recipe);

// DARE applied per model with sub-seed = seed xor model index, then the TIES
// combination with trimming disabled (the density is already spent by DARE).
Checkpoint dare_ties_merge(const Checkpoint& base,
                           const std::vector<const Checkpoint*>& cps,
                           const MergeRecipe& recipe);

// Dispatch on recipe.strategy.
Checkpoint merge(const Checkpoint* base,
                 const std::vector<const Checkpoint*>& cps,
                 const MergeRecipe& recipe);

} // namespace hm3

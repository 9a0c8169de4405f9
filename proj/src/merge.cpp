#include "hm3/merge.hpp"

#include <cmath>

#include "hm3/errors.hpp"
#include "hm3/rng.hpp"

namespace hm3 {

namespace {

void require_merge_compatible(const std::vector<const Checkpoint*>& cps) {
  if (cps.size() < 2) return;
  const CompatibilityReport report = compatible_for_merge(cps);
  if (!report.compatible) {
    std::string msg = "checkpoints are not merge-compatible:";
    for (const std::string& d : report.diagnostics) msg += "\n  " + d;
    throw ValidationError(msg);
  }
}

// Post-HM3 inputs must share one output space exactly.
void require_same_output_space(const std::vector<const Checkpoint*>& cps) {
  const Checkpoint& ref = *cps.front();
  for (const Checkpoint* cp : cps) {
    if (cp->arch.head_out_dim != ref.arch.head_out_dim)
      throw ValidationError("merge inputs have different head widths " +
                            std::to_string(cp->arch.head_out_dim) + " vs " +
                            std::to_string(ref.arch.head_out_dim) +
                            "; expand with the shared layout first");
    if (cp->label_space.labels != ref.label_space.labels)
      throw ValidationError(
          "merge inputs have different label spaces; expand with the shared "
          "layout first");
  }
}

Checkpoint merged_skeleton(const Checkpoint& like, const MergeRecipe& recipe) {
  Checkpoint out;
  out.arch = like.arch;
  out.label_space = like.label_space;
  out.role = Role::merged;
  out.layout = like.layout;
  out.recipe = recipe;
  return out;
}

double model_density(const MergeRecipe& recipe, std::size_t model_index,
                     std::size_t model_count) {
  if (!recipe.densities) return recipe.density;
  if (recipe.densities->size() != model_count)
    throw ValidationError("recipe lists " +
                          std::to_string(recipe.densities->size()) +
                          " per-model densities for " +
                          std::to_string(model_count) + " models");
  return (*recipe.densities)[model_index];
}

} // namespace

TaskVector task_vector(const Checkpoint& base, const Checkpoint& ft) {
  TaskVector tv;
  for (const auto& [name, base_t] : base.tensors) {
    auto it = ft.tensors.find(name);
    if (it == ft.tensors.end())
      throw ValidationError("fine-tuned checkpoint is missing tensor '" + name +
                            "'");
    if (!it->second.same_shape(base_t))
      throw ValidationError("task_vector: tensor '" + name +
                            "' shape mismatch " +
                            shape_to_string(it->second.shape) + " vs " +
                            shape_to_string(base_t.shape));
    tv.tensors.emplace(name, subtract(it->second, base_t));
  }
  if (ft.tensors.size() != base.tensors.size())
    throw ValidationError("fine-tuned checkpoint has tensors absent from base");
  return tv;
}

Checkpoint apply_task_vector(const Checkpoint& base, const TaskVector& tv,
                             double lambda) {
  Checkpoint out = base;
  for (const auto& [name, delta] : tv.tensors) {
    auto it = out.tensors.find(name);
    if (it == out.tensors.end())
      throw ValidationError("base checkpoint is missing tensor '" + name + "'");
    Tensor& t = it->second;
    if (!t.same_shape(delta))
      throw ValidationError("apply_task_vector: tensor '" + name +
                            "' shape mismatch");
    for (std::size_t i = 0; i < t.data.size(); ++i)
      t.data[i] = static_cast<float>(
          static_cast<double>(t.data[i]) +
          lambda * static_cast<double>(delta.data[i]));
  }
  return out;
}

TaskVector trim_task_vector(const TaskVector& tv, double keep_fraction,
                            TrimScope scope) {
  TaskVector out;
  if (scope == TrimScope::global) {
    std::vector<const Tensor*> all;
    all.reserve(tv.tensors.size());
    for (const auto& [name, t] : tv.tensors) all.push_back(&t);
    TrimPlan plan = make_trim_plan(all, keep_fraction);
    std::size_t budget = plan.tie_budget;
    for (const auto& [name, t] : tv.tensors)
      out.tensors.emplace(name, trim(t, plan.threshold, budget));
  } else {
    for (const auto& [name, t] : tv.tensors) {
      TrimPlan plan = make_trim_plan({&t}, keep_fraction);
      std::size_t budget = plan.tie_budget;
      out.tensors.emplace(name, trim(t, plan.threshold, budget));
    }
  }
  return out;
}

TaskVector dare(const TaskVector& tv, double density, std::uint64_t seed) {
  if (!(density > 0.0) || density > 1.0)
    throw ValidationError("dare: density must be in (0,1], got " +
                          std::to_string(density));
  TaskVector out;
  for (const auto& [name, t] : tv.tensors) {
    const std::uint64_t stream = fnv1a64(name);
    std::vector<float> data(t.data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (keyed_uniform(seed, stream, i) < density)
        data[i] =
            static_cast<float>(static_cast<double>(t.data[i]) / density);
      else
        data[i] = 0.0f;
    }
    out.tensors.emplace(name, Tensor(t.shape, std::move(data)));
  }
  return out;
}

TaskVector ties_combine(const std::vector<TaskVector>& tvs) {
  if (tvs.empty())
    throw ValidationError("ties_combine: no task vectors given");
  const TaskVector& ref = tvs.front();
  for (const TaskVector& tv : tvs) {
    if (tv.tensors.size() != ref.tensors.size())
      throw ValidationError("ties_combine: task vectors disagree on tensors");
  }

  TaskVector out;
  for (const auto& [name, ref_t] : ref.tensors) {
    std::vector<const Tensor*> parts;
    parts.reserve(tvs.size());
    for (const TaskVector& tv : tvs) {
      auto it = tv.tensors.find(name);
      if (it == tv.tensors.end() || !it->second.same_shape(ref_t))
        throw ValidationError("ties_combine: tensor '" + name +
                              "' missing or shape-mismatched");
      parts.push_back(&it->second);
    }
    std::vector<float> data(ref_t.data.size());
    for (std::size_t p = 0; p < data.size(); ++p) {
      double sum = 0.0;
      for (const Tensor* t : parts) sum += static_cast<double>(t->data[p]);
      const int elected = sum < 0.0 ? -1 : +1; // sign of zero counts as +
      double acc = 0.0;
      std::size_t count = 0;
      for (const Tensor* t : parts) {
        const float v = t->data[p];
        if (v == 0.0f) continue;
        const int sign = v < 0.0f ? -1 : +1;
        if (sign == elected) {
          acc += static_cast<double>(v);
          ++count;
        }
      }
      data[p] = count ? static_cast<float>(acc / static_cast<double>(count))
                      : 0.0f;
    }
    out.tensors.emplace(name, Tensor(ref_t.shape, std::move(data)));
  }
  return out;
}

Checkpoint soup_merge(const std::vector<const Checkpoint*>& cps,
                      const MergeRecipe& recipe) {
  recipe.validate();
  if (cps.size() < 2)
    throw ValidationError("soup_merge needs at least two checkpoints");
  require_merge_compatible(cps);
  require_same_output_space(cps);

  const std::size_t n = cps.size();
  std::vector<double> weights;
  if (recipe.soup_weights) {
    if (recipe.soup_weights->size() != n)
      throw ValidationError("soup_weights has " +
                            std::to_string(recipe.soup_weights->size()) +
                            " entries for " + std::to_string(n) + " models");
    weights = *recipe.soup_weights;
  }

  Checkpoint out = merged_skeleton(*cps.front(), recipe);
  for (const auto& [name, ref_t] : cps.front()->tensors) {
    std::vector<float> data(ref_t.data.size());
    if (weights.empty()) {
      for (std::size_t p = 0; p < data.size(); ++p) {
        double acc = 0.0;
        for (const Checkpoint* cp : cps)
          acc += static_cast<double>(cp->tensor(name).data[p]);
        data[p] = static_cast<float>(acc / static_cast<double>(n));
      }
    } else {
      double wsum = 0.0;
      for (double w : weights) wsum += w;
      for (std::size_t p = 0; p < data.size(); ++p) {
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t)
          acc += weights[t] * static_cast<double>(cps[t]->tensor(name).data[p]);
        data[p] = static_cast<float>(acc / wsum);
      }
    }
    out.tensors.emplace(name, Tensor(ref_t.shape, std::move(data)));
  }
  out.validate();
  return out;
}

Checkpoint ties_merge(const Checkpoint& base,
                      const std::vector<const Checkpoint*>& cps,
                      const MergeRecipe& recipe) {
  recipe.validate();
  if (recipe.strategy != Strategy::ties)
    throw ValidationError("ties_merge called with strategy " +
                          strategy_name(recipe.strategy));
  if (cps.empty())
    throw ValidationError("ties_merge needs at least one checkpoint");
  {
    std::vector<const Checkpoint*> all = cps;
    all.push_back(&base);
    require_merge_compatible(all);
  }
  require_same_output_space(cps);

  std::vector<TaskVector> tvs;
  tvs.reserve(cps.size());
  for (std::size_t t = 0; t < cps.size(); ++t) {
    TaskVector tv = task_vector(base, *cps[t]);
    const double d = model_density(recipe, t, cps.size());
    if (d < 1.0) tv = trim_task_vector(tv, d, recipe.trim_scope);
    tvs.push_back(std::move(tv));
  }

  Checkpoint out =
      apply_task_vector(base, ties_combine(tvs), recipe.lambda);
  Checkpoint result = merged_skeleton(*cps.front(), recipe);
  result.tensors = std::move(out.tensors);
  result.validate();
  return result;
}

Checkpoint dare_ties_merge(const Checkpoint& base,
                           const std::vector<const Checkpoint*>& cps,
                           const MergeRecipe& recipe) {
  recipe.validate();
  if (recipe.strategy != Strategy::dare_ties)
    throw ValidationError("dare_ties_merge called with strategy " +
                          strategy_name(recipe.strategy));
  if (cps.empty())
    throw ValidationError("dare_ties_merge needs at least one checkpoint");
  {
    std::vector<const Checkpoint*> all = cps;
    all.push_back(&base);
    require_merge_compatible(all);
  }
  require_same_output_space(cps);

  std::vector<TaskVector> tvs;
  tvs.reserve(cps.size());
  for (std::size_t t = 0; t < cps.size(); ++t) {
    const double d = model_density(recipe, t, cps.size());
    tvs.push_back(dare(task_vector(base, *cps[t]), d,
                       recipe.seed ^ static_cast<std::uint64_t>(t)));
  }

  Checkpoint out =
      apply_task_vector(base, ties_combine(tvs), recipe.lambda);
  Checkpoint result = merged_skeleton(*cps.front(), recipe);
  result.tensors = std::move(out.tensors);
  result.validate();
  return result;
}

Checkpoint merge(const Checkpoint* base,
                 const std::vector<const Checkpoint*>& cps,
                 const MergeRecipe& recipe) {
  switch (recipe.strategy) {
    case Strategy::soup:
      return soup_merge(cps, recipe);
    case Strategy::ties:
      if (!base)
        throw ValidationError("base required for task vectors (strategy ties)");
      return ties_merge(*base, cps, recipe);
    case Strategy::dare_ties:
      if (!base)
        throw ValidationError(
            "base required for task vectors (strategy dare_ties)");
      return dare_ties_merge(*base, cps, recipe);
  }
  throw ValidationError("unknown strategy");
}

} // namespace hm3

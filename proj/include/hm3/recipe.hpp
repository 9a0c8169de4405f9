#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hm3 {

enum class Strategy { soup, ties, dare_ties };
enum class TrimScope { global, per_tensor };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);
std::string trim_scope_name(TrimScope s);
TrimScope trim_scope_from_name(const std::string& name);

// Fully determines a merge: same recipe + same inputs -> bitwise-equal output.
struct MergeRecipe {
  Strategy strategy = Strategy::ties;
  std::optional<std::vector<double>> soup_weights;
  double density = 1.0;
  std::uint64_t seed = 0;
  TrimScope trim_scope = TrimScope::global;
  double lambda = 1.0;
  // Optional per-model densities; when present, overrides `density` per input.
  std::optional<std::vector<double>> densities;

  void validate() const;

  nlohmann::json to_json() const;
  static MergeRecipe from_json(const nlohmann::json& j);
};

MergeRecipe load_recipe(const std::filesystem::path& path);
void save_recipe(const MergeRecipe& recipe, const std::filesystem::path& path);

} // namespace hm3

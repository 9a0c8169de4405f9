#include "hm3/recipe.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hm3/errors.hpp"

namespace hm3 {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::soup: return "soup";
    case Strategy::ties: return "ties";
    case Strategy::dare_ties: return "dare_ties";
  }
  throw ValidationError("unknown strategy enum value");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "soup") return Strategy::soup;
  if (name == "ties") return Strategy::ties;
  if (name == "dare_ties") return Strategy::dare_ties;
  throw ValidationError("unknown merge strategy '" + name + "'");
}

std::string trim_scope_name(TrimScope s) {
  return s == TrimScope::global ? "global" : "per_tensor";
}

TrimScope trim_scope_from_name(const std::string& name) {
  if (name == "global") return TrimScope::global;
  if (name == "per_tensor") return TrimScope::per_tensor;
  throw ValidationError("unknown trim scope '" + name + "'");
}

static void check_density(double d, const char* what) {
  if (!(d > 0.0) || d > 1.0 || !std::isfinite(d))
    throw ValidationError(std::string(what) + " must be in (0,1], got " +
                          std::to_string(d));
}

void MergeRecipe::validate() const {
  check_density(density, "density");
  if (densities)
    for (double d : *densities) check_density(d, "per-model density");
  if (!std::isfinite(lambda))
    throw ValidationError("lambda must be finite");
  if (soup_weights) {
    double sum = 0.0;
    for (double w : *soup_weights) {
      if (w < 0.0 || !std::isfinite(w))
        throw ValidationError("soup_weights must be non-negative and finite");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw ValidationError("soup_weights must sum to 1 within 1e-9, got " +
                            std::to_string(sum));
  }
}

nlohmann::json MergeRecipe::to_json() const {
  nlohmann::json j{{"strategy", strategy_name(strategy)},
                   {"density", density},
                   {"seed", seed},
                   {"trim_scope", trim_scope_name(trim_scope)},
                   {"lambda", lambda}};
  if (soup_weights) j["soup_weights"] = *soup_weights;
  if (densities) j["densities"] = *densities;
  return j;
}

MergeRecipe MergeRecipe::from_json(const nlohmann::json& j) {
  MergeRecipe r;
  try {
    r.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    if (j.contains("density")) r.density = j.at("density").get<double>();
    if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("trim_scope"))
      r.trim_scope = trim_scope_from_name(j.at("trim_scope").get<std::string>());
    if (j.contains("lambda")) r.lambda = j.at("lambda").get<double>();
    if (j.contains("soup_weights") && !j.at("soup_weights").is_null())
      r.soup_weights = j.at("soup_weights").get<std::vector<double>>();
    if (j.contains("densities") && !j.at("densities").is_null())
      r.densities = j.at("densities").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed recipe: ") + ex.what());
  }
  r.validate();
  return r;
}

MergeRecipe load_recipe(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open recipe file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("malformed recipe file '" + path.string() + "': " +
                      ex.what());
  }
  return MergeRecipe::from_json(j);
}

void save_recipe(const MergeRecipe& recipe, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot open '" + path.string() + "' for writing");
  out << recipe.to_json().dump(2) << "\n";
}

} // namespace hm3

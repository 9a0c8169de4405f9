#include "hm3/search.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "hm3/checkpoint_io.hpp"
#include "hm3/errors.hpp"
#include "hm3/external_eval.hpp"
#include "hm3/rng.hpp"
#include "hm3/sampling.hpp"
#include "hm3/transform.hpp"

namespace hm3 {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::uint64_t trial_stream(std::uint64_t base_seed, std::uint64_t salt,
                           std::uint64_t index) {
  return mix64(base_seed ^ mix64(salt ^ mix64(index)));
}

} // namespace

double TrialRecord::test_mean_f1() const {
  if (!test_scores || test_scores->empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [name, f1] : *test_scores) sum += f1;
  return sum / static_cast<double>(test_scores->size());
}

nlohmann::json TrialRecord::to_json() const {
  nlohmann::json j{{"trial_index", trial_index},
                   {"density", density},
                   {"seed", seed},
                   {"val_scores", val_scores},
                   {"val_mean_f1", val_mean_f1},
                   {"is_new_best", is_new_best}};
  if (test_scores) j["test_scores"] = *test_scores;
  if (error) j["error"] = *error;
  return j;
}

void SearchConfig::validate() const {
  if (trials < 1)
    throw ValidationError("search trials must be positive");
  if (val_samples < 1 || test_samples < 1)
    throw ValidationError("val_samples and test_samples must be positive");
  if (!(beta_alpha > 0.0) || !(beta_beta > 0.0))
    throw ValidationError("beta parameters must be positive");
  if (density_override &&
      (!(*density_override > 0.0) || *density_override > 1.0))
    throw ValidationError("density_override must be in (0,1]");
}

nlohmann::json SearchConfig::to_json() const {
  nlohmann::json j{{"trials", trials},
                   {"val_samples", val_samples},
                   {"test_samples", test_samples},
                   {"beta_alpha", beta_alpha},
                   {"beta_beta", beta_beta},
                   {"base_seed", base_seed},
                   {"self_merge", self_merge}};
  if (density_override) j["density_override"] = *density_override;
  return j;
}

SearchConfig SearchConfig::from_json(const nlohmann::json& j) {
  SearchConfig c;
  try {
    c.trials = j.value("trials", c.trials);
    c.val_samples = j.value("val_samples", c.val_samples);
    c.test_samples = j.value("test_samples", c.test_samples);
    c.beta_alpha = j.value("beta_alpha", c.beta_alpha);
    c.beta_beta = j.value("beta_beta", c.beta_beta);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.self_merge = j.value("self_merge", c.self_merge);
    if (j.contains("density_override") && !j.at("density_override").is_null())
      c.density_override = j.at("density_override").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed search config: ") + ex.what());
  }
  c.validate();
  return c;
}

SearchConfig load_search_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open search config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("malformed search config '" + path.string() + "': " +
                      ex.what());
  }
  return SearchConfig::from_json(j);
}

double sample_density(std::mt19937_64& eng, const SearchConfig& config) {
  return beta_variate(eng, config.beta_alpha, config.beta_beta);
}

DatasetSplit split_dataset(const LabeledDataset& ds, std::size_t val_n,
                           std::size_t test_n, std::uint64_t seed) {
  const std::size_t size = ds.examples.size();
  const std::vector<std::size_t> perm =
      seeded_permutation(size, seed ^ fnv1a64(ds.name) ^ fnv1a64("split"));

  DatasetSplit split;
  split.validation.name = ds.name;
  split.test.name = ds.name;

  const std::size_t v = std::min(val_n, size);
  for (std::size_t i = 0; i < v; ++i) split.validation_indices.push_back(perm[i]);

  if (size >= val_n + test_n) {
    for (std::size_t i = 0; i < test_n; ++i)
      split.test_indices.push_back(perm[val_n + i]);
  } else {
    // Dataset too small for disjoint subsets: draw the test subset from the
    // tail of the same permutation, overlapping only as much as forced.
    const std::size_t t = std::min(test_n, size);
    for (std::size_t i = size - t; i < size; ++i)
      split.test_indices.push_back(perm[i]);
  }

  for (std::size_t i : split.validation_indices)
    split.validation.examples.push_back(ds.examples[i]);
  for (std::size_t i : split.test_indices)
    split.test.examples.push_back(ds.examples[i]);
  split.validation.mixed = split.validation.distinct_labels().size() > 1;
  split.test.mixed = split.test.distinct_labels().size() > 1;
  return split;
}

EvalReport BuiltinTrialEvaluator::score(const Checkpoint& cp,
                                        const SegmentLayout& layout,
                                        const std::vector<LabeledDataset>& datasets) {
  EvalOptions options;
  options.sample_cap = std::numeric_limits<std::size_t>::max();
  options.seed = eval_seed_;
  options.threads = threads_;
  return evaluate(cp, layout, datasets, {}, options);
}

ExternalTrialEvaluator::ExternalTrialEvaluator(std::string command,
                                               std::filesystem::path work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {
  std::filesystem::create_directories(work_dir_);
}

EvalReport ExternalTrialEvaluator::score(const Checkpoint& cp,
                                         const SegmentLayout& layout,
                                         const std::vector<LabeledDataset>& datasets) {
  const auto dir = work_dir_ / ("call_" + std::to_string(calls_++));
  std::filesystem::create_directories(dir);
  const auto cp_path = dir / "candidate.ckpt";
  const auto layout_path = dir / "layout.json";
  save_checkpoint(cp, cp_path);
  save_layout(layout, layout_path);
  std::vector<std::filesystem::path> dataset_paths;
  for (const LabeledDataset& ds : datasets) {
    const auto p = dir / (ds.name + ".jsonl");
    save_dataset(ds, p);
    dataset_paths.push_back(p);
  }
  return external_evaluate(command_, cp_path, dataset_paths, layout_path);
}

namespace {

// Cross-checks become derived datasets with the plan's expected label, so
// both evaluator kinds see plain datasets and resolve the target segment
// from the label itself.
std::vector<LabeledDataset> with_cross_checks(
    const std::vector<LabeledDataset>& datasets,
    const std::vector<CrossCheck>& plan) {
  std::vector<LabeledDataset> out = datasets;
  for (const CrossCheck& cc : plan) {
    const LabeledDataset* src = nullptr;
    for (const LabeledDataset& ds : datasets)
      if (ds.name == cc.dataset) src = &ds;
    if (!src)
      throw ValidationError("cross-check plan references unknown dataset '" +
                            cc.dataset + "'");
    LabeledDataset derived;
    derived.name = cc.dataset + "__on__" + cc.segment;
    derived.examples.reserve(src->examples.size());
    for (const Example& ex : src->examples)
      derived.examples.push_back(Example{ex.text, cc.expected_label});
    out.push_back(std::move(derived));
  }
  return out;
}

std::map<std::string, double> scores_by_dataset(const EvalReport& report) {
  std::map<std::string, double> out;
  for (const SegmentResult& r : report.results) out[r.dataset] = r.macro_f1;
  return out;
}

} // namespace

SearchResult run_search(const std::vector<NamedCheckpoint>& models,
                        const Checkpoint& base,
                        const std::vector<LabeledDataset>& datasets,
                        const std::vector<CrossCheck>& plan,
                        const SearchConfig& config,
                        TrialEvaluator& evaluator) {
  config.validate();
  if (datasets.empty())
    throw ValidationError("run_search needs at least one dataset");
  if (config.self_merge) {
    if (models.size() != 1)
      throw ValidationError("self-merge search takes exactly one model");
  } else if (models.size() < 2) {
    throw ValidationError("run_search needs at least two models "
                          "(or one with self_merge)");
  }

  // HM3: sanitize, lay out, expand once; every trial merges the same inputs.
  std::vector<ModelLabels> labelled;
  for (const NamedCheckpoint& m : models)
    labelled.emplace_back(m.id, m.cp.label_space);
  const std::vector<LabelSpace> sanitized = sanitize_labels(labelled);
  for (std::size_t i = 0; i < labelled.size(); ++i)
    labelled[i].second = sanitized[i];
  const SegmentLayout layout = build_layout(labelled);

  std::vector<Checkpoint> expanded;
  expanded.reserve(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    Checkpoint cp = models[i].cp;
    cp.label_space = labelled[i].second; // sanitized labels
    expanded.push_back(expand_head(cp, layout, models[i].id));
  }
  const Checkpoint expanded_base = make_base(base, layout);

  std::vector<const Checkpoint*> merge_inputs;
  if (config.self_merge) {
    merge_inputs = {&expanded.front(), &expanded.front()};
  } else {
    for (const Checkpoint& cp : expanded) merge_inputs.push_back(&cp);
  }

  // Validation/test subsets are fixed before trial 1 so every trial sees the
  // same data; cross-check pairs ride along as derived datasets.
  std::vector<LabeledDataset> val_sets, test_sets;
  for (const LabeledDataset& ds : datasets) {
    DatasetSplit split = split_dataset(ds, config.val_samples,
                                       config.test_samples, config.base_seed);
    val_sets.push_back(std::move(split.validation));
    test_sets.push_back(std::move(split.test));
  }
  validate_plan(plan, layout, datasets);
  const std::vector<LabeledDataset> val_eval = with_cross_checks(val_sets, plan);
  const std::vector<LabeledDataset> test_eval = with_cross_checks(test_sets, plan);

  SearchResult result;
  result.layout = layout;
  double best_val = -std::numeric_limits<double>::infinity();

  for (int i = 0; i < config.trials; ++i) {
    TrialRecord record;
    record.trial_index = i;
    record.seed = config.base_seed + static_cast<std::uint64_t>(i);

    std::mt19937_64 density_eng(
        trial_stream(config.base_seed, fnv1a64("density"),
                     static_cast<std::uint64_t>(i)));
    record.density = config.density_override
                         ? *config.density_override
                         : sample_density(density_eng, config);

    MergeRecipe recipe;
    recipe.strategy = Strategy::dare_ties;
    recipe.density = record.density;
    recipe.seed = record.seed;

    try {
      const Checkpoint merged =
          dare_ties_merge(expanded_base, merge_inputs, recipe);
      const EvalReport val_report = evaluator.score(merged, layout, val_eval);
      record.val_scores = scores_by_dataset(val_report);
      record.val_mean_f1 = val_report.mean_macro_f1;

      if (record.val_mean_f1 > best_val) {
        const EvalReport test_report =
            evaluator.score(merged, layout, test_eval);
        record.test_scores = scores_by_dataset(test_report);
        record.is_new_best = true;
        best_val = record.val_mean_f1;
        result.best = merged;
        result.best_recipe = recipe;
        result.best_trial = i;
      }
    } catch (const std::exception& ex) {
      record.error = ex.what();
      record.val_scores.clear();
      record.val_mean_f1 = 0.0;
      record.is_new_best = false;
      record.test_scores.reset();
    }
    result.records.push_back(std::move(record));
  }
  return result;
}

SearchResult run_self_merge(const NamedCheckpoint& model, const Checkpoint& base,
                            const std::vector<LabeledDataset>& datasets,
                            const std::vector<CrossCheck>& plan,
                            const SearchConfig& config,
                            TrialEvaluator& evaluator) {
  SearchConfig cfg = config;
  cfg.self_merge = true;
  return run_search({model}, base, datasets, plan, cfg, evaluator);
}

void emit_search_artifacts(const SearchResult& result,
                           const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "trials.jsonl", std::ios::binary);
    if (!out)
      throw Error("cannot write trials.jsonl in '" + out_dir.string() + "'");
    for (const TrialRecord& r : result.records) out << r.to_json().dump() << "\n";
  }

  {
    std::ofstream out(out_dir / "scatter.csv", std::ios::binary);
    if (!out)
      throw Error("cannot write scatter.csv in '" + out_dir.string() + "'");
    out << "trial,density,val_mean_f1,is_new_best,test_mean_f1\n";
    for (const TrialRecord& r : result.records) {
      out << r.trial_index << "," << fmt_double(r.density) << ","
          << fmt_double(r.val_mean_f1) << "," << (r.is_new_best ? 1 : 0) << ",";
      if (r.test_scores) out << fmt_double(r.test_mean_f1());
      out << "\n";
    }
  }

  if (result.best_recipe)
    save_recipe(*result.best_recipe, out_dir / "best_recipe.json");
}

} // namespace hm3

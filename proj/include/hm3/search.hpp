#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hm3/checkpoint.hpp"
#include "hm3/evaluation.hpp"
#include "hm3/merge.hpp"

#include "json.hpp"

namespace hm3 {

struct TrialRecord {
  int trial_index = 0;
  double density = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, double> val_scores; // dataset -> macro_f1
  double val_mean_f1 = 0.0;
  bool is_new_best = false;
  std::optional<std::map<std::string, double>> test_scores; // new-best trials only
  std::optional<std::string> error; // failed trials are recorded, not fatal

  double test_mean_f1() const;
  nlohmann::json to_json() const;
};

struct SearchConfig {
  int trials = 500;
  int val_samples = 600;
  int test_samples = 1000;
  double beta_alpha = 1.2;
  double beta_beta = 2.0;
  std::uint64_t base_seed = 0;
  bool self_merge = false;
  // Pins every trial to one density instead of sampling; test/ops hook.
  std::optional<double> density_override;

  void validate() const;
  nlohmann::json to_json() const;
  static SearchConfig from_json(const nlohmann::json& j);
};

SearchConfig load_search_config(const std::filesystem::path& path);

// One Beta(beta_alpha, beta_beta) draw; exact 0/1 are resampled.
double sample_density(std::mt19937_64& eng, const SearchConfig& config);

// Validation/test split of one dataset, fixed before the first trial. The
// subsets are disjoint whenever the dataset is large enough; otherwise the
// test subset is drawn from the tail of the same permutation and may overlap.
struct DatasetSplit {
  LabeledDataset validation;
  LabeledDataset test;
  std::vector<std::size_t> validation_indices;
  std::vector<std::size_t> test_indices;
};

DatasetSplit split_dataset(const LabeledDataset& ds, std::size_t val_n,
                           std::size_t test_n, std::uint64_t seed);

struct NamedCheckpoint {
  std::string id;
  Checkpoint cp;
};

// Scores one candidate merge on a fixed set of datasets. The builtin
// implementation runs the toy runtime in-process; the external one shells out
// to the documented evaluator command.
class TrialEvaluator {
public:
  virtual ~TrialEvaluator() = default;
  virtual EvalReport score(const Checkpoint& cp, const SegmentLayout& layout,
                           const std::vector<LabeledDataset>& datasets) = 0;
};

class BuiltinTrialEvaluator : public TrialEvaluator {
public:
  explicit BuiltinTrialEvaluator(unsigned threads = 1,
                                 std::uint64_t eval_seed = 0)
      : threads_(threads), eval_seed_(eval_seed) {}
  EvalReport score(const Checkpoint& cp, const SegmentLayout& layout,
                   const std::vector<LabeledDataset>& datasets) override;

private:
  unsigned threads_;
  std::uint64_t eval_seed_;
};

class ExternalTrialEvaluator : public TrialEvaluator {
public:
  ExternalTrialEvaluator(std::string command, std::filesystem::path work_dir);
  EvalReport score(const Checkpoint& cp, const SegmentLayout& layout,
                   const std::vector<LabeledDataset>& datasets) override;

private:
  std::string command_;
  std::filesystem::path work_dir_;
  std::size_t calls_ = 0;
};

struct SearchResult {
  std::optional<Checkpoint> best;
  std::optional<MergeRecipe> best_recipe;
  int best_trial = -1;
  std::vector<TrialRecord> records;
  SegmentLayout layout;
};

// Repeated DARE-TIES merging with Beta-sampled densities: per trial, merge
// with trial seed base_seed + index, score on the validation subsets, and on
// a strict improvement of the mean validation macro-F1 score the test
// subsets and promote the candidate to best. Trial failures are recorded and
// skipped. Fully determined by (models, datasets, config).
SearchResult run_search(const std::vector<NamedCheckpoint>& models,
                        const Checkpoint& base,
                        const std::vector<LabeledDataset>& datasets,
                        const std::vector<CrossCheck>& plan,
                        const SearchConfig& config,
                        TrialEvaluator& evaluator);

// Search with the model merged against itself (two DARE streams over one
// task vector). Equivalent to run_search with the model duplicated.
SearchResult run_self_merge(const NamedCheckpoint& model, const Checkpoint& base,
                            const std::vector<LabeledDataset>& datasets,
                            const std::vector<CrossCheck>& plan,
                            const SearchConfig& config,
                            TrialEvaluator& evaluator);

// trials.jsonl + scatter.csv + best_recipe.json; byte-identical for the same
// inputs and base_seed.
void emit_search_artifacts(const SearchResult& result,
                           const std::filesystem::path& out_dir);

} // namespace hm3

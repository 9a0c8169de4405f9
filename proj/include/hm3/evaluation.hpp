#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hm3/checkpoint.hpp"
#include "hm3/dataset.hpp"
#include "hm3/layout.hpp"

#include "json.hpp"

namespace hm3 {

// One (dataset, segment) evaluation: confusion matrix over the segment's
// classes plus the derived scores.
struct SegmentResult {
  std::string dataset;
  std::string segment;
  std::vector<std::string> labels;
  std::vector<std::vector<std::int64_t>> confusion; // rows expected, cols predicted
  double accuracy = 0.0;
  std::vector<double> per_class_f1;
  std::vector<std::string> zero_support_classes;
  double macro_f1 = 0.0;
  std::size_t samples = 0;
  // Mean predicted distribution over the segment; sums to 1 when present.
  std::optional<std::vector<double>> mean_probabilities;
};

struct Timings {
  double load_ms = 0.0;
  double inference_ms = 0.0;
};

struct EvalReport {
  std::vector<SegmentResult> results;
  Timings timings;
  double mean_macro_f1 = 0.0; // unweighted over results

  void recompute_mean();
  void validate() const;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// Cross-check: evaluate `dataset` on `segment`, expecting every example to
// land on `expected_label` (e.g. off-topic corpora must hit the benign class).
struct CrossCheck {
  std::string dataset;
  std::string segment;
  std::string expected_label;
};

std::vector<CrossCheck> load_cross_check_plan(const std::filesystem::path& path);
void validate_plan(const std::vector<CrossCheck>& plan,
                   const SegmentLayout& layout,
                   const std::vector<LabeledDataset>& datasets);

// Materializes every plan pair as a derived dataset named
// "<dataset>__on__<segment>" whose expected labels are all the plan label.
// Lets plan pairs ride through interfaces that only know plain datasets
// (the external evaluator contract).
std::vector<LabeledDataset> derive_cross_datasets(
    const std::vector<LabeledDataset>& datasets,
    const std::vector<CrossCheck>& plan);

struct EvalOptions {
  std::size_t sample_cap = 3000; // per test dataset
  std::uint64_t seed = 0;
  bool exclude_zero_support = false; // drop unsupported classes from macro-F1
  unsigned threads = 1;
};

// Home-segment evaluation for every dataset plus every plan pair. Draws
// min(cap, size) examples per dataset by seeded shuffle; fills inference
// timing (load timing is the caller's to add).
EvalReport evaluate(const Checkpoint& cp, const SegmentLayout& layout,
                    const std::vector<LabeledDataset>& datasets,
                    const std::vector<CrossCheck>& plan,
                    const EvalOptions& options);

struct RuntimeArm {
  double load_ms = 0.0;
  double inference_ms = 0.0;
  double total_ms() const { return load_ms + inference_ms; }
};

struct RuntimeComparison {
  RuntimeArm individual; // summed over all individual models
  RuntimeArm merged;
  std::vector<std::pair<std::string, RuntimeArm>> per_model;
  std::size_t inferences_per_model = 0;

  double load_reduction_pct() const;
  double inference_reduction_pct() const;
  double total_reduction_pct() const;

  nlohmann::json to_json() const;
};

// Loads every checkpoint (timed) and runs each one over all dataset texts
// (timed): N individual passes versus one merged pass over the same texts.
RuntimeComparison compare_runtime(
    const std::vector<std::filesystem::path>& individual_paths,
    const std::filesystem::path& merged_path,
    const std::vector<LabeledDataset>& datasets, unsigned threads = 1);

// report.json + confusion_<dataset>_<segment>.csv per result + scores.csv.
// Everything except the timings block in report.json is deterministic.
void emit_report(const EvalReport& report, const std::filesystem::path& out_dir);

} // namespace hm3

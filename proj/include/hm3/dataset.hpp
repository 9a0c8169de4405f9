#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hm3/layout.hpp"

namespace hm3 {

struct Example {
  std::string text;
  std::string expected_label;
};

// Line-delimited JSON records {"text": ..., "expected_label": ...}.
// Single-expected-label datasets model one positive class; datasets spanning
// several labels are flagged mixed (general corpora).
struct LabeledDataset {
  std::string name; // filename stem
  std::vector<Example> examples;
  bool mixed = false;
  std::optional<std::string> target_segment; // resolved against a layout

  std::vector<std::string> distinct_labels() const;
};

LabeledDataset load_dataset(const std::filesystem::path& path,
                            const SegmentLayout* layout = nullptr);

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);

// Resolves the unique segment containing every expected label of the dataset.
std::string resolve_home_segment(const LabeledDataset& ds,
                                 const SegmentLayout& layout);

// Deterministic Fisher-Yates driven by explicit mt19937_64 draws; std::shuffle
// is implementation-defined and would break cross-run reproducibility.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// First min(cap, size) examples of the seeded permutation.
LabeledDataset sample_dataset(const LabeledDataset& ds, std::size_t cap,
                              std::uint64_t seed);

} // namespace hm3

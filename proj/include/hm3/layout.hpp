#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace hm3 {

struct Segment {
  std::string model_id;
  std::vector<std::string> labels;
  std::size_t offset = 0;

  std::size_t width() const { return labels.size(); }
};

// Tiling of the expanded output head: one contiguous label block per source
// model, in merge-input order. Segments cover [0, total_width) with no gaps.
struct SegmentLayout {
  std::vector<Segment> segments;

  std::size_t total_width() const;
  const Segment& segment(const std::string& model_id) const;
  const Segment* find_segment(const std::string& model_id) const;
  // Labels are globally unique across segments, so every label has one owner.
  const Segment* segment_of_label(const std::string& label) const;
  std::vector<std::string> all_labels() const;

  void validate() const;

  nlohmann::json to_json() const;
  static SegmentLayout from_json(const nlohmann::json& j);
};

void save_layout(const SegmentLayout& layout, const std::filesystem::path& path);
SegmentLayout load_layout(const std::filesystem::path& path);

} // namespace hm3

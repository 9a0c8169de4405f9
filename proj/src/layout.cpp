#include "hm3/layout.hpp"

#include <fstream>
#include <set>

#include "hm3/errors.hpp"

namespace hm3 {

std::size_t SegmentLayout::total_width() const {
  std::size_t w = 0;
  for (const Segment& s : segments) w += s.width();
  return w;
}

const Segment* SegmentLayout::find_segment(const std::string& model_id) const {
  for (const Segment& s : segments)
    if (s.model_id == model_id) return &s;
  return nullptr;
}

const Segment& SegmentLayout::segment(const std::string& model_id) const {
  if (const Segment* s = find_segment(model_id)) return *s;
  throw ValidationError("layout has no segment for model '" + model_id + "'");
}

const Segment* SegmentLayout::segment_of_label(const std::string& label) const {
  for (const Segment& s : segments)
    for (const std::string& l : s.labels)
      if (l == label) return &s;
  return nullptr;
}

std::vector<std::string> SegmentLayout::all_labels() const {
  std::vector<std::string> out;
  out.reserve(total_width());
  for (const Segment& s : segments)
    out.insert(out.end(), s.labels.begin(), s.labels.end());
  return out;
}

void SegmentLayout::validate() const {
  if (segments.empty())
    throw ValidationError("layout must contain at least one segment");
  std::size_t expected_offset = 0;
  std::set<std::string> ids;
  std::set<std::string> labels;
  for (const Segment& s : segments) {
    if (s.model_id.empty())
      throw ValidationError("layout segment has empty model_id");
    if (!ids.insert(s.model_id).second)
      throw ValidationError("duplicate model_id '" + s.model_id +
                            "' in layout");
    if (s.labels.empty())
      throw ValidationError("segment '" + s.model_id + "' has no labels");
    if (s.offset != expected_offset)
      throw ValidationError("segment '" + s.model_id + "' offset " +
                            std::to_string(s.offset) + " does not tile, expected " +
                            std::to_string(expected_offset));
    for (const std::string& l : s.labels) {
      if (l.empty())
        throw ValidationError("segment '" + s.model_id + "' has an empty label");
      if (!labels.insert(l).second)
        throw ValidationError("duplicate label '" + l + "' across segments");
    }
    expected_offset += s.width();
  }
}

nlohmann::json SegmentLayout::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const Segment& s : segments)
    arr.push_back({{"model_id", s.model_id},
                   {"labels", s.labels},
                   {"offset", s.offset}});
  return arr;
}

SegmentLayout SegmentLayout::from_json(const nlohmann::json& j) {
  if (!j.is_array())
    throw FormatError("layout JSON must be an array of segments");
  SegmentLayout layout;
  for (const auto& e : j) {
    Segment s;
    try {
      s.model_id = e.at("model_id").get<std::string>();
      s.labels = e.at("labels").get<std::vector<std::string>>();
      s.offset = e.at("offset").get<std::size_t>();
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(std::string("malformed layout segment: ") + ex.what());
    }
    layout.segments.push_back(std::move(s));
  }
  layout.validate();
  return layout;
}

void save_layout(const SegmentLayout& layout, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot open '" + path.string() + "' for writing");
  out << layout.to_json().dump(2) << "\n";
  if (!out)
    throw Error("failed writing layout to '" + path.string() + "'");
}

SegmentLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open layout file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("malformed layout file '" + path.string() + "': " +
                      ex.what());
  }
  return SegmentLayout::from_json(j);
}

} // namespace hm3

#include "hm3/dataset.hpp"

#include <fstream>
#include <random>
#include <set>

#include "json.hpp"

#include "hm3/errors.hpp"
#include "hm3/rng.hpp"

namespace hm3 {

std::vector<std::string> LabeledDataset::distinct_labels() const {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const Example& e : examples)
    if (seen.insert(e.expected_label).second) out.push_back(e.expected_label);
  return out;
}

LabeledDataset load_dataset(const std::filesystem::path& path,
                            const SegmentLayout* layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open dataset file '" + path.string() + "'");

  LabeledDataset ds;
  ds.name = path.stem().string();

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("dataset '" + ds.name + "' line " +
                        std::to_string(line_no) + ": malformed JSON: " +
                        ex.what());
    }
    if (!rec.contains("text") || !rec.at("text").is_string())
      throw FormatError("dataset '" + ds.name + "' line " +
                        std::to_string(line_no) + ": missing \"text\" string");
    if (!rec.contains("expected_label") || !rec.at("expected_label").is_string())
      throw FormatError("dataset '" + ds.name + "' line " +
                        std::to_string(line_no) +
                        ": missing \"expected_label\" string");
    ds.examples.push_back(Example{rec.at("text").get<std::string>(),
                                  rec.at("expected_label").get<std::string>()});
  }
  if (ds.examples.empty())
    throw FormatError("empty dataset '" + path.string() + "'");

  ds.mixed = ds.distinct_labels().size() > 1;
  if (layout) ds.target_segment = resolve_home_segment(ds, *layout);
  return ds;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot open '" + path.string() + "' for writing");
  for (const Example& e : ds.examples) {
    nlohmann::json rec{{"text", e.text}, {"expected_label", e.expected_label}};
    out << rec.dump() << "\n";
  }
  if (!out)
    throw Error("failed writing dataset to '" + path.string() + "'");
}

std::string resolve_home_segment(const LabeledDataset& ds,
                                 const SegmentLayout& layout) {
  const Segment* home = nullptr;
  for (const std::string& label : ds.distinct_labels()) {
    const Segment* seg = layout.segment_of_label(label);
    if (!seg)
      throw ValidationError("dataset '" + ds.name + "': unknown label '" +
                            label + "' vs provided layout");
    if (home && home != seg)
      throw ValidationError("dataset '" + ds.name +
                            "' mixes labels from segments '" + home->model_id +
                            "' and '" + seg->model_id + "'");
    home = seg;
  }
  return home->model_id;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 eng(mix64(seed));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(eng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

LabeledDataset sample_dataset(const LabeledDataset& ds, std::size_t cap,
                              std::uint64_t seed) {
  const std::size_t n = std::min(cap, ds.examples.size());
  const std::vector<std::size_t> perm =
      seeded_permutation(ds.examples.size(), seed ^ fnv1a64(ds.name));
  LabeledDataset out;
  out.name = ds.name;
  out.target_segment = ds.target_segment;
  out.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.examples.push_back(ds.examples[perm[i]]);
  out.mixed = out.distinct_labels().size() > 1;
  return out;
}

} // namespace hm3

#include "hm3/checkpoint_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "hm3/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");
static_assert(sizeof(float) == 4, "checkpoint I/O assumes 32-bit floats");

namespace hm3 {

namespace {

nlohmann::json arch_to_json(const ArchDescriptor& a) {
  return {{"family", arch_family_name(a.family)},
          {"vocab_size", a.vocab_size},
          {"embed_dim", a.embed_dim},
          {"hidden_dim", a.hidden_dim},
          {"head_out_dim", a.head_out_dim}};
}

ArchDescriptor arch_from_json(const nlohmann::json& j) {
  ArchDescriptor a;
  a.family = arch_family_from_name(j.at("family").get<std::string>());
  a.vocab_size = j.at("vocab_size").get<std::size_t>();
  a.embed_dim = j.at("embed_dim").get<std::size_t>();
  a.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  a.head_out_dim = j.at("head_out_dim").get<std::size_t>();
  return a;
}

} // namespace

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  cp.validate();

  nlohmann::json manifest;
  manifest["arch"] = arch_to_json(cp.arch);
  manifest["labels"] = cp.label_space.labels;
  manifest["role"] = role_name(cp.role);

  nlohmann::json tensor_entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : cp.tensors) {
    const std::size_t nbytes = t.data.size() * sizeof(float);
    tensor_entries.push_back({{"name", name},
                              {"shape", t.shape},
                              {"dtype", "f32"},
                              {"offset", offset},
                              {"nbytes", nbytes}});
    offset += nbytes;
  }
  manifest["tensors"] = std::move(tensor_entries);
  if (cp.layout) manifest["layout"] = cp.layout->to_json();
  if (cp.recipe) manifest["recipe"] = cp.recipe->to_json();

  const std::string manifest_text = manifest.dump();
  const std::uint64_t n = manifest_text.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(manifest_text.data(), static_cast<std::streamsize>(n));
  for (const auto& [name, t] : cp.tensors)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  out.flush();
  if (!out)
    throw Error("failed writing checkpoint to '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open checkpoint file '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad())
    throw Error("failed reading checkpoint file '" + path.string() + "'");

  if (bytes.size() < sizeof(std::uint64_t))
    throw FormatError("malformed header: file shorter than 8 bytes");
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data(), sizeof(n));
  if (sizeof(std::uint64_t) + n > bytes.size())
    throw FormatError("truncated payload: manifest length " +
                      std::to_string(n) + " exceeds file size");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + sizeof(std::uint64_t),
                                     bytes.begin() + sizeof(std::uint64_t) +
                                         static_cast<std::ptrdiff_t>(n));
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed manifest: ") + ex.what());
  }

  const char* payload = bytes.data() + sizeof(std::uint64_t) + n;
  const std::size_t payload_size = bytes.size() - sizeof(std::uint64_t) - n;

  Checkpoint cp;
  try {
    cp.arch = arch_from_json(manifest.at("arch"));
    cp.label_space.labels =
        manifest.at("labels").get<std::vector<std::string>>();
    cp.role = role_from_name(manifest.at("role").get<std::string>());

    std::size_t expected_offset = 0;
    for (const auto& entry : manifest.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto dtype = entry.at("dtype").get<std::string>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto nbytes = entry.at("nbytes").get<std::size_t>();

      if (dtype != "f32")
        throw FormatError("unsupported dtype '" + dtype + "' for tensor '" +
                          name + "'");
      if (nbytes != shape_product(shape) * sizeof(float))
        throw FormatError("manifest/payload length mismatch: tensor '" + name +
                          "' shape " + shape_to_string(shape) + " needs " +
                          std::to_string(shape_product(shape) * sizeof(float)) +
                          " bytes, manifest says " + std::to_string(nbytes));
      if (offset < expected_offset)
        throw FormatError("overlapping tensor extents at tensor '" + name + "'");
      if (offset > expected_offset)
        throw FormatError("non-contiguous tensor extents at tensor '" + name +
                          "'");
      if (offset + nbytes > payload_size)
        throw FormatError("truncated payload: tensor '" + name +
                          "' extends past end of file");

      std::vector<float> data(nbytes / sizeof(float));
      std::memcpy(data.data(), payload + offset, nbytes);
      if (!cp.tensors.emplace(name, Tensor(shape, std::move(data))).second)
        throw FormatError("duplicate tensor name '" + name + "' in manifest");
      expected_offset = offset + nbytes;
    }
    if (expected_offset != payload_size)
      throw FormatError("manifest/payload length mismatch: manifest covers " +
                        std::to_string(expected_offset) + " bytes, payload has " +
                        std::to_string(payload_size));

    if (manifest.contains("layout"))
      cp.layout = SegmentLayout::from_json(manifest.at("layout"));
    if (manifest.contains("recipe"))
      cp.recipe = MergeRecipe::from_json(manifest.at("recipe"));
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed manifest: ") + ex.what());
  }

  cp.validate();
  return cp;
}

} // namespace hm3

#pragma once

#include <filesystem>

#include "hm3/checkpoint.hpp"

namespace hm3 {

// Checkpoint file format, bit-exact:
//   bytes 0..7   unsigned 64-bit little-endian manifest length n
//   bytes 8..8+n UTF-8 JSON manifest:
//                {"arch":{...},"labels":[...],"role":"...",
//                 "tensors":[{"name","shape","dtype":"f32","offset","nbytes"}],
//                 "layout":[...]?, "recipe":{...}?}
//                tensor offsets are relative to the payload start
//   remainder    concatenated raw little-endian float32 data
// Tensors appear in lexicographic name order with contiguous extents.
void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace hm3

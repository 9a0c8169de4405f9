#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hm3/evaluation.hpp"

namespace hm3 {

// Spawns `<command> --checkpoint <path> --dataset <path>... --layout <path>`
// and parses the EvalReport JSON the command writes to standard output.
// The command's stderr passes through untouched.
EvalReport external_evaluate(const std::string& command,
                             const std::filesystem::path& checkpoint_path,
                             const std::vector<std::filesystem::path>& dataset_paths,
                             const std::filesystem::path& layout_path);

std::string shell_quote(const std::string& arg);

} // namespace hm3

#include "hm3/external_eval.hpp"

#include <array>
#include <cstdio>

#include <sys/wait.h>

#include "json.hpp"

#include "hm3/errors.hpp"

namespace hm3 {

std::string shell_quote(const std::string& arg) {
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

EvalReport external_evaluate(const std::string& command,
                             const std::filesystem::path& checkpoint_path,
                             const std::vector<std::filesystem::path>& dataset_paths,
                             const std::filesystem::path& layout_path) {
  if (command.empty())
    throw ValidationError("external evaluator command is empty");

  std::string cmdline = command;
  cmdline += " --checkpoint " + shell_quote(checkpoint_path.string());
  for (const auto& d : dataset_paths)
    cmdline += " --dataset " + shell_quote(d.string());
  cmdline += " --layout " + shell_quote(layout_path.string());

  FILE* pipe = popen(cmdline.c_str(), "r");
  if (!pipe)
    throw ExternalToolError("failed to spawn external evaluator: " + cmdline);

  std::string stdout_text;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    stdout_text.append(buf.data(), n);
  const int status = pclose(pipe);

  if (status == -1)
    throw ExternalToolError("external evaluator failed: could not reap process");
  if (WIFEXITED(status) && WEXITSTATUS(status) != 0)
    throw ExternalToolError("external evaluator failed with exit code " +
                            std::to_string(WEXITSTATUS(status)));
  if (WIFSIGNALED(status))
    throw ExternalToolError("external evaluator killed by signal " +
                            std::to_string(WTERMSIG(status)));

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(stdout_text);
  } catch (const nlohmann::json::exception& ex) {
    throw ExternalToolError(
        std::string("external evaluator wrote malformed JSON: ") + ex.what());
  }
  return EvalReport::from_json(j);
}

} // namespace hm3

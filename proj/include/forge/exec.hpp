#pragma once

#include <cstdio>
#include <string>
#include <sys/wait.h>

#include "forge/errors.hpp"

namespace forge {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // interleaved stdout + stderr
  bool truncated = false;
};

// Runs a shell command, capturing combined output up to `cap` bytes.
inline CommandResult run_command(const std::string& command, std::size_t cap = 1 << 20) {
  const std::string wrapped = "{ " + command + " ; } 2>&1";
  FILE* pipe = ::popen(wrapped.c_str(), "r");
  if (!pipe) throw Error(Errc::io_error, "popen failed for: " + command);
  CommandResult result;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) {
    if (result.output.size() < cap) {
      const std::size_t take = std::min(n, cap - result.output.size());
      result.output.append(buf, take);
      if (take < n) result.truncated = true;
    } else {
      result.truncated = true;
    }
  }
  const int status = ::pclose(pipe);
  result.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  if (result.truncated) result.output += "\n[log truncated]";
  return result;
}

}  // namespace forge

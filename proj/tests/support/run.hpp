#pragma once

#include <array>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <sys/wait.h>

namespace testsupport {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

/// Run a shell command and capture its stdout (append "2>&1" to also capture
/// stderr).  Throws when the command cannot be started.
inline CommandResult run_command(const std::string& command) {
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) {
    throw std::runtime_error("popen failed for: " + command);
  }
  CommandResult result;
  std::array<char, 4096> buffer{};
  std::size_t n = 0;
  while ((n = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.output.append(buffer.data(), n);
  }
  const int status = pclose(pipe);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else {
    result.exit_code = -1;
  }
  return result;
}

inline std::string cli_path() {
#ifdef QLE_CLI_PATH
  return QLE_CLI_PATH;
#else
  throw std::runtime_error("QLE_CLI_PATH not defined at compile time");
#endif
}

inline std::string data_dir() {
#ifdef QLE_DATA_DIR
  return QLE_DATA_DIR;
#else
  throw std::runtime_error("QLE_DATA_DIR not defined at compile time");
#endif
}

}  // namespace testsupport

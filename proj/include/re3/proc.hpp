#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "re3/common.hpp"

namespace re3 {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Locates `name` on PATH (or verifies an explicit path is executable).
inline std::optional<std::filesystem::path>
find_executable(const std::string &name) {
  namespace fs = std::filesystem;
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0 && fs::is_regular_file(name))
      return fs::path(name);
    return std::nullopt;
  }
  const char *path_env = std::getenv("PATH");
  if (!path_env)
    return std::nullopt;
  std::string paths(path_env);
  std::size_t start = 0;
  while (start <= paths.size()) {
    std::size_t sep = paths.find(':', start);
    std::string dir = paths.substr(
        start, sep == std::string::npos ? std::string::npos : sep - start);
    if (!dir.empty()) {
      fs::path candidate = fs::path(dir) / name;
      if (::access(candidate.c_str(), X_OK) == 0 &&
          fs::is_regular_file(candidate))
        return candidate;
    }
    if (sep == std::string::npos)
      break;
    start = sep + 1;
  }
  return std::nullopt;
}

/// Runs a command (fork/exec, no shell) capturing stdout and stderr.
/// Returns the exit code, or 128+signal when the child died on a signal.
inline ProcessResult run_process(const std::vector<std::string> &argv,
                                 const std::filesystem::path &workdir = {}) {
  if (argv.empty())
    throw Error(Errc::IoError, "empty command");

  namespace fs = std::filesystem;
  static std::atomic<unsigned> counter{0};
  fs::path tmp = fs::temp_directory_path();
  fs::path out_path = tmp / ("re3_out_" + std::to_string(::getpid()) + "_" +
                             std::to_string(counter.fetch_add(1)));
  fs::path err_path = out_path;
  err_path += ".err";

  pid_t pid = ::fork();
  if (pid < 0)
    throw Error(Errc::IoError, "fork failed");
  if (pid == 0) {
    if (!workdir.empty() && ::chdir(workdir.c_str()) != 0)
      ::_exit(127);
    int out_fd = ::open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    int err_fd = ::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (out_fd < 0 || err_fd < 0)
      ::_exit(127);
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    ::close(out_fd);
    ::close(err_fd);
    std::vector<char *> cargv;
    cargv.reserve(argv.size() + 1);
    for (const std::string &a : argv)
      cargv.push_back(const_cast<char *>(a.c_str()));
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
  }

  int status = 0;
  ::waitpid(pid, &status, 0);
  ProcessResult result;
  if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    result.exit_code = 128 + WTERMSIG(status);

  std::error_code ec;
  if (fs::exists(out_path, ec))
    result.out = read_file(out_path);
  if (fs::exists(err_path, ec))
    result.err = read_file(err_path);
  fs::remove(out_path, ec);
  fs::remove(err_path, ec);
  return result;
}

} // namespace re3

#pragma once

#include <sys/types.h>

#include <string>
#include <vector>

namespace labelforge::testing {

// A child process whose stdout is readable line by line.
class ChildProcess {
 public:
  ChildProcess(const std::string& program, const std::vector<std::string>& args);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  // Next stdout line without the newline; empty on EOF or after `timeout_ms`.
  std::string ReadLine(int timeout_ms = 10000);

  // SIGKILL and reap. Returns false if the child was already gone.
  bool Kill();
  // SIGTERM, then wait; returns the exit status (-1 if killed by a signal).
  int Terminate();

  pid_t pid() const { return pid_; }

 private:
  pid_t pid_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
};

// Starts `labelforge serve ... --bind 127.0.0.1:0` and parses the port from
// its "listening on" line. Returns 0 if the line never arrives.
int WaitForListening(ChildProcess& child);

}  // namespace labelforge::testing

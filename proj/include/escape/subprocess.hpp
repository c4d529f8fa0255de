#pragma once

#include <string>
#include <vector>

namespace escape {

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    bool signaled = false;
    std::string stdout_text;
    std::string stderr_text;
};

/// Runs argv[0] with the given arguments, capturing stdout and stderr.
/// Kills the child after `timeout_seconds` (0 disables the timeout).
/// Throws IoError when the process cannot be spawned at all.
ProcessResult run_process(const std::vector<std::string>& argv, double timeout_seconds);

}  // namespace escape

#include "escape/subprocess.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "escape/errors.hpp"

namespace escape {

namespace {

void set_nonblocking(int fd) {
    const int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

// drains whatever is currently available; returns false once the pipe closes
bool drain(int fd, std::string& sink) {
    char buf[4096];
    for (;;) {
        const ssize_t got = read(fd, buf, sizeof(buf));
        if (got > 0) {
            sink.append(buf, static_cast<std::size_t>(got));
        } else if (got == 0) {
            return false;
        } else {
            return errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR;
        }
    }
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, double timeout_seconds) {
    if (argv.empty()) throw IoError("run_process: empty argv");

    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw IoError("run_process: pipe failed: " + std::string(std::strerror(errno)));

    const pid_t pid = fork();
    if (pid < 0) throw IoError("run_process: fork failed: " + std::string(std::strerror(errno)));

    if (pid == 0) {
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);

        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());

        const std::string msg = "exec failed: " + std::string(std::strerror(errno)) + "\n";
        (void)!write(STDERR_FILENO, msg.data(), msg.size());
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);
    set_nonblocking(out_pipe[0]);
    set_nonblocking(err_pipe[0]);

    ProcessResult result;
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_seconds);
    bool out_open = true, err_open = true;
    int status = 0;
    bool exited = false;

    while (!exited) {
        if (out_open) out_open = drain(out_pipe[0], result.stdout_text);
        if (err_open) err_open = drain(err_pipe[0], result.stderr_text);

        const pid_t waited = waitpid(pid, &status, WNOHANG);
        if (waited == pid) {
            exited = true;
            break;
        }

        if (timeout_seconds > 0.0 && std::chrono::steady_clock::now() > deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            result.timed_out = true;
            exited = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }

    // collect whatever is still buffered after exit
    drain(out_pipe[0], result.stdout_text);
    drain(err_pipe[0], result.stderr_text);
    close(out_pipe[0]);
    close(err_pipe[0]);

    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.signaled = true;
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

}  // namespace escape

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <utility>

#include "asql/errors.hpp"
#include "asql/provider.hpp"

namespace asql {

namespace {

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Fd() { reset(); }

    int get() const { return fd_; }
    explicit operator bool() const { return fd_ >= 0; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

std::array<Fd, 2> make_pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw TransportError(std::string("pipe failed: ") + std::strerror(errno));
    return {Fd(fds[0]), Fd(fds[1])};
}

}  // namespace

ProcessResult run_process(const std::string& command, const std::string& input, std::chrono::milliseconds timeout) {
    // A provider that exits without reading stdin must surface as EPIPE, not kill us.
    static const bool sigpipe_ignored = (::signal(SIGPIPE, SIG_IGN), true);
    (void)sigpipe_ignored;

    auto [in_r, in_w] = make_pipe();
    auto [out_r, out_w] = make_pipe();
    auto [err_r, err_w] = make_pipe();

    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        ::dup2(in_r.get(), STDIN_FILENO);
        ::dup2(out_w.get(), STDOUT_FILENO);
        ::dup2(err_w.get(), STDERR_FILENO);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    in_r.reset();
    out_w.reset();
    err_w.reset();
    ::fcntl(in_w.get(), F_SETFL, O_NONBLOCK);

    ProcessResult result;
    std::size_t written = 0;
    if (input.empty()) in_w.reset();
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::array<char, 4096> buf{};

    while (out_r || err_r) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            throw TransportError("provider timed out after " + std::to_string(timeout.count()) + " ms");
        }
        std::array<pollfd, 3> fds{};
        nfds_t count = 0;
        const int ids[3] = {out_r.get(), err_r.get(), in_w.get()};
        for (int k = 0; k < 3; ++k) {
            if (ids[k] < 0) continue;
            fds[count++] = {ids[k], static_cast<short>(k == 2 ? POLLOUT : POLLIN), 0};
        }
        const int ready = ::poll(fds.data(), count, static_cast<int>(left.count()));
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("poll failed: ") + std::strerror(errno));
        }
        for (nfds_t k = 0; k < count; ++k) {
            if (fds[k].revents == 0) continue;
            if (fds[k].fd == in_w.get()) {
                const auto n = ::write(in_w.get(), input.data() + written, input.size() - written);
                if (n > 0) written += static_cast<std::size_t>(n);
                if (n < 0 && errno != EAGAIN) in_w.reset();  // reader went away
                if (written == input.size()) in_w.reset();
                continue;
            }
            const auto n = ::read(fds[k].fd, buf.data(), buf.size());
            if (n > 0) {
                (fds[k].fd == out_r.get() ? result.out : result.err).append(buf.data(), static_cast<std::size_t>(n));
            } else if (n == 0 || errno != EINTR) {
                (fds[k].fd == out_r.get() ? out_r : err_r).reset();
            }
        }
    }
    in_w.reset();

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw TransportError(std::string("waitpid failed: ") + std::strerror(errno));
    }
    if (WIFEXITED(status)) {
        result.exit_status = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_status = 128 + WTERMSIG(status);
    }
    return result;
}

}  // namespace asql

#include "dronemon/external.hpp"

#include <atomic>
#include <cerrno>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "dronemon/image_io.hpp"
#include "dronemon/text.hpp"

namespace fs = std::filesystem;

namespace dronemon {

namespace {

constexpr std::size_t kMaxBoxesPerResponse = 100000;

[[noreturn]] void violation(const std::string& what) {
    throw PluginError(PluginError::Kind::protocol_violation, what);
}

std::vector<std::string> tokenize_command(const std::string& command) {
    std::vector<std::string> args;
    std::string current;
    bool quoted = false;
    bool have = false;
    for (const char c : command) {
        if (c == '"') {
            quoted = !quoted;
            have = true;
        } else if (!quoted && (c == ' ' || c == '\t')) {
            if (have) {
                args.push_back(std::move(current));
                current.clear();
                have = false;
            }
        } else {
            current += c;
            have = true;
        }
    }
    if (have) {
        args.push_back(std::move(current));
    }
    return args;
}

std::vector<std::string_view> words(std::string_view line) {
    std::vector<std::string_view> out;
    for (const auto part : split(trim(line), ' ')) {
        if (!part.empty()) {
            out.push_back(part);
        }
    }
    return out;
}

fs::path make_scratch_dir() {
    static std::atomic<unsigned> counter{0};
    const fs::path dir = fs::temp_directory_path() /
                         ("dronemon-ext-" + std::to_string(::getpid()) + "-" +
                          std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    return dir;
}

}  // namespace

std::string format_detect_request(const fs::path& frame, const std::optional<BBox>& roi) {
    std::string line = "DETECT " + frame.string();
    if (roi) {
        line += ' ' + format_real(roi->x) + ' ' + format_real(roi->y) + ' ' + format_real(roi->w) +
                ' ' + format_real(roi->h);
    }
    return line;
}

std::size_t parse_response_header(std::string_view line) {
    const auto trimmed = trim(line);
    if (trimmed.starts_with("ERR")) {
        if (trimmed.size() == 3 || trimmed[3] == ' ') {
            throw PluginError(PluginError::Kind::remote_error,
                              "external plugin reported: " + std::string(trim(trimmed.substr(3))));
        }
    }
    const auto w = words(trimmed);
    if (w.size() != 2 || w[0] != "OK") {
        violation("expected 'OK <n>' or 'ERR <message>', got '" + std::string(trimmed) + "'");
    }
    const auto n = parse_integer(w[1]);
    if (!n || *n < 0 || static_cast<std::size_t>(*n) > kMaxBoxesPerResponse) {
        violation("bad box count in '" + std::string(trimmed) + "'");
    }
    return static_cast<std::size_t>(*n);
}

ScoredBox parse_box_line(std::string_view line, ScoreSource source) {
    const auto w = words(line);
    if (w.size() != 6 || w[0] != "BOX") {
        violation("expected 'BOX <x> <y> <w> <h> <score>', got '" + std::string(trim(line)) + "'");
    }
    double v[5];
    for (int i = 0; i < 5; ++i) {
        const auto parsed = parse_real(w[static_cast<std::size_t>(i) + 1]);
        if (!parsed) {
            violation("non-numeric field in '" + std::string(trim(line)) + "'");
        }
        v[i] = *parsed;
    }
    if (!(v[2] > 0.0 && v[3] > 0.0)) {
        violation("box with non-positive size in '" + std::string(trim(line)) + "'");
    }
    return {BBox{v[0], v[1], v[2], v[3]}, v[4], source};
}

// --- child process ---------------------------------------------------------------

ChildProcess::ChildProcess(std::string command) : command_(std::move(command)) {}

ChildProcess::~ChildProcess() { stop(); }

void ChildProcess::start() {
    if (running()) {
        return;
    }
    const auto args = tokenize_command(command_);
    if (args.empty()) {
        throw PluginError(PluginError::Kind::startup_failure, "external plugin: empty command");
    }
    std::vector<char*> argv;
    for (const auto& a : args) {
        argv.push_back(const_cast<char*>(a.c_str()));
    }
    argv.push_back(nullptr);

    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
        throw PluginError(PluginError::Kind::startup_failure,
                          std::string("socketpair: ") + std::strerror(errno));
    }
    int status_pipe[2];
    if (::pipe2(status_pipe, O_CLOEXEC) != 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw PluginError(PluginError::Kind::startup_failure,
                          std::string("pipe: ") + std::strerror(errno));
    }

    const pid_t pid = ::fork();
    if (pid < 0) {
        for (const int fd : {sv[0], sv[1], status_pipe[0], status_pipe[1]}) {
            ::close(fd);
        }
        throw PluginError(PluginError::Kind::startup_failure,
                          std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::execvp(argv[0], argv.data());
        const int err = errno;
        [[maybe_unused]] const auto n = ::write(status_pipe[1], &err, sizeof(err));
        ::_exit(127);
    }

    ::close(sv[1]);
    ::close(status_pipe[1]);
    int exec_errno = 0;
    ssize_t got = 0;
    do {
        got = ::read(status_pipe[0], &exec_errno, sizeof(exec_errno));
    } while (got < 0 && errno == EINTR);
    ::close(status_pipe[0]);
    if (got == static_cast<ssize_t>(sizeof(exec_errno))) {
        ::close(sv[0]);
        ::waitpid(pid, nullptr, 0);
        throw PluginError(PluginError::Kind::startup_failure,
                          "cannot start '" + command_ + "': " + std::strerror(exec_errno));
    }
    pid_ = pid;
    fd_ = sv[0];
    buffer_.clear();
}

void ChildProcess::stop() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ > 0) {
        // EOF on stdin is the polite shutdown request; escalate after a grace period.
        for (int i = 0; i < 20; ++i) {
            if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
    buffer_.clear();
}

void ChildProcess::write_line(std::string_view line) {
    if (fd_ < 0) {
        throw PluginError(PluginError::Kind::child_exited, "external plugin is not running");
    }
    std::string data(line);
    data += '\n';
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw PluginError(PluginError::Kind::child_exited,
                              "external plugin closed its input: " + std::string(std::strerror(errno)));
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::string ChildProcess::read_line(std::chrono::milliseconds timeout) {
    if (fd_ < 0) {
        throw PluginError(PluginError::Kind::child_exited, "external plugin is not running");
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            return line;
        }
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            throw PluginError(PluginError::Kind::timeout,
                              "external plugin did not answer within " +
                                  std::to_string(timeout.count()) + " ms");
        }
        pollfd pfd{fd_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (ready < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw PluginError(PluginError::Kind::child_exited,
                              std::string("poll: ") + std::strerror(errno));
        }
        if (ready == 0) {
            continue;
        }
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
        if (n < 0 && errno == EINTR) {
            continue;
        }
        if (n <= 0) {
            throw PluginError(PluginError::Kind::child_exited, "external plugin exited");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

// --- external detector -------------------------------------------------------------

ExternalDetector::ExternalDetector(std::string command, ExternalOptions options)
    : child_(std::move(command)), options_(options), scratch_(make_scratch_dir()) {
    try {
        child_.start();
    } catch (...) {
        std::error_code ec;
        fs::remove_all(scratch_, ec);
        throw;
    }
}

ExternalDetector::~ExternalDetector() {
    child_.stop();
    std::error_code ec;
    fs::remove_all(scratch_, ec);
}

std::vector<ScoredBox> ExternalDetector::exchange(const std::string& request, ScoreSource source) {
    if (!child_.running()) {
        child_.start();
        ++restarts_;
    }
    try {
        child_.write_line(request);
        const std::size_t n = parse_response_header(child_.read_line(options_.timeout));
        std::vector<ScoredBox> boxes;
        boxes.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            boxes.push_back(parse_box_line(child_.read_line(options_.timeout), source));
        }
        return boxes;
    } catch (const PluginError& e) {
        // The stream position is unknown after anything but a clean ERR reply.
        if (e.kind() != PluginError::Kind::remote_error) {
            child_.stop();
        }
        throw;
    }
}

std::vector<ScoredBox> ExternalDetector::detect_file(const fs::path& frame, int width, int height,
                                                     const std::optional<BBox>& roi) {
    auto boxes = exchange(format_detect_request(frame, roi), ScoreSource::detector);
    return clip_and_sort(std::move(boxes), width, height);
}

std::vector<ScoredBox> ExternalDetector::detect(const ImageBuffer& image,
                                                const std::optional<BBox>& roi) {
    const fs::path frame = scratch_ / "frame.png";
    write_png(frame, image);
    return detect_file(frame, image.width(), image.height(), roi);
}

// --- external tracker --------------------------------------------------------------

ExternalTracker::ExternalTracker(std::string command, ExternalOptions options)
    : link_(std::move(command), options) {}

BBox ExternalTracker::init(const ImageBuffer& image, const BBox& box) {
    if (!box.valid()) {
        throw PluginError(PluginError::Kind::invalid_input,
                          "external tracker: initial box must have positive size");
    }
    const fs::path frame = link_.scratch_ / "frame.png";
    write_png(frame, image);
    const auto reply =
        link_.exchange("INIT " + frame.string() + ' ' + format_real(box.x) + ' ' +
                           format_real(box.y) + ' ' + format_real(box.w) + ' ' + format_real(box.h),
                       ScoreSource::tracker);
    if (!reply.empty()) {
        violation("INIT must be answered with 'OK 0'");
    }
    box_ = box;
    return box;
}

ScoredBox ExternalTracker::update(const ImageBuffer& image) {
    if (!box_) {
        throw PluginError(PluginError::Kind::not_initialized, "external tracker: update before init");
    }
    const fs::path frame = link_.scratch_ / "frame.png";
    write_png(frame, image);
    const auto reply = link_.exchange("TRACK " + frame.string(), ScoreSource::tracker);
    if (reply.size() != 1) {
        violation("TRACK must be answered with exactly one box");
    }
    const auto clipped = clip_to_frame(reply.front().box, image.width(), image.height());
    if (!clipped) {
        return {*box_, 0.0, ScoreSource::tracker};
    }
    box_ = *clipped;
    return {*clipped, reply.front().score, ScoreSource::tracker};
}

}  // namespace dronemon

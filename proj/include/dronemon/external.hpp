#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dronemon/plugins.hpp"

namespace dronemon {

// Wire protocol, one UTF-8 record per line:
//   request   DETECT <frame_path> [<x> <y> <w> <h>]
//             INIT <frame_path> <x> <y> <w> <h>       (trackers)
//             TRACK <frame_path>                      (trackers)
//   response  OK <n>   followed by n lines  BOX <x> <y> <w> <h> <score>
//             ERR <message>

std::string format_detect_request(const std::filesystem::path& frame,
                                  const std::optional<BBox>& roi);

/// Parses the `OK <n>` / `ERR <msg>` header line. Returns the box count;
/// throws PluginError (remote_error for ERR, protocol_violation otherwise).
std::size_t parse_response_header(std::string_view line);

/// Parses one `BOX x y w h score` line; throws protocol_violation.
ScoredBox parse_box_line(std::string_view line, ScoreSource source);

/// Line-oriented child process over a socket pair bound to its stdin/stdout.
/// The command is split on whitespace (double quotes group) and exec'd
/// directly, so a missing executable is reported at start().
class ChildProcess {
public:
    explicit ChildProcess(std::string command);
    ~ChildProcess();

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    void start();
    void stop();
    bool running() const { return pid_ > 0; }

    void write_line(std::string_view line);
    /// Throws PluginError timeout / child_exited.
    std::string read_line(std::chrono::milliseconds timeout);

    const std::string& command() const { return command_; }

private:
    std::string command_;
    int pid_ = -1;
    int fd_ = -1;
    std::string buffer_;
};

struct ExternalOptions {
    std::chrono::milliseconds timeout{10000};
};

/// Bridges to an out-of-process detector. Every failure surfaces as a
/// PluginError of a distinct kind; after a timeout or protocol violation the
/// child is killed and restarted on the next request.
class ExternalDetector final : public Detector {
public:
    explicit ExternalDetector(std::string command, ExternalOptions options = {});
    ~ExternalDetector() override;

    std::vector<ScoredBox> detect(const ImageBuffer& image,
                                  const std::optional<BBox>& roi) override;

    /// Same as detect() for a frame already on disk.
    std::vector<ScoredBox> detect_file(const std::filesystem::path& frame, int width, int height,
                                       const std::optional<BBox>& roi);

    std::size_t restarts() const { return restarts_; }

private:
    std::vector<ScoredBox> exchange(const std::string& request, ScoreSource source);

    ChildProcess child_;
    ExternalOptions options_;
    std::filesystem::path scratch_;
    std::size_t restarts_ = 0;

    friend class ExternalTracker;
};

/// Tracker over the same wire protocol (INIT / TRACK requests).
class ExternalTracker final : public Tracker {
public:
    explicit ExternalTracker(std::string command, ExternalOptions options = {});

    BBox init(const ImageBuffer& image, const BBox& box) override;
    ScoredBox update(const ImageBuffer& image) override;

private:
    ExternalDetector link_;
    std::optional<BBox> box_;
};

}  // namespace dronemon

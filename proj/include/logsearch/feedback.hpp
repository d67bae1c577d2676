#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <string>
#include <vector>

#include "logsearch/eval.hpp"

namespace logsearch {

/// Append-only JSON-lines feedback log. Every append is written and fsync'ed
/// before it returns; the log is replayed on construction. Appends are
/// serialized through one mutex and stamped with strictly increasing
/// millisecond timestamps, so last-write-wins by timestamp equals log order.
class FeedbackStore {
  public:
    explicit FeedbackStore(std::filesystem::path path) : path_(std::move(path)) {
        if (path_.has_parent_path()) {
            std::filesystem::create_directories(path_.parent_path());
        }
        replay();
        fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (fd_ < 0) {
            throw Error("cannot open feedback log '" + path_.string() + "': " + std::strerror(errno));
        }
        if (needs_newline_ && ::write(fd_, "\n", 1) != 1) {
            throw Error("cannot write feedback log '" + path_.string() + "'");
        }
    }

    FeedbackStore(const FeedbackStore&) = delete;
    FeedbackStore& operator=(const FeedbackStore&) = delete;

    ~FeedbackStore() {
        if (fd_ >= 0) {
            ::fsync(fd_);
            ::close(fd_);
        }
    }

    /// Stamps, persists and returns the stored event.
    FeedbackEvent append(FeedbackEvent event) {
        std::lock_guard lock(mutex_);
        auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
        event.timestamp = std::max<std::int64_t>(now, last_timestamp_ + 1);
        std::string line = to_json(event).dump() + "\n";
        const char* p = line.data();
        std::size_t left = line.size();
        while (left > 0) {
            auto n = ::write(fd_, p, left);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw Error("feedback write failed: " + std::string(std::strerror(errno)));
            }
            p += n;
            left -= static_cast<std::size_t>(n);
        }
        if (::fsync(fd_) != 0) {
            throw Error("feedback fsync failed: " + std::string(std::strerror(errno)));
        }
        last_timestamp_ = event.timestamp;
        events_.push_back(event);
        return event;
    }

    /// Every event in log order.
    std::vector<FeedbackEvent> events() const {
        std::lock_guard lock(mutex_);
        return events_;
    }

    /// Latest event per (assessor, query, record, level).
    std::vector<FeedbackEvent> current() const { return dedupe_events(events()); }

    const std::filesystem::path& path() const { return path_; }

  private:
    void replay() {
        std::ifstream in(path_, std::ios::binary);
        if (!in) {
            return;
        }
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        std::size_t pos = 0;
        std::size_t row = 0;
        while (pos < content.size()) {
            auto nl = content.find('\n', pos);
            bool last = nl == std::string::npos;
            std::string_view line(content.data() + pos, (last ? content.size() : nl) - pos);
            ++row;
            if (!text::trim(line).empty()) {
                auto j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded()) {
                    // A torn final line from a crash mid-write is cut off.
                    if (last) {
                        std::filesystem::resize_file(path_, pos);
                        break;
                    }
                    throw FormatError("corrupt feedback log '" + path_.string() + "' at line " + std::to_string(row));
                }
                auto e = feedback_from_json(j);
                last_timestamp_ = std::max(last_timestamp_, e.timestamp);
                events_.push_back(std::move(e));
            }
            if (last) {
                needs_newline_ = true;
                break;
            }
            pos = nl + 1;
        }
    }

    std::filesystem::path path_;
    int fd_ = -1;
    bool needs_newline_ = false;
    mutable std::mutex mutex_;
    std::vector<FeedbackEvent> events_;
    std::int64_t last_timestamp_ = 0;
};

}  // namespace logsearch

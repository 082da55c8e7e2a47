#pragma once

// Fusion server: one Session per connection turns client lines into reply
// lines; TcpServer moves those lines over sockets.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mmfuse/fusion.hpp"
#include "mmfuse/protocol.hpp"
#include "mmfuse/robot.hpp"

namespace mmfuse::wire {

enum class ErrCode : int {
    BadRequest = 400,        ///< malformed line, unknown verb, missing HELLO
    NotAllowed = 405,        ///< verb only the server may send
    OutOfOrder = 409,        ///< seq or timestamp went backwards
    VersionUnsupported = 505,
};

struct TranscriptLine {
    bool from_client = false;
    std::string text; ///< without the trailing '\n'

    friend bool operator==(const TranscriptLine&, const TranscriptLine&) = default;
};

struct SessionOptions {
    FusionConfig fusion;
    std::uint64_t seed = 0;
    /// The server's own gesture source: time-ordered band outputs merged with
    /// client events (gesture first on equal timestamps).
    std::vector<ModalityEvent> local_gestures;
};

/// Protocol state for one connection. Not thread-safe; one per connection.
class Session {
public:
    explicit Session(SessionOptions opt)
        : engine_(std::move(opt.fusion), opt.seed), local_(std::move(opt.local_gestures)) {
        std::stable_sort(local_.begin(), local_.end(),
                         [](const ModalityEvent& a, const ModalityEvent& b) { return a.t_ms < b.t_ms; });
    }

    /// Handles one client line and returns the server's reply lines.
    std::vector<std::string> on_line(std::string_view line) {
        std::vector<std::string> out;
        if (closed_) return out;
        if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
        transcript_.push_back({true, std::string(line)});

        Message msg;
        try {
            msg = decode(line);
        } catch (const ParseError& e) {
            fail(out, ErrCode::BadRequest, e.what());
            return out;
        }

        if (!greeted_) {
            const auto* hello = std::get_if<Hello>(&msg);
            if (!hello) {
                fail(out, ErrCode::BadRequest, "expected HELLO " + std::string(kProtocolVersion));
            } else if (hello->version != kProtocolVersion) {
                fail(out, ErrCode::VersionUnsupported, "unsupported version " + hello->version);
            } else {
                greeted_ = true;
                send(out, Hello{});
            }
            return out;
        }

        if (const auto* evt = std::get_if<Evt>(&msg)) {
            handle_event(*evt, out);
        } else if (std::holds_alternative<Bye>(msg)) {
            drain_local(std::nullopt, out);
            for (auto& r : engine_.flush()) emit(r, out);
            send(out, Bye{});
            closed_ = true;
        } else {
            fail(out, ErrCode::NotAllowed, "clients may only send EVT and BYE");
        }
        return out;
    }

    /// Connection dropped without BYE: settle what is pending, reply nothing.
    void abandon() {
        if (closed_) return;
        std::vector<std::string> sink;
        drain_local(std::nullopt, sink);
        for (auto& r : engine_.flush()) emit(r, sink);
        closed_ = true;
    }

    bool closed() const { return closed_; }
    const std::vector<TranscriptLine>& transcript() const { return transcript_; }
    const ArmState& arm() const { return arm_; }
    std::size_t fusion_errors() const { return fusion_errors_; }

    /// Only the FUSED lines sent so far, in order.
    std::vector<std::string> fused_lines() const {
        std::vector<std::string> out;
        for (const auto& l : transcript_) {
            if (!l.from_client && l.text.rfind("FUSED ", 0) == 0) out.push_back(l.text);
        }
        return out;
    }

private:
    void handle_event(const Evt& evt, std::vector<std::string>& out) {
        if (last_seq_ && evt.seq <= *last_seq_) {
            fail(out, ErrCode::OutOfOrder, "seq " + std::to_string(evt.seq) + " does not increase");
            return;
        }
        if (evt.t_ms < engine_.now()) {
            fail(out, ErrCode::OutOfOrder, "timestamp " + std::to_string(evt.t_ms) + " goes backwards");
            return;
        }
        last_seq_ = evt.seq;
        send(out, Ack{evt.seq});
        drain_local(evt.t_ms, out);
        for (auto& r : engine_.submit(to_modality_event(evt))) emit(r, out);
    }

    /// Feeds local gestures up to and including `until` (all if nullopt).
    void drain_local(std::optional<TimeMs> until, std::vector<std::string>& out) {
        while (next_local_ < local_.size() && (!until || local_[next_local_].t_ms <= *until)) {
            const auto& ev = local_[next_local_++];
            if (ev.t_ms < engine_.now()) continue;
            for (auto& r : engine_.submit(ev)) emit(r, out);
        }
    }

    void emit(const StepResult& r, std::vector<std::string>& out) {
        if (r.error) ++fusion_errors_;
        if (!r.command) return;
        const auto& c = *r.command;
        arm_ = apply_pin_high(std::move(arm_), c.action.pin, c.t_ms);
        send(out, to_wire(c));
    }

    void send(std::vector<std::string>& out, const Message& m) {
        std::string line = encode(m);
        transcript_.push_back({false, line.substr(0, line.size() - 1)});
        out.push_back(std::move(line));
    }

    void fail(std::vector<std::string>& out, ErrCode code, std::string message) {
        send(out, Err{static_cast<int>(code), std::move(message)});
        closed_ = true;
    }

    FusionEngine engine_;
    std::vector<ModalityEvent> local_;
    std::size_t next_local_ = 0;
    ArmState arm_;
    std::vector<TranscriptLine> transcript_;
    std::optional<std::uint64_t> last_seq_;
    std::size_t fusion_errors_ = 0;
    bool greeted_ = false;
    bool closed_ = false;
};

/// Port from the command line, else MMFUSE_PORT, else 7207.
inline std::uint16_t resolve_port(std::optional<int> cli_port) {
    auto check = [](long v, const std::string& where) {
        if (v < 0 || v > 65535) throw InvalidInput(where + " port out of range: " + std::to_string(v));
        return static_cast<std::uint16_t>(v);
    };
    if (cli_port) return check(*cli_port, "--port");
    if (const char* env = std::getenv("MMFUSE_PORT"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0') throw InvalidInput("MMFUSE_PORT is not a number: " + std::string(env));
        return check(v, "MMFUSE_PORT");
    }
    return kDefaultPort;
}

struct ServerOptions {
    std::uint16_t port = kDefaultPort; ///< 0 picks an ephemeral port
    FusionConfig fusion;
    std::uint64_t base_seed = 0;
    std::vector<ModalityEvent> local_gestures;
    std::size_t max_line_bytes = 4096;
};

/// Blocking TCP front end, one thread per connection. Connection k (from 0)
/// gets session seed base_seed ^ k.
class TcpServer {
public:
    explicit TcpServer(ServerOptions opt) : opt_(std::move(opt)) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
        const int yes = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(opt_.port);
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
            const std::string why = std::strerror(errno);
            ::close(listen_fd_);
            throw IoError("cannot listen on port " + std::to_string(opt_.port) + ": " + why);
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
    }

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    ~TcpServer() {
        stop();
        for (auto& t : workers_) {
            if (t.joinable()) t.join();
        }
    }

    std::uint16_t port() const { return port_; }

    /// Accepts connections until stop().
    void run() {
        while (!stopping_) {
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                if (stopping_) break;
                if (errno == EINTR) continue;
                break;
            }
            SessionOptions so{opt_.fusion, derive_seed(opt_.base_seed, next_connection_++), opt_.local_gestures};
            std::lock_guard lock(mutex_);
            workers_.emplace_back([this, fd, so = std::move(so)]() mutable { serve_connection(fd, std::move(so)); });
        }
    }

    void stop() {
        if (stopping_.exchange(true)) return;
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
    }

private:
    void serve_connection(int fd, SessionOptions so) {
        Session session(std::move(so));
        std::string buffer;
        char chunk[1024];
        bool open = true;
        while (open && !session.closed()) {
            const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
            if (n <= 0) break;
            buffer.append(chunk, static_cast<std::size_t>(n));
            std::size_t nl;
            while (!session.closed() && (nl = buffer.find('\n')) != std::string::npos) {
                const std::string line = buffer.substr(0, nl + 1);
                buffer.erase(0, nl + 1);
                open = write_all(fd, session.on_line(line));
            }
            if (!session.closed() && buffer.size() > opt_.max_line_bytes) {
                write_all(fd, {encode(Err{static_cast<int>(ErrCode::BadRequest), "line too long"})});
                break;
            }
        }
        session.abandon();
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
    }

    static bool write_all(int fd, const std::vector<std::string>& lines) {
        for (const auto& l : lines) {
            std::size_t sent = 0;
            while (sent < l.size()) {
                const ssize_t n = ::send(fd, l.data() + sent, l.size() - sent, MSG_NOSIGNAL);
                if (n <= 0) return false;
                sent += static_cast<std::size_t>(n);
            }
        }
        return true;
    }

    ServerOptions opt_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::uint64_t next_connection_ = 0;
    std::mutex mutex_;
    std::vector<std::thread> workers_;
};

} // namespace mmfuse::wire

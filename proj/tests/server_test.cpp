#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "mmfuse/server.hpp"

using namespace mmfuse;
using namespace mmfuse::wire;

namespace {

std::vector<std::string> run_session(Session& s, const std::vector<std::string>& lines) {
    std::vector<std::string> out;
    for (const auto& l : lines) {
        for (auto& r : s.on_line(l)) out.push_back(std::move(r));
    }
    return out;
}

/// Sends everything, half-closes, and reads until the server closes.
std::string tcp_exchange(std::uint16_t port, const std::string& payload) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        return "<connect failed>";
    }
    ::send(fd, payload.data(), payload.size(), MSG_NOSIGNAL);
    ::shutdown(fd, SHUT_WR);
    std::string got;
    char buf[512];
    ssize_t n;
    while ((n = ::recv(fd, buf, sizeof buf, 0)) > 0) got.append(buf, static_cast<std::size_t>(n));
    ::close(fd);
    return got;
}

} // namespace

TEST(Session, HelloFistGivesOneFused) {
    Session s({});
    const auto out = run_session(s, {"HELLO mmfuse/1\n", "EVT GESTURE 1 0 FIST\n", "BYE\n"});
    EXPECT_EQ(out, (std::vector<std::string>{"HELLO mmfuse/1\n", "ACK 1\n", "FUSED 0 PIN3 GESTURE\n", "BYE\n"}));
    EXPECT_EQ(s.fused_lines(), std::vector<std::string>{"FUSED 0 PIN3 GESTURE"});
    EXPECT_EQ(s.arm().angle(Servo::Base), 95);
    EXPECT_TRUE(s.closed());
}

TEST(Session, MissThenSpeechFallback) {
    Session s({});
    const auto out = run_session(s, {"HELLO mmfuse/1", "EVT GESTURE 1 0 NONE", "EVT SPEECH 2 800 \"move down\"", "BYE"});
    EXPECT_EQ(out, (std::vector<std::string>{"HELLO mmfuse/1\n", "ACK 1\n", "ACK 2\n", "FUSED 800 PIN3 SPEECH\n", "BYE\n"}));
}

TEST(Session, ExpiredWindowReportedAsNothing) {
    Session s({});
    const auto out = run_session(s, {"HELLO mmfuse/1", "EVT GESTURE 1 0 NONE", "BYE"});
    EXPECT_EQ(out, (std::vector<std::string>{"HELLO mmfuse/1\n", "ACK 1\n", "BYE\n"}));
    EXPECT_EQ(s.fusion_errors(), 1u);
}

TEST(Session, MissingHelloClosesWith400) {
    Session s({});
    const auto out = run_session(s, {"EVT GESTURE 1 0 FIST", "HELLO mmfuse/1"});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].rfind("ERR 400 ", 0), 0u);
    EXPECT_TRUE(s.closed());
    EXPECT_TRUE(s.fused_lines().empty());
}

TEST(Session, ErrorCodes) {
    {
        Session s({});
        const auto out = run_session(s, {"HELLO mmfuse/2"});
        EXPECT_EQ(out[0].rfind("ERR 505 ", 0), 0u);
    }
    {
        Session s({});
        const auto out = run_session(s, {"HELLO mmfuse/1", "FUSED 0 PIN3 GESTURE"});
        EXPECT_EQ(out.back().rfind("ERR 405 ", 0), 0u);
    }
    {
        Session s({});
        const auto out = run_session(s, {"HELLO mmfuse/1", "EVT GESTURE 2 0 FIST", "EVT GESTURE 2 5 FIST"});
        EXPECT_EQ(out.back().rfind("ERR 409 ", 0), 0u);
        EXPECT_TRUE(s.closed());
    }
    {
        Session s({});
        const auto out = run_session(s, {"HELLO mmfuse/1", "EVT GESTURE 1 50 FIST", "EVT GESTURE 2 49 FIST"});
        EXPECT_EQ(out.back().rfind("ERR 409 ", 0), 0u);
    }
    {
        Session s({});
        const auto out = run_session(s, {"HELLO mmfuse/1", "EVT GESTURE 1 0 PUNCH"});
        EXPECT_EQ(out.back().rfind("ERR 400 ", 0), 0u);
    }
}

TEST(Session, AckPerEvent) {
    Session s({});
    std::vector<std::string> lines = {"HELLO mmfuse/1"};
    const char* tokens[] = {"FIST", "NONE", "WAVE_IN", "DOUBLE_TAP"};
    std::uint64_t seq = 0;
    for (int i = 0; i < 40; ++i) {
        lines.push_back(encode(Evt{Channel::Gesture, ++seq, i * 700, tokens[i % 4]}));
        if (i % 3 == 0) lines.push_back(encode(Evt{Channel::Speech, ++seq, i * 700 + 1, "move up"}));
    }
    lines.push_back("BYE");
    const auto out = run_session(s, lines);
    std::size_t evts = 0, acks = 0;
    for (const auto& l : lines) evts += l.rfind("EVT ", 0) == 0;
    for (const auto& l : out) acks += l.rfind("ACK ", 0) == 0;
    EXPECT_EQ(acks, evts);
    EXPECT_EQ(out.back(), "BYE\n");
}

TEST(Session, LocalGesturesMergeBeforeClientEvents) {
    SessionOptions opt;
    opt.local_gestures = {ModalityEvent::gesture(100, GestureOutcome::missed(Gesture::WaveIn))};
    Session s(opt);
    const auto out = run_session(s, {"HELLO mmfuse/1", "EVT SPEECH 1 100 \"move left\"", "BYE"});
    EXPECT_EQ(out, (std::vector<std::string>{"HELLO mmfuse/1\n", "ACK 1\n", "FUSED 100 PIN4 SPEECH\n", "BYE\n"}));
}

TEST(Session, ReplayIsByteIdentical) {
    std::vector<std::string> lines = {"HELLO mmfuse/1"};
    for (int i = 0; i < 30; ++i) {
        lines.push_back(encode(Evt{Channel::Speech, static_cast<std::uint64_t>(2 * i + 1), i * 3000, "move gripper"}));
        lines.push_back(encode(Evt{Channel::Gesture, static_cast<std::uint64_t>(2 * i + 2), i * 3000 + 10, i % 2 ? "NONE" : "WAVE_OUT"}));
    }
    lines.push_back("BYE");
    SessionOptions opt;
    opt.seed = 99;
    Session a(opt), b(opt);
    EXPECT_EQ(run_session(a, lines), run_session(b, lines));
    EXPECT_EQ(a.transcript(), b.transcript());
}

TEST(ResolvePort, Precedence) {
    ::unsetenv("MMFUSE_PORT");
    EXPECT_EQ(resolve_port(std::nullopt), 7207);
    ::setenv("MMFUSE_PORT", "9100", 1);
    EXPECT_EQ(resolve_port(std::nullopt), 9100);
    EXPECT_EQ(resolve_port(8000), 8000);
    ::setenv("MMFUSE_PORT", "nine", 1);
    EXPECT_THROW(resolve_port(std::nullopt), InvalidInput);
    ::setenv("MMFUSE_PORT", "70000", 1);
    EXPECT_THROW(resolve_port(std::nullopt), InvalidInput);
    EXPECT_THROW(resolve_port(-1), InvalidInput);
    ::unsetenv("MMFUSE_PORT");
}

TEST(TcpServerTest, ConcurrentClientsHaveIndependentTranscripts) {
    ServerOptions opt;
    opt.port = 0;
    TcpServer server(opt);
    std::thread runner([&] { server.run(); });

    const std::string a = "HELLO mmfuse/1\nEVT GESTURE 1 0 FIST\nBYE\n";
    const std::string b = "HELLO mmfuse/1\nEVT GESTURE 1 0 NONE\nEVT SPEECH 2 500 \"move gripper\"\nBYE\n";
    std::string got_a, got_b;
    std::thread ta([&] { got_a = tcp_exchange(server.port(), a); });
    std::thread tb([&] { got_b = tcp_exchange(server.port(), b); });
    ta.join();
    tb.join();
    const std::string bad = tcp_exchange(server.port(), "EVT GESTURE 1 0 FIST\n");
    server.stop();
    runner.join();

    EXPECT_EQ(got_a, "HELLO mmfuse/1\nACK 1\nFUSED 0 PIN3 GESTURE\nBYE\n");
    EXPECT_EQ(got_b, "HELLO mmfuse/1\nACK 1\nACK 2\nFUSED 500 PIN10 SPEECH\nBYE\n");
    EXPECT_EQ(bad.rfind("ERR 400 ", 0), 0u);
}

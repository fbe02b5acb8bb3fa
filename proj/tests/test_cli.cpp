#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "commands.hpp"
#include "supertask/csv.hpp"
#include "supertask/logstore.hpp"
#include "supertask/server.hpp"

using namespace supertask;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("supertask_cli_" + std::to_string(::getpid()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
    ::setenv("SUPERTASK_OUT", root_.c_str(), 1);
  }
  void TearDown() override { fs::remove_all(root_); }
  fs::path root_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesValidLogs) {
  const auto r = run_cli({"simulate", "--agent", "hier_q", "--seed", "5", "--runs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dir = root_ / "simulate" / "5";
  for (const char* f : {"run_0000.jsonl", "run_0001.jsonl"}) {
    const auto events = read_log(dir / f);
    const auto rep = replay(events);
    EXPECT_TRUE(rep.complete);
    EXPECT_EQ(rep.records.size(), 444u);
  }
  const auto summary = csv_rows(slurp(dir / "summary.csv"));
  ASSERT_EQ(summary.size(), 3u);
  EXPECT_EQ(summary[0][0], "run");
  EXPECT_NE(r.out.find("run_0001.jsonl"), std::string::npos);
}

TEST_F(CliTest, SimulateIsReproducible) {
  ASSERT_EQ(run_cli({"simulate", "--agent", "partner_belief", "--mission", "3", "--seed", "9", "--out",
                 (root_ / "a").string()})
                .code,
            0);
  ASSERT_EQ(run_cli({"simulate", "--agent", "partner_belief", "--mission", "3", "--seed", "9", "--out",
                 (root_ / "b").string()})
                .code,
            0);
  for (const char* f : {"run_0000.jsonl", "summary.csv"}) {
    EXPECT_EQ(slurp(root_ / "a" / f), slurp(root_ / "b" / f)) << f;
  }
  ASSERT_EQ(run_cli({"simulate", "--agent", "partner_belief", "--mission", "3", "--seed", "10", "--out",
                 (root_ / "c").string()})
                .code,
            0);
  EXPECT_NE(slurp(root_ / "a" / "run_0000.jsonl"), slurp(root_ / "c" / "run_0000.jsonl"));
}

TEST_F(CliTest, UsageErrors) {
  auto r = run_cli({"simulate", "--agent", "wizard"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("hier_q"), std::string::npos);  // lists the known agents
  EXPECT_EQ(run_cli({"simulate", "--agent", "hier_q", "--params", "alpha=7"}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--agent", "hier_q", "--params", "gamma=1"}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--agent", "hier_q", "--mission", "5"}).code, 2);
  EXPECT_EQ(run_cli({"simulate"}).code, 2);
  EXPECT_EQ(run_cli({"dance"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({"fit", "--log", "x", "--model", "gp"}).code, 2);
}

TEST_F(CliTest, AnalyzeSwitchReport) {
  ASSERT_EQ(run_cli({"simulate", "--agent", "instructed_ddm", "--mission", "1", "--seed", "1", "--runs", "3"}).code, 0);
  const auto dir = root_ / "simulate" / "1";
  auto r = run_cli({"analyze", "--log", (dir / "run_0000.jsonl").string(), "--report", "switch"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("d_rt_ms"), std::string::npos);
  EXPECT_NE(r.out.find("n_switch"), std::string::npos);

  r = run_cli({"analyze", "--log", dir.string(), "--report", "switch", "--csv", (root_ / "csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("sessions 3"), std::string::npos);
  const auto sw = csv_rows(slurp(root_ / "csv" / "switch.csv"));
  EXPECT_EQ(sw.size(), 4u);
  EXPECT_EQ(csv_rows(slurp(root_ / "csv" / "trials.csv")).size(), 1u + 3u * 144u);
}

TEST_F(CliTest, AnalyzeCorruptLogNamesLine) {
  ASSERT_EQ(run_cli({"simulate", "--agent", "random", "--mission", "1", "--seed", "2"}).code, 0);
  auto lines = read_lines(root_ / "simulate" / "2" / "run_0000.jsonl");
  lines.erase(lines.begin() + 9);  // line 10 now has seq 10
  write_lines(root_ / "bad.jsonl", lines);
  const auto r = run_cli({"analyze", "--log", (root_ / "bad.jsonl").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.jsonl:10"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("seq gap"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"analyze", "--log", (root_ / "missing.jsonl").string()}).code, 1);
}

TEST_F(CliTest, FitFlagsThinSessions) {
  // mission 1 has no LEARNED_RULE trials: a flagged row, not a crash
  ASSERT_EQ(run_cli({"simulate", "--agent", "random", "--mission", "1", "--seed", "3"}).code, 0);
  const auto log = (root_ / "simulate" / "3" / "run_0000.jsonl").string();
  auto r = run_cli({"fit", "--log", log, "--model", "qlearn", "--out", (root_ / "fits.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("no_learned_rule_trials"), std::string::npos);
  EXPECT_EQ(r.out.find("loglik"), std::string::npos);
  const auto rows = csv_rows(slurp(root_ / "fits.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][9], "no_learned_rule_trials");

  r = run_cli({"fit", "--log", log, "--model", "ez"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("v_switch="), std::string::npos);
}

TEST_F(CliTest, FitQlearnOnLearningData) {
  ASSERT_EQ(run_cli({"simulate", "--agent", "hier_q", "--mission", "2", "--seed", "4"}).code, 0);
  const auto r = run_cli({"fit", "--log", (root_ / "simulate" / "4").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("alpha="), std::string::npos);
  EXPECT_NE(r.out.find("loglik="), std::string::npos);
}

TEST_F(CliTest, RecoverSingleReplicate) {
  const auto args = std::vector<std::string>{"recover", "--grid", "alpha=0.3;beta=4", "--trials", "80", "--reps",
                                             "1", "--seed", "6"};
  auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto path = root_ / "recover" / "6" / "recovery.csv";
  const auto first = slurp(path);
  EXPECT_NE(first.find("sd_undefined"), std::string::npos);
  r = run_cli(args);
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(path), first);
  EXPECT_EQ(run_cli({"recover", "--model", "ez"}).code, 2);
  EXPECT_EQ(run_cli({"recover", "--grid", "alpha=x"}).code, 2);
}

TEST_F(CliTest, BenchmarkLearnerBeatsRandom) {
  const auto r = run_cli({"benchmark", "--agents", "random,hier_q", "--missions", "2", "--runs", "10", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(slurp(root_ / "benchmark" / "1" / "benchmark.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "agent");
  EXPECT_EQ(rows[1][0], "random");
  EXPECT_EQ(rows[2][0], "hier_q");
  EXPECT_GT(std::stod(rows[2][3]), std::stod(rows[1][3]));  // mean score
  EXPECT_GT(std::stod(rows[2][4]), std::stod(rows[1][4]));  // accuracy
}

TEST_F(CliTest, BenchmarkSingleAgentWithParams) {
  const auto r = run_cli({"benchmark", "--agents", "partner_belief:kappa=15,p_self=0.8", "--missions", "3", "--runs", "2",
                      "--out", (root_ / "b.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(root_ / "b.csv");
  const auto rows = csv_rows(text);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NE(text.find("kappa=15"), std::string::npos);
  EXPECT_EQ(run_cli({"benchmark", "--agents", "oracle"}).code, 2);
}

namespace {

struct Child {
  pid_t pid = -1;
  int out_fd = -1;
  std::string buf;

  // Reads stdout until a line starting with prefix appears.
  std::optional<std::string> wait_line(const std::string& prefix, int timeout_s = 20) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(timeout_s);
    while (std::chrono::steady_clock::now() < deadline) {
      std::size_t pos = 0;
      while (true) {
        const auto nl = buf.find('\n', pos);
        if (nl == std::string::npos) break;
        const auto line = buf.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.rfind(prefix, 0) == 0) return line;
      }
      char tmp[512];
      const auto n = ::read(out_fd, tmp, sizeof tmp);
      if (n <= 0) return std::nullopt;
      buf.append(tmp, static_cast<std::size_t>(n));
    }
    return std::nullopt;
  }

  int wait_exit() {
    int status = 0;
    ::waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
};

Child spawn(const std::vector<std::string>& args) {
  int fds[2];
  if (::pipe(fds) != 0) throw std::runtime_error("pipe");
  Child c;
  c.pid = ::fork();
  if (c.pid == 0) {
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    std::vector<char*> argv{const_cast<char*>(SUPERTASK_BIN)};
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execv(SUPERTASK_BIN, argv.data());
    ::_exit(127);
  }
  ::close(fds[1]);
  c.out_fd = fds[0];
  return c;
}

std::string roundtrip(std::uint16_t port, const std::string& line) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    return {};
  }
  const std::string data = line + "\n";
  if (::write(fd, data.data(), data.size()) != static_cast<ssize_t>(data.size())) {
    ::close(fd);
    return {};
  }
  std::string reply;
  char c;
  while (::read(fd, &c, 1) == 1 && c != '\n') reply += c;
  ::close(fd);
  return reply;
}

}  // namespace

TEST_F(CliTest, ServeRoundTripAndSigint) {
  auto child = spawn({"serve", "--port", "0", "--log-dir", (root_ / "logs").string()});
  const auto line = child.wait_line("listening on ");
  ASSERT_TRUE(line) << "no listening line";
  const auto port = static_cast<std::uint16_t>(std::stoi(line->substr(line->rfind(':') + 1)));
  const auto reply = decode(roundtrip(port, encode({WireKind::kHello, "", -1, Json::object()})));
  EXPECT_EQ(reply.kind, WireKind::kHello);
  EXPECT_EQ(reply.body.at("protocol_version"), kProtocolVersion);

  ::kill(child.pid, SIGINT);
  EXPECT_TRUE(child.wait_line("stopped"));
  EXPECT_EQ(child.wait_exit(), 0);
  ::close(child.out_fd);
}

TEST_F(CliTest, ServeOccupiedPortFails) {
  SessionService svc;
  EndpointConfig cfg;
  cfg.port = 0;
  Server holder(svc, cfg);
  auto child = spawn({"serve", "--port", std::to_string(holder.port()), "--log-dir", (root_ / "logs").string()});
  EXPECT_NE(child.wait_exit(), 0);
  ::close(child.out_fd);
}

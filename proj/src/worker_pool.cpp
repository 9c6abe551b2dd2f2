#include "gennet/worker_pool.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <regex>
#include <thread>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gennet/random.hpp"

namespace gennet {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string errno_text(const char* what) { return fmt::format("{}: {}", what, std::strerror(errno)); }

void write_all(int fd, std::string_view data, bool socket) {
  while (!data.empty()) {
    const ssize_t n = socket ? ::send(fd, data.data(), data.size(), MSG_NOSIGNAL)
                             : ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("write to worker failed"));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::optional<std::string> take_line(std::string& buffer) {
  const auto nl = buffer.find('\n');
  if (nl == std::string::npos) return std::nullopt;
  std::string line = buffer.substr(0, nl);
  buffer.erase(0, nl + 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::optional<std::string> read_line_fd(int fd, std::string& buffer, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (auto line = take_line(buffer)) return line;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) return std::nullopt;

    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<std::int64_t>(left.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("poll failed"));
    }
    if (ready == 0) return std::nullopt;

    char chunk[4096];
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw TransportError(errno_text("read from worker failed"));
    }
    if (n == 0) throw TransportError("worker closed the connection");
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

// ---------------------------------------------------------------------------

SubprocessChannel::SubprocessChannel(std::string command) : command_(std::move(command)) { ignore_sigpipe(); }

SubprocessChannel::~SubprocessChannel() {
  if (pid_ < 0) return;
  // EOF on stdin is the worker's shutdown signal; give it a moment before killing.
  close_fd(to_child_);
  for (int i = 0; i < 100; ++i) {
    if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
      pid_ = -1;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  reset();
}

void SubprocessChannel::spawn() {
  int in[2];
  int out[2];
  if (::pipe2(in, O_CLOEXEC) != 0) throw TransportError(errno_text("pipe"));
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    throw TransportError(errno_text("pipe"));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in[0], in[1], out[0], out[1]}) ::close(fd);
    throw TransportError(errno_text("fork"));
  }
  if (pid == 0) {
    // Own process group, so a reset also reaches whatever `sh -c` started.
    ::setpgid(0, 0);
    ::dup2(in[0], STDIN_FILENO);
    ::dup2(out[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(in[0]);
  ::close(out[1]);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
  buffer_.clear();
  spdlog::debug("spawned worker pid {}: {}", pid_, command_);
}

void SubprocessChannel::send_line(std::string_view line) {
  if (pid_ < 0) spawn();
  std::string framed(line);
  framed += '\n';
  write_all(to_child_, framed, false);
}

std::optional<std::string> SubprocessChannel::read_line(std::chrono::milliseconds timeout) {
  if (pid_ < 0) throw TransportError("worker not running");
  return read_line_fd(from_child_, buffer_, timeout);
}

void SubprocessChannel::reset() {
  close_fd(to_child_);
  close_fd(from_child_);
  if (pid_ > 0) {
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
  buffer_.clear();
}

// ---------------------------------------------------------------------------

TcpChannel::TcpChannel(std::string host, std::uint16_t port) : host_(std::move(host)), port_(port) {
  ignore_sigpipe();
}

TcpChannel::~TcpChannel() { reset(); }

void TcpChannel::connect_now() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(port_);
  if (const int rc = ::getaddrinfo(host_.c_str(), port.c_str(), &hints, &found); rc != 0)
    throw TransportError(fmt::format("cannot resolve {}: {}", host_, ::gai_strerror(rc)));

  int fd = -1;
  for (addrinfo* ai = found; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw TransportError(fmt::format("cannot connect to {}", describe()));
  fd_ = fd;
  buffer_.clear();
}

void TcpChannel::send_line(std::string_view line) {
  if (fd_ < 0) connect_now();
  std::string framed(line);
  framed += '\n';
  write_all(fd_, framed, true);
}

std::optional<std::string> TcpChannel::read_line(std::chrono::milliseconds timeout) {
  if (fd_ < 0) throw TransportError("not connected");
  return read_line_fd(fd_, buffer_, timeout);
}

void TcpChannel::reset() {
  close_fd(fd_);
  buffer_.clear();
}

std::unique_ptr<WorkerChannel> make_channel(const std::string& endpoint) {
  static const std::regex address(R"(^(?:tcp://)?([A-Za-z0-9_.\-]+|\[[0-9A-Fa-f:]+\]):([0-9]{1,5})$)");
  std::smatch m;
  if (std::regex_match(endpoint, m, address)) {
    std::string host = m[1].str();
    if (host.front() == '[') host = host.substr(1, host.size() - 2);
    const int port = std::stoi(m[2].str());
    if (port > 0 && port < 65536) return std::make_unique<TcpChannel>(host, static_cast<std::uint16_t>(port));
  }
  return std::make_unique<SubprocessChannel>(endpoint);
}

// ---------------------------------------------------------------------------

EvaluationResult dispatch(const EvaluationRequest& request, WorkerChannel& worker,
                          std::chrono::milliseconds timeout) {
  worker.send_line(serialize_request(request));
  auto line = worker.read_line(timeout);
  if (!line)
    throw TransportError(fmt::format("request {} timed out after {} ms on {}", request.id, timeout.count(),
                                     worker.describe()),
                         true);
  EvaluationResult result = parse_result(*line);
  if (result.id != request.id)
    throw ProtocolError(fmt::format("response id '{}' does not match request '{}'", result.id, request.id));
  if (!result.ok() && !result.message) result.message = "worker reported an error";
  return result;
}

WorkerPool::WorkerPool(std::vector<std::unique_ptr<WorkerChannel>> workers, std::chrono::milliseconds timeout,
                       int max_retries)
    : workers_(std::move(workers)), timeout_(timeout), max_retries_(max_retries) {
  std::vector<std::string> problems;
  if (workers_.empty()) problems.emplace_back("workers: at least one worker is required");
  if (timeout_.count() <= 0) problems.emplace_back("timeout_seconds: must be positive");
  if (max_retries_ < 0) problems.emplace_back("max_retries: must not be negative");
  if (!problems.empty()) throw ConfigError(std::move(problems));
  for (std::size_t i = 0; i < workers_.size(); ++i) idle_.push_back(i);
}

std::size_t WorkerPool::acquire() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [&] { return !idle_.empty(); });
  const std::size_t index = idle_.front();
  idle_.erase(idle_.begin());
  return index;
}

void WorkerPool::release(std::size_t index) {
  {
    std::lock_guard lock(mutex_);
    idle_.push_back(index);
  }
  idle_cv_.notify_one();
}

std::string RequestIds::next() { return fmt::format("{}-{}", prefix_, counter_.fetch_add(1)); }

std::vector<EvaluationResult> evaluate_batch(std::span<const Genome> genomes, WorkerPool& pool,
                                             const RequestTemplate& tmpl, int parallelism, RequestIds& ids) {
  std::vector<EvaluationResult> results(genomes.size());
  if (genomes.empty()) return results;

  std::atomic<std::size_t> next{0};
  const auto run_one = [&](std::size_t i) {
    EvaluationRequest req{ids.next(), genomes[i], tmpl.dataset, tmpl.train};
    req.train.seed = mix_seed({tmpl.train.seed, canonical_hash(genomes[i])});
    for (int attempt = 0;; ++attempt) {
      const std::size_t w = pool.acquire();
      WorkerChannel& worker = pool.worker(w);
      try {
        results[i] = dispatch(req, worker, pool.timeout());
        pool.release(w);
        return;
      } catch (const TransportError& e) {
        spdlog::warn("{} (attempt {} of {})", e.what(), attempt + 1, pool.max_retries() + 1);
        worker.reset();
        pool.release(w);
        if (attempt < pool.max_retries()) {
          req.id = ids.next();
          continue;
        }
        results[i] = EvaluationResult::failure(req.id, e.what());
        return;
      } catch (const std::exception& e) {
        // Protocol violations leave the stream in an unknown state.
        spdlog::warn("request {} failed on {}: {}", req.id, worker.describe(), e.what());
        worker.reset();
        pool.release(w);
        results[i] = EvaluationResult::failure(req.id, e.what());
        return;
      }
    }
  };

  const std::size_t lanes = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)), 1,
                                                    genomes.size());
  {
    std::vector<std::jthread> threads;
    threads.reserve(lanes);
    for (std::size_t t = 0; t < lanes; ++t) {
      threads.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < genomes.size(); i = next.fetch_add(1)) run_one(i);
      });
    }
  }
  return results;
}

WorkerPoolEvaluator::WorkerPoolEvaluator(std::unique_ptr<WorkerPool> pool, RequestTemplate tmpl, int parallelism)
    : pool_(std::move(pool)),
      template_(std::move(tmpl)),
      parallelism_(parallelism),
      ids_(fmt::format("{:x}-{:x}", static_cast<unsigned>(::getpid()),
                       static_cast<std::uint64_t>(Clock::now().time_since_epoch().count()))) {}

std::vector<EvaluationResult> WorkerPoolEvaluator::evaluate(std::span<const Genome> genomes) {
  return evaluate_batch(genomes, *pool_, template_, parallelism_, ids_);
}

}  // namespace gennet

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gennet/evaluation.hpp"

namespace gennet {

/// Connection-level failure (timeout, closed pipe, refused connection).
/// Retrying on a fresh connection may succeed.
class TransportError : public std::runtime_error {
 public:
  TransportError(std::string message, bool timed_out = false)
      : std::runtime_error(std::move(message)), timed_out_(timed_out) {}
  bool timed_out() const { return timed_out_; }

 private:
  bool timed_out_;
};

/// One line-oriented connection to a trainer worker.
class WorkerChannel {
 public:
  virtual ~WorkerChannel() = default;

  virtual void send_line(std::string_view line) = 0;
  /// Next complete line without the newline; nullopt when `timeout` elapses.
  /// Throws TransportError when the peer has gone away.
  virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
  /// Drops the connection; the next send reconnects or respawns.
  virtual void reset() = 0;
  virtual std::string describe() const = 0;
};

/// Child process running `/bin/sh -c command`, protocol on its stdin/stdout.
class SubprocessChannel final : public WorkerChannel {
 public:
  explicit SubprocessChannel(std::string command);
  ~SubprocessChannel() override;
  SubprocessChannel(const SubprocessChannel&) = delete;
  SubprocessChannel& operator=(const SubprocessChannel&) = delete;

  void send_line(std::string_view line) override;
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;
  void reset() override;
  std::string describe() const override { return "subprocess `" + command_ + "`"; }

 private:
  void spawn();

  std::string command_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// TCP connection to host:port.
class TcpChannel final : public WorkerChannel {
 public:
  TcpChannel(std::string host, std::uint16_t port);
  ~TcpChannel() override;
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  void send_line(std::string_view line) override;
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;
  void reset() override;
  std::string describe() const override { return "tcp " + host_ + ":" + std::to_string(port_); }

 private:
  void connect_now();

  std::string host_;
  std::uint16_t port_;
  int fd_ = -1;
  std::string buffer_;
};

/// `host:port` or `tcp://host:port` becomes a TcpChannel; anything else is a command line.
std::unique_ptr<WorkerChannel> make_channel(const std::string& endpoint);

/// Sends one request line and waits for its response line.
/// Timeout -> TransportError (retryable); bad or mismatched response ->
/// ProtocolError; worker-reported failure -> status=error result.
EvaluationResult dispatch(const EvaluationRequest& request, WorkerChannel& worker,
                          std::chrono::milliseconds timeout);

/// A fixed set of workers handed out first-available, one request each at a time.
class WorkerPool {
 public:
  WorkerPool(std::vector<std::unique_ptr<WorkerChannel>> workers, std::chrono::milliseconds timeout,
             int max_retries = 1);

  std::size_t size() const { return workers_.size(); }
  std::chrono::milliseconds timeout() const { return timeout_; }
  int max_retries() const { return max_retries_; }

  /// Blocks until a worker is idle.
  std::size_t acquire();
  void release(std::size_t index);
  WorkerChannel& worker(std::size_t index) { return *workers_[index]; }

 private:
  std::vector<std::unique_ptr<WorkerChannel>> workers_;
  std::chrono::milliseconds timeout_;
  int max_retries_;
  std::mutex mutex_;
  std::condition_variable idle_cv_;
  std::vector<std::size_t> idle_;
};

/// Hands out run-unique request ids.
class RequestIds {
 public:
  explicit RequestIds(std::string prefix) : prefix_(std::move(prefix)) {}
  std::string next();

 private:
  std::string prefix_;
  std::atomic<std::uint64_t> counter_{0};
};

/// Template fields copied into every request; each request gets its own id
/// and a seed mixed from the template seed and the genome hash.
struct RequestTemplate {
  std::string dataset;
  TrainSettings train;
};

/// Evaluates every genome on the pool with at most `parallelism` requests in
/// flight. Output is index-aligned with the input whatever the completion
/// order. Transport failures are retried up to the pool's retry budget with
/// a fresh id and the same seed; exhausted retries and protocol errors yield
/// status=error results.
std::vector<EvaluationResult> evaluate_batch(std::span<const Genome> genomes, WorkerPool& pool,
                                             const RequestTemplate& tmpl, int parallelism, RequestIds& ids);

class WorkerPoolEvaluator final : public FitnessEvaluator {
 public:
  WorkerPoolEvaluator(std::unique_ptr<WorkerPool> pool, RequestTemplate tmpl, int parallelism);
  std::vector<EvaluationResult> evaluate(std::span<const Genome> genomes) override;

 private:
  std::unique_ptr<WorkerPool> pool_;
  RequestTemplate template_;
  int parallelism_;
  RequestIds ids_;
};

}  // namespace gennet

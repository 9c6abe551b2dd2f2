#include "mock_channel.hpp"

#include <thread>

#include <json.hpp>

#include "fixtures.hpp"

namespace gennet::testing {

std::vector<std::string> MockStats::ids() {
  std::lock_guard lock(mutex);
  std::vector<std::string> out;
  for (const auto& r : seen) out.push_back(r.id);
  return out;
}

MockChannel::MockChannel(MockScript script, std::shared_ptr<MockStats> stats, std::string name)
    : script_(std::move(script)), stats_(std::move(stats)), name_(std::move(name)) {}

void MockChannel::send_line(std::string_view line) {
  if (pending_) throw std::logic_error("mock worker got a second request before answering the first");
  auto request = request_from_json(nlohmann::json::parse(line));
  const int now = ++stats_->in_flight;
  int seen_max = stats_->max_in_flight.load();
  while (now > seen_max && !stats_->max_in_flight.compare_exchange_weak(seen_max, now)) {
  }
  ++stats_->requests;
  {
    std::lock_guard lock(stats_->mutex);
    stats_->seen.push_back(request);
  }
  pending_ = std::move(request);
}

std::optional<std::string> MockChannel::read_line(std::chrono::milliseconds timeout) {
  if (!pending_) throw std::logic_error("mock worker read without a request");
  const EvaluationRequest request = std::move(*pending_);
  pending_.reset();
  const MockReply reply = script_(request);
  struct Done {
    MockStats& s;
    ~Done() { --s.in_flight; }
  } done{*stats_};

  if (reply.kind == MockReply::Kind::timeout) {
    std::this_thread::sleep_for(timeout);
    return std::nullopt;
  }
  std::this_thread::sleep_for(reply.delay);
  {
    std::lock_guard lock(stats_->mutex);
    stats_->completed.push_back(request.id);
  }

  using nlohmann::json;
  switch (reply.kind) {
    case MockReply::Kind::ok: {
      json r{{"id", request.id}, {"status", "ok"}, {"fitness", reply.fitness}, {"epochs_run", 1}};
      if (reply.wall_seconds > 0) r["wall_seconds"] = reply.wall_seconds;
      return r.dump();
    }
    case MockReply::Kind::error:
      return json{{"id", request.id}, {"status", "error"}, {"message", reply.message}}.dump();
    case MockReply::Kind::malformed:
      return std::string("{\"id\": \"") + request.id + "\", \"status\": ";
    case MockReply::Kind::wrong_id:
      return json{{"id", request.id + "-other"}, {"status", "ok"}, {"fitness", reply.fitness}}.dump();
    case MockReply::Kind::hang_up:
      throw TransportError("mock worker closed the connection");
    case MockReply::Kind::timeout:
      break;
  }
  return std::nullopt;
}

void MockChannel::reset() {
  pending_.reset();
  ++stats_->resets;
}

std::unique_ptr<WorkerPool> mock_pool(int workers, const MockScript& script, const std::shared_ptr<MockStats>& stats,
                                      std::chrono::milliseconds timeout, int max_retries) {
  std::vector<std::unique_ptr<WorkerChannel>> channels;
  for (int i = 0; i < workers; ++i)
    channels.push_back(std::make_unique<MockChannel>(script, stats, "mock-" + std::to_string(i)));
  return std::make_unique<WorkerPool>(std::move(channels), timeout, max_retries);
}

Genome genome_with_filters(int filters) {
  Genome g = minimal_genome();
  g.conv_blocks.front().filters = filters;
  return g;
}

}  // namespace gennet::testing

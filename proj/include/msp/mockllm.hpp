#pragma once

// Scriptable OpenAI-compatible mock endpoint so the complete pipeline and
// the acceptance suite run fully offline. The handler receives (model,
// prompt, n) and returns the completion text; scripted failure statuses and
// per-request delays support retry and concurrency tests.

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace msp::mock {

class MockLlmServer {
 public:
  // Returns the completion for one sample; sample_index in [0, n).
  using Handler = std::function<std::string(
      const std::string& model, const std::string& prompt, int sample_index)>;

  MockLlmServer() {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res);
                 });
  }

  ~MockLlmServer() { stop(); }

  MockLlmServer(const MockLlmServer&) = delete;
  MockLlmServer& operator=(const MockLlmServer&) = delete;

  void set_handler(Handler handler) {
    std::lock_guard<std::mutex> lock(mutex_);
    handler_ = std::move(handler);
  }

  // Echo server: every sample returns the prompt itself.
  void set_echo() {
    set_handler([](const std::string&, const std::string& prompt, int) {
      return prompt;
    });
  }

  // Next requests fail with these statuses (in order) before normal service
  // resumes.
  void push_failure_statuses(std::vector<int> statuses) {
    std::lock_guard<std::mutex> lock(mutex_);
    for (int s : statuses) failure_queue_.push_back(s);
  }

  void set_required_api_key(std::string key) {
    std::lock_guard<std::mutex> lock(mutex_);
    required_key_ = std::move(key);
  }

  void set_response_delay(std::chrono::milliseconds delay) {
    std::lock_guard<std::mutex> lock(mutex_);
    delay_ = delay;
  }

  // port 0 binds an ephemeral port; query it with port().
  void start(int port = 0) {
    if (port == 0) {
      port_ = server_.bind_to_any_port("127.0.0.1");
      if (port_ <= 0) throw std::runtime_error("mock server failed to bind");
    } else {
      if (!server_.bind_to_port("127.0.0.1", port))
        throw std::runtime_error("mock server failed to bind port " +
                                 std::to_string(port));
      port_ = port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  int request_count() const { return request_count_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

  // Raw prompts received, in arrival order.
  std::vector<std::string> received_prompts() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return prompts_;
  }

  void reset_counters() {
    request_count_ = 0;
    max_in_flight_ = 0;
    std::lock_guard<std::mutex> lock(mutex_);
    prompts_.clear();
  }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    request_count_.fetch_add(1);
    int now = in_flight_.fetch_add(1) + 1;
    int prev_max = max_in_flight_.load();
    while (now > prev_max &&
           !max_in_flight_.compare_exchange_weak(prev_max, now)) {
    }

    Handler handler;
    std::optional<int> failure;
    std::string required_key;
    std::chrono::milliseconds delay{0};
    {
      std::lock_guard<std::mutex> lock(mutex_);
      handler = handler_;
      required_key = required_key_;
      delay = delay_;
      if (!failure_queue_.empty()) {
        failure = failure_queue_.front();
        failure_queue_.pop_front();
      }
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);

    auto done = [this] { in_flight_.fetch_sub(1); };
    if (failure) {
      res.status = *failure;
      res.set_content("{\"error\": \"scripted failure\"}", "application/json");
      done();
      return;
    }
    if (!required_key.empty()) {
      auto auth = req.get_header_value("Authorization");
      if (auth != "Bearer " + required_key) {
        res.status = 401;
        res.set_content("{\"error\": \"bad key\"}", "application/json");
        done();
        return;
      }
    }

    try {
      nlohmann::json body = nlohmann::json::parse(req.body);
      std::string model = body.value("model", "");
      int n = body.value("n", 1);
      std::string prompt =
          body.at("messages").at(0).at("content").get<std::string>();
      {
        std::lock_guard<std::mutex> lock(mutex_);
        prompts_.push_back(prompt);
      }
      nlohmann::json choices = nlohmann::json::array();
      for (int i = 0; i < n; ++i) {
        std::string completion =
            handler ? handler(model, prompt, i) : prompt;
        choices.push_back(
            {{"index", i},
             {"message", {{"role", "assistant"}, {"content", completion}}}});
      }
      nlohmann::json out = {{"object", "chat.completion"},
                            {"model", model},
                            {"choices", choices}};
      res.status = 200;
      res.set_content(out.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(std::string("{\"error\": \"") + e.what() + "\"}",
                      "application/json");
    }
    done();
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  Handler handler_;
  std::deque<int> failure_queue_;
  std::string required_key_;
  std::chrono::milliseconds delay_{0};
  std::vector<std::string> prompts_;
  std::atomic<int> request_count_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace msp::mock

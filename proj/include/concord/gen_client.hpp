#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "concord/corpus_io.hpp"
#include "concord/error.hpp"
#include "concord/line_source.hpp"
#include "concord/orderer.hpp"

namespace concord {

enum class PromptStyle {
  Completion,  // prefix + " " + concepts + separator
  Alignment,   // ask the model to follow the given concept order
};

inline constexpr std::string_view kDefaultPromptPrefix = "Generate a sentence containing all the concepts in the concept set:";
inline constexpr const char* kApiKeyEnv = "CONCORD_API_KEY";

struct GeneratorSpec {
  std::string endpoint;  // http(s)://host[:port]/path, or "stub"
  std::string model;
  std::string prompt_prefix{kDefaultPromptPrefix};
  std::string separator = " ->";
  std::string stop_sequence = "\n";  // the "/n" ending token, read as a newline
  PromptStyle style = PromptStyle::Completion;
  double timeout_seconds = 30.0;
  int max_retries = 3;
  int max_tokens = 64;
  double requests_per_minute = 0.0;  // 0: unlimited
  std::size_t concurrency = 4;

  void validate() const {
    if (!(timeout_seconds > 0.0)) throw Error(Errc::invalid_input, "timeout must be positive");
    if (max_retries < 0) throw Error(Errc::invalid_input, "max_retries must be >= 0");
    if (concurrency < 1) throw Error(Errc::invalid_input, "concurrency must be >= 1");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["endpoint"] = endpoint;
    j["model"] = model;
    j["prompt_prefix"] = prompt_prefix;
    j["separator"] = separator;
    j["stop_sequence"] = stop_sequence;
    j["style"] = style == PromptStyle::Completion ? "completion" : "alignment";
    j["timeout_seconds"] = timeout_seconds;
    j["max_retries"] = max_retries;
    j["max_tokens"] = max_tokens;
    j["requests_per_minute"] = requests_per_minute;
    j["concurrency"] = concurrency;
    return j;
  }
};

inline std::string build_prompt(const GeneratorSpec& spec, std::string_view formatted_concepts) {
  if (is_blank(formatted_concepts)) throw Error(Errc::invalid_input, "empty concept string");
  if (spec.style == PromptStyle::Alignment) {
    return "Given a concept list: [" + std::string(formatted_concepts) +
           "], please generate a sentence that aligns the ordering of the concepts:";
  }
  return spec.prompt_prefix + " " + std::string(formatted_concepts) + spec.separator;
}

struct GenerationRequest {
  std::string model;
  std::string prompt;
  std::string stop;
  int max_tokens = 64;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["model"] = model;
    j["prompt"] = prompt;
    j["stop"] = stop;
    j["max_tokens"] = max_tokens;
    return j;
  }
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool transient) : Error(Errc::transport, what), transient_(transient) {}
  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

// Must be safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const GenerationRequest& request) = 0;
};

class FunctionBackend : public Backend {
 public:
  explicit FunctionBackend(std::function<std::string(const GenerationRequest&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const GenerationRequest& request) override { return fn_(request); }

 private:
  std::function<std::string(const GenerationRequest&)> fn_;
};

// Recovers the ordered concepts from a prompt and echoes them in a fixed
// template, so offline pipelines stay deterministic.
class StubBackend : public Backend {
 public:
  explicit StubBackend(GeneratorSpec spec) : spec_(std::move(spec)) {}

  std::vector<std::string> concepts_in(std::string_view prompt) const {
    std::string_view body = prompt;
    if (spec_.style == PromptStyle::Alignment) {
      const auto open = body.find('[');
      const auto close = body.rfind(']');
      body = open == std::string_view::npos || close == std::string_view::npos || close < open
                 ? std::string_view{}
                 : body.substr(open + 1, close - open - 1);
    } else {
      if (body.starts_with(spec_.prompt_prefix)) body.remove_prefix(spec_.prompt_prefix.size());
      if (!spec_.separator.empty() && body.ends_with(spec_.separator)) body.remove_suffix(spec_.separator.size());
    }
    if (const auto t1 = body.find(kOrderingToken); t1 != std::string_view::npos) {
      body = body.substr(t1 + kOrderingToken.size());
      body = body.substr(0, body.find(kOrderingToken));
    }
    std::vector<std::string> words;
    std::string cur;
    for (char c : body) {
      if (c == ' ' || c == ',') {
        if (!cur.empty()) words.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
  }

  std::string complete(const GenerationRequest& request) override {
    const auto words = concepts_in(request.prompt);
    std::string text = "The";
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) text += i + 1 == words.size() ? " and the" : ", the";
      text += " " + words[i];
    }
    return text + ".\n(stub)";
  }

 private:
  GeneratorSpec spec_;
};

// POST {model, prompt, stop, max_tokens} -> {text}. The API key, when set in
// CONCORD_API_KEY, is sent as a bearer token.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(const GeneratorSpec& spec) : timeout_(spec.timeout_seconds) {
    const auto scheme = spec.endpoint.find("://");
    if (scheme == std::string::npos) throw Error(Errc::invalid_input, "endpoint must be an http(s) URL: " + spec.endpoint);
    const auto slash = spec.endpoint.find('/', scheme + 3);
    origin_ = spec.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : spec.endpoint.substr(slash);
    if (const char* key = std::getenv(kApiKeyEnv)) api_key_ = key;
  }

  std::string complete(const GenerationRequest& request) override {
    httplib::Client client(origin_);
    if (!client.is_valid()) throw TransportError("unsupported endpoint '" + origin_ + "'", false);
    const auto secs = static_cast<time_t>(timeout_);
    const auto usecs = static_cast<time_t>((timeout_ - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(path_, headers, request.to_json().dump(), "application/json");
    if (!res) throw TransportError("request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500) {
      throw TransportError("HTTP " + std::to_string(res->status) + " from " + origin_ + path_, true);
    }
    if (res->status != 200) throw TransportError("HTTP " + std::to_string(res->status) + " from " + origin_ + path_, false);
    const auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.contains("text") || !body["text"].is_string()) {
      throw TransportError("response is not {\"text\": string}", false);
    }
    return body["text"].get<std::string>();
  }

 private:
  std::string origin_, path_, api_key_;
  double timeout_;
};

// Transcript lines: {"request": {...}, "response": {"text": ...}}.
class TranscriptRecorder : public Backend {
 public:
  TranscriptRecorder(Backend& inner, const std::string& path) : inner_(inner), out_(path, std::ios::app) {
    if (!out_) throw Error(Errc::io, "cannot write transcript '" + path + "'");
  }

  std::string complete(const GenerationRequest& request) override {
    std::string text = inner_.complete(request);
    nlohmann::ordered_json j;
    j["request"] = request.to_json();
    j["response"] = {{"text", text}};
    std::lock_guard lock(mu_);
    out_ << j.dump() << '\n';
    out_.flush();
    return text;
  }

 private:
  Backend& inner_;
  std::mutex mu_;
  std::ofstream out_;
};

// Serves completions from a recorded transcript, keyed by (model, prompt).
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open transcript '" + path + "'");
    IstreamLines lines(in);
    std::string line;
    std::size_t lineno = 0;
    while (lines.next(line)) {
      ++lineno;
      if (is_blank(line)) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("request") || !j.contains("response")) {
        throw Error(Errc::validation, path + ":" + std::to_string(lineno) + ": not a transcript entry");
      }
      replies_[{j["request"].value("model", ""), j["request"].value("prompt", "")}] = j["response"].value("text", "");
    }
  }

  std::string complete(const GenerationRequest& request) override {
    const auto it = replies_.find({request.model, request.prompt});
    if (it == replies_.end()) throw TransportError("prompt not present in transcript", false);
    return it->second;
  }

 private:
  std::map<std::pair<std::string, std::string>, std::string> replies_;
};

// Token bucket; capacity one request, refilled at rpm / 60 per second.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double requests_per_minute, std::function<Clock::time_point()> now = Clock::now,
                       std::function<void(Clock::duration)> sleep = [](Clock::duration d) { std::this_thread::sleep_for(d); })
      : rate_per_sec_(requests_per_minute / 60.0), now_(std::move(now)), sleep_(std::move(sleep)) {}

  // Returns the time spent waiting.
  Clock::duration acquire() {
    if (rate_per_sec_ <= 0.0) return Clock::duration::zero();
    std::unique_lock lock(mu_);
    const auto t = now_();
    if (!started_) {
      started_ = true;
      next_free_ = t;
    }
    const auto interval = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / rate_per_sec_));
    const auto slot = std::max(next_free_, t);
    next_free_ = slot + interval;
    lock.unlock();
    const auto wait = slot - t;
    if (wait > Clock::duration::zero()) sleep_(wait);
    return wait;
  }

 private:
  double rate_per_sec_;
  std::function<Clock::time_point()> now_;
  std::function<void(Clock::duration)> sleep_;
  std::mutex mu_;
  bool started_ = false;
  Clock::time_point next_free_{};
};

struct CallLogEntry {
  std::size_t attempt = 0;  // 1-based
  double latency_ms = 0.0;
  bool ok = false;
  std::string error;
};

inline std::string postprocess_completion(std::string text, std::string_view stop) {
  if (!stop.empty()) {
    if (const auto pos = text.find(stop); pos != std::string::npos) text.resize(pos);
  }
  const auto b = text.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = text.find_last_not_of(" \t\r\n");
  return text.substr(b, e - b + 1);
}

// The only component that performs network I/O (through its backend).
class Generator {
 public:
  using Sleep = std::function<void(std::chrono::milliseconds)>;

  Generator(GeneratorSpec spec, Backend& backend, Sleep sleep = nullptr,
            std::function<void(const CallLogEntry&)> log = nullptr)
      : spec_(std::move(spec)),
        backend_(backend),
        limiter_(spec_.requests_per_minute),
        sleep_(sleep ? std::move(sleep) : Sleep([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
        log_(std::move(log)) {
    spec_.validate();
  }

  const GeneratorSpec& spec() const noexcept { return spec_; }

  std::chrono::milliseconds backoff(std::size_t failed_attempts) const {
    return base_backoff_ * (1LL << std::min<std::size_t>(failed_attempts - 1, 10));
  }

  void set_base_backoff(std::chrono::milliseconds d) { base_backoff_ = d; }

  std::string generate(const std::string& prompt) {
    const GenerationRequest req{spec_.model, prompt, spec_.stop_sequence, spec_.max_tokens};
    for (std::size_t attempt = 1;; ++attempt) {
      limiter_.acquire();
      const auto t0 = std::chrono::steady_clock::now();
      CallLogEntry entry;
      entry.attempt = attempt;
      try {
        std::string raw = backend_.complete(req);
        entry.latency_ms = elapsed_ms(t0);
        entry.ok = true;
        record(entry);
        auto text = postprocess_completion(std::move(raw), spec_.stop_sequence);
        if (text.empty()) throw Error(Errc::empty_generation, "empty completion for prompt '" + prompt + "'");
        return text;
      } catch (const TransportError& e) {
        entry.latency_ms = elapsed_ms(t0);
        entry.error = e.what();
        record(entry);
        if (!e.transient()) throw;
        if (attempt > static_cast<std::size_t>(spec_.max_retries)) {
          throw Error(Errc::transport, "gave up after " + std::to_string(attempt) + " attempts: " + e.what());
        }
        sleep_(backoff(attempt));
      }
    }
  }

 private:
  static double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }

  void record(const CallLogEntry& e) {
    if (!log_) return;
    std::lock_guard lock(log_mu_);
    log_(e);
  }

  GeneratorSpec spec_;
  Backend& backend_;
  RateLimiter limiter_;
  Sleep sleep_;
  std::function<void(const CallLogEntry&)> log_;
  std::mutex log_mu_;
  std::chrono::milliseconds base_backoff_{250};
};

struct BatchItem {
  std::string id;
  std::string prompt;
};

struct BatchResult {
  std::string id;
  std::optional<std::string> text;
  std::optional<Error> error;
};

// At most spec.concurrency requests in flight; results keep input order.
inline std::vector<BatchResult> generate_batch(Generator& gen, const std::vector<BatchItem>& items) {
  std::vector<BatchResult> results(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      results[i].id = items[i].id;
      try {
        results[i].text = gen.generate(items[i].prompt);
      } catch (const Error& e) {
        results[i].error = e;
      }
    }
  };
  const std::size_t n = std::min(gen.spec().concurrency, std::max<std::size_t>(items.size(), 1));
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  pool.clear();
  return results;
}

inline std::unique_ptr<Backend> make_backend(const GeneratorSpec& spec) {
  if (spec.endpoint == "stub") return std::make_unique<StubBackend>(spec);
  return std::make_unique<HttpBackend>(spec);
}

}  // namespace concord

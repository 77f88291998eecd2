#pragma once
// Client for a remote text-generation endpoint, treated as a black box (no
// logits). Wire protocol (HTTP POST, JSON): request {"prompt", "max_tokens",
// "temperature", "top_p", "seed"?} -> response {"text"}. The response text is
// tokenized with the corpus tokenizer named in the spec.
//
// Every transport/protocol failure is retriable up to the configured attempt
// budget; exhausting it raises a typed EndpointError carrying the attempt
// count. A client instance enforces its in-flight bound across threads.

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace itlab {

struct EndpointSpec {
  std::string base_url = "http://127.0.0.1:8080";  // scheme://host[:port]
  std::string path = "/generate";
  std::string token_env;  // env var holding the bearer token; empty = no auth
  int timeout_ms = 5000;
  int max_attempts = 3;   // total tries per call; 1 = never retry
  int max_in_flight = 2;  // concurrent-request bound per client
  TokenizerScheme tokenizer = TokenizerScheme::whitespace;
};

inline void validate_endpoint_spec(const EndpointSpec& spec) {
  if (spec.base_url.empty())
    throw std::invalid_argument("endpoint: base_url must be non-empty");
  if (spec.path.empty() || spec.path.front() != '/')
    throw std::invalid_argument("endpoint: path must start with '/'");
  if (spec.timeout_ms < 1)
    throw std::invalid_argument("endpoint: timeout must be >= 1 ms");
  if (spec.max_attempts < 1)
    throw std::invalid_argument("endpoint: attempt budget must be >= 1");
  if (spec.max_in_flight < 1)
    throw std::invalid_argument("endpoint: in-flight bound must be >= 1");
}

enum class EndpointErrorKind {
  timeout,      // connect/read deadline exceeded
  transport,    // connection refused, reset, DNS, ...
  http_status,  // non-200 response
  protocol,     // body not JSON, or no string "text" field
};

class EndpointError : public std::runtime_error {
 public:
  EndpointError(EndpointErrorKind kind, int attempts, const std::string& what)
      : std::runtime_error("endpoint: " + what + " (after " +
                           std::to_string(attempts) + " attempt" +
                           (attempts == 1 ? "" : "s") + ")"),
        kind_(kind),
        attempts_(attempts) {}

  EndpointErrorKind kind() const { return kind_; }
  int attempts() const { return attempts_; }

 private:
  EndpointErrorKind kind_;
  int attempts_;
};

class EndpointClient {
 public:
  explicit EndpointClient(EndpointSpec spec) : spec_(std::move(spec)) {
    validate_endpoint_spec(spec_);
  }

  const EndpointSpec& spec() const { return spec_; }

  // One protocol round trip (plus retries). The returned passage holds the
  // tokenized response text only; id/generation are the caller's business.
  Passage generate(const std::string& prompt, const SamplerConfig& cfg,
                   std::optional<std::uint64_t> seed = std::nullopt) const {
    validate_sampler_config(cfg);
    const auto headers = auth_headers();  // config errors before any request

    nlohmann::json body = {{"prompt", prompt},
                           {"max_tokens", cfg.max_tokens},
                           {"temperature", cfg.temperature},
                           {"top_p", cfg.nucleus_p}};
    if (seed) body["seed"] = *seed;
    const std::string payload = body.dump();

    InFlightGuard guard(*this);
    EndpointErrorKind kind = EndpointErrorKind::transport;
    std::string what;
    for (int attempt = 1; attempt <= spec_.max_attempts; ++attempt) {
      httplib::Client http(spec_.base_url);
      http.set_connection_timeout(0, spec_.timeout_ms * 1000);
      http.set_read_timeout(0, spec_.timeout_ms * 1000);
      http.set_keep_alive(false);

      auto res = http.Post(spec_.path, headers, payload, "application/json");
      if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                               err == httplib::Error::Read;
        kind = timed_out ? EndpointErrorKind::timeout
                         : EndpointErrorKind::transport;
        what = timed_out ? "request timed out" : "transport failure";
        continue;
      }
      if (res->status != 200) {
        kind = EndpointErrorKind::http_status;
        what = "HTTP status " + std::to_string(res->status);
        continue;
      }
      const auto parsed =
          nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
      if (parsed.is_discarded() || !parsed.contains("text") ||
          !parsed["text"].is_string()) {
        kind = EndpointErrorKind::protocol;
        what = "malformed response body";
        continue;
      }
      Passage p;
      p.tokens = tokenize(parsed["text"].get<std::string>(), spec_.tokenizer);
      return p;
    }
    throw EndpointError(kind, spec_.max_attempts, what);
  }

 private:
  // Scoped slot under the client's in-flight bound.
  class InFlightGuard {
   public:
    explicit InFlightGuard(const EndpointClient& c) : c_(c) {
      std::unique_lock<std::mutex> lock(c_.gate_);
      c_.slot_free_.wait(
          lock, [&] { return c_.in_flight_ < c_.spec_.max_in_flight; });
      ++c_.in_flight_;
    }
    ~InFlightGuard() {
      {
        std::lock_guard<std::mutex> lock(c_.gate_);
        --c_.in_flight_;
      }
      c_.slot_free_.notify_one();
    }
    InFlightGuard(const InFlightGuard&) = delete;
    InFlightGuard& operator=(const InFlightGuard&) = delete;

   private:
    const EndpointClient& c_;
  };

  httplib::Headers auth_headers() const {
    if (spec_.token_env.empty()) return {};
    const char* token = std::getenv(spec_.token_env.c_str());
    if (token == nullptr || *token == '\0')
      throw std::invalid_argument("endpoint: environment variable '" +
                                  spec_.token_env + "' is not set");
    return {{"Authorization", "Bearer " + std::string(token)}};
  }

  EndpointSpec spec_;
  mutable std::mutex gate_;
  mutable std::condition_variable slot_free_;
  mutable int in_flight_ = 0;
};

// One-shot convenience wrapper around a transient client.
inline Passage generate_remote(const EndpointSpec& spec,
                               const std::string& prompt,
                               const SamplerConfig& cfg) {
  return EndpointClient(spec).generate(prompt, cfg);
}

// Endpoint-backed analogue of the n-gram sample_continuation: the passage is
// prompt ++ continuation, capped at cfg.max_tokens continuation tokens. The
// rng supplies the wire seed, so chain runs stay reproducible against a
// seed-honoring endpoint.
inline Passage sample_continuation(const EndpointClient& client,
                                   const std::vector<std::string>& prompt,
                                   const SamplerConfig& cfg, Rng& rng) {
  if (prompt.empty())
    throw std::invalid_argument("endpoint: prompt must hold >= 1 token");
  std::string joined;
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    if (i) joined += ' ';
    joined += prompt[i];
  }
  const Passage remote = client.generate(joined, cfg, rng.next_u64());
  Passage p;
  p.tokens = prompt;
  const std::size_t take =
      std::min(remote.tokens.size(), std::size_t(cfg.max_tokens));
  p.tokens.insert(p.tokens.end(), remote.tokens.begin(),
                  remote.tokens.begin() + std::ptrdiff_t(take));
  return p;
}

}  // namespace itlab

#pragma once

// Client for external generation services.
//
//   POST /generate  {"label", "prompt", "max_tokens", "temperature", "top_k",
//                    "top_p", "seed"}  ->  200 {"text", "backend_id"}
//   GET  /health    ->  200 {"status": "ok", "classes": [...]}

#include <chrono>
#include <string>
#include <vector>

#include "httplib.h"
#include "textforge/generation.hpp"
#include "textforge/io.hpp"

namespace textforge {

struct HttpClientOptions {
    std::chrono::milliseconds timeout{30000};
    std::size_t max_in_flight = 4;
};

struct HealthInfo {
    std::string status;
    std::vector<std::string> classes;
};

namespace detail {

inline json request_body(const GenerationRequest& r) {
    return {{"label", r.label},
            {"prompt", r.prompt_word},
            {"max_tokens", r.sampler.max_tokens},
            {"temperature", r.sampler.temperature},
            {"top_k", r.sampler.top_k},
            {"top_p", r.sampler.top_p},
            {"seed", r.sampler.seed}};
}

inline httplib::Client make_client(const std::string& endpoint, const HttpClientOptions& options) {
    httplib::Client cli(endpoint);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    return cli;
}

inline GenerationError transport_error(httplib::Error err, std::chrono::steady_clock::duration elapsed,
                                       const HttpClientOptions& options, const std::string& id) {
    // cpp-httplib reports an expired read timeout as a plain read error, so
    // the elapsed time decides which of the two it was.
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= options.timeout * 9 / 10);
    if (timed_out)
        return GenerationError(GenerationError::Kind::timeout, id,
                               "timed out after " + std::to_string(options.timeout.count()) + " ms");
    return GenerationError(GenerationError::Kind::transport, id, "transport error: " + httplib::to_string(err));
}

inline json parse_response(const std::string& body, const std::string& id) {
    try {
        auto j = json::parse(body);
        if (!j.is_object()) throw GenerationError(GenerationError::Kind::schema, id, "response is not a JSON object");
        return j;
    } catch (const json::parse_error&) {
        throw GenerationError(GenerationError::Kind::schema, id, "response is not valid JSON");
    }
}

}  // namespace detail

/// One POST /generate round trip.
inline GenerationResult external_generate(const std::string& endpoint, const GenerationRequest& request,
                                          const HttpClientOptions& options = {}) {
    const std::string& id = request.request_id;
    auto cli = detail::make_client(endpoint, options);
    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post("/generate", detail::request_body(request).dump(), "application/json");
    if (!res) throw detail::transport_error(res.error(), std::chrono::steady_clock::now() - start, options, id);
    if (res->status != 200)
        throw GenerationError(GenerationError::Kind::status, id,
                              "server answered HTTP " + std::to_string(res->status), res->status);
    const auto j = detail::parse_response(res->body, id);
    auto text = j.find("text");
    auto backend = j.find("backend_id");
    if (text == j.end() || !text->is_string() || backend == j.end() || !backend->is_string())
        throw GenerationError(GenerationError::Kind::schema, id,
                              "response must carry string fields \"text\" and \"backend_id\"");
    GenerationResult r;
    r.text = text->get<std::string>();
    r.backend_id = backend->get<std::string>();
    r.request = request;
    r.empty_generation = tokenize(r.text).empty();
    return r;
}

inline HealthInfo check_health(const std::string& endpoint, const HttpClientOptions& options = {}) {
    auto cli = detail::make_client(endpoint, options);
    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Get("/health");
    if (!res) throw detail::transport_error(res.error(), std::chrono::steady_clock::now() - start, options, "health");
    if (res->status != 200)
        throw GenerationError(GenerationError::Kind::status, "health",
                              "server answered HTTP " + std::to_string(res->status), res->status);
    const auto j = detail::parse_response(res->body, "health");
    HealthInfo h;
    try {
        h.status = j.at("status").get<std::string>();
        h.classes = j.at("classes").get<std::vector<std::string>>();
    } catch (const json::exception&) {
        throw GenerationError(GenerationError::Kind::schema, "health",
                              "health response must be {\"status\": str, \"classes\": [str]}");
    }
    return h;
}

class HttpGenerationBackend final : public GenerationBackend {
public:
    explicit HttpGenerationBackend(std::string endpoint, HttpClientOptions options = {})
        : endpoint_(std::move(endpoint)), options_(options) {}

    std::string backend_id() const override { return "http:" + endpoint_; }

    GenerationResult generate(const GenerationRequest& request) const override {
        return external_generate(endpoint_, request, options_);
    }

    std::size_t max_in_flight() const override { return options_.max_in_flight; }

    const std::string& endpoint() const noexcept { return endpoint_; }

private:
    std::string endpoint_;
    HttpClientOptions options_;
};

}  // namespace textforge

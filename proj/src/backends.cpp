#include "w2s/backends.hpp"

#include <httplib.h>

#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <thread>

#include "w2s/jsonl.hpp"
#include "w2s/rng.hpp"

namespace w2s {

namespace {

// Counting semaphore bounding in-flight requests per backend.
class Gate {
  public:
    explicit Gate(int limit) : slots_(limit < 1 ? 1 : limit) {}
    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return slots_ > 0; });
        --slots_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            ++slots_;
        }
        cv_.notify_one();
    }

  private:
    std::mutex mu_;
    std::condition_variable cv_;
    int slots_;
};

struct GatePass {
    explicit GatePass(Gate& g) : gate(g) { gate.acquire(); }
    ~GatePass() { gate.release(); }
    Gate& gate;
};

}  // namespace

// ---------------------------------------------------------------- scripted

ScriptedBackend::ScriptedBackend(bool strict, std::string default_response)
    : strict_(strict), default_response_(std::move(default_response)) {
    desc_.kind = BackendDescriptor::Kind::scripted;
    desc_.model_name = "scripted";
    desc_.capabilities = {Capability::generate, Capability::embed, Capability::token_scores};
}

void ScriptedBackend::add(const std::string& prompt, const std::string& response,
                          const std::map<std::string, double>& token_scores) {
    add_digest(sha256_hex(prompt), response, token_scores);
}

void ScriptedBackend::add_digest(const std::string& digest, const std::string& response,
                                 const std::map<std::string, double>& token_scores) {
    if (table_.count(digest)) throw ConfigError("duplicate fixture digest: " + digest);
    table_[digest] = Entry{response, token_scores};
}

BackendResponse ScriptedBackend::generate(const std::string& prompt, const GenerationParams&) {
    const std::string digest = sha256_hex(prompt);
    auto it = table_.find(digest);
    if (it == table_.end()) {
        if (strict_) throw BackendError("scripted backend miss, prompt digest " + digest);
        return BackendResponse{default_response_, {}, std::nullopt, std::nullopt};
    }
    return BackendResponse{it->second.response, it->second.token_scores, std::nullopt,
                           std::nullopt};
}

std::vector<double> ScriptedBackend::hashed_bow(const std::string& text) {
    std::vector<double> vec(kEmbedDim, 0.0);
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            vec[fnv1a64(token) % kEmbedDim] += 1.0;
            token.clear();
        }
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            flush();
        }
    }
    flush();
    return vec;
}

std::vector<double> ScriptedBackend::embed(const std::string& text) { return hashed_bow(text); }

std::shared_ptr<ScriptedBackend> load_fixture(const std::filesystem::path& path, bool strict,
                                              std::string default_response) {
    auto backend = std::make_shared<ScriptedBackend>(strict, std::move(default_response));
    auto rows = read_jsonl(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = path.string() + ":" + std::to_string(i + 1);
        if (!row.contains("prompt_sha256") || !row["prompt_sha256"].is_string() ||
            !row.contains("response") || !row["response"].is_string()) {
            throw DataError(where + ": fixture rows need prompt_sha256 and response");
        }
        std::map<std::string, double> scores;
        if (row.contains("token_scores") && row["token_scores"].is_object()) {
            for (const auto& [tok, p] : row["token_scores"].items()) {
                scores[tok] = p.get<double>();
            }
        }
        try {
            backend->add_digest(row["prompt_sha256"].get<std::string>(),
                                row["response"].get<std::string>(), scores);
        } catch (const ConfigError& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return backend;
}

// -------------------------------------------------------------------- http

std::vector<std::pair<std::string, std::string>> make_messages(const BackendDescriptor& desc,
                                                               const std::string& prompt) {
    if (!desc.header_as_system) return {{"user", prompt}};
    std::size_t nl = prompt.find('\n');
    if (nl == std::string::npos) return {{"user", prompt}};
    return {{"system", prompt.substr(0, nl)}, {"user", prompt.substr(nl + 1)}};
}

struct HttpBackend::Impl {
    std::string host_port;  // scheme://host:port
    std::string path_prefix;
    Gate gate;

    explicit Impl(const BackendDescriptor& desc) : gate(desc.max_in_flight) {
        // Split the endpoint into origin and path prefix; httplib wants them
        // separate.
        const std::string& url = desc.endpoint;
        std::size_t scheme = url.find("://");
        if (scheme == std::string::npos) throw ConfigError("endpoint must be a URL: " + url);
        std::size_t path = url.find('/', scheme + 3);
        if (path == std::string::npos) {
            host_port = url;
        } else {
            host_port = url.substr(0, path);
            path_prefix = url.substr(path);
            while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
        }
    }

    httplib::Client client(const BackendDescriptor& desc) const {
        httplib::Client c(host_port);
        c.set_connection_timeout(desc.timeout_seconds, 0);
        c.set_read_timeout(desc.timeout_seconds, 0);
        c.set_write_timeout(desc.timeout_seconds, 0);
        return c;
    }
};

HttpBackend::HttpBackend(BackendDescriptor desc) : desc_(std::move(desc)) {
    if (desc_.endpoint.empty() || desc_.model_name.empty()) {
        throw ConfigError("http backend needs endpoint and model_name");
    }
    impl_ = std::make_unique<Impl>(desc_);
}

HttpBackend::~HttpBackend() = default;

namespace {

httplib::Headers auth_headers(const BackendDescriptor& desc) {
    httplib::Headers headers{{"Content-Type", "application/json"}};
    if (!desc.auth_env.empty()) {
        // The key value must never leak into errors or logs; it is read here
        // and goes straight into the header, nowhere else.
        const char* key = std::getenv(desc.auth_env.c_str());
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    return headers;
}

[[noreturn]] void throw_http_error(const std::string& what, const httplib::Result& res) {
    if (!res) {
        throw BackendError(what + ": transport error (" + httplib::to_string(res.error()) + ")",
                           /*retryable=*/true);
    }
    int status = res->status;
    int advised_ms = 0;
    if (res->has_header("Retry-After")) {
        try {
            advised_ms = std::stoi(res->get_header_value("Retry-After")) * 1000;
        } catch (...) {
            advised_ms = 0;
        }
    }
    bool retryable = status == 429 || status >= 500;
    std::string body = res->body.substr(0, 200);
    throw BackendError(what + ": HTTP " + std::to_string(status) + " " + body, retryable,
                       advised_ms);
}

}  // namespace

BackendResponse HttpBackend::generate(const std::string& prompt, const GenerationParams& params) {
    if (!has(Capability::generate)) throw ConfigError("backend lacks generate capability");
    Json body;
    body["model"] = desc_.model_name;
    Json messages = Json::array();
    for (const auto& [role, content] : make_messages(desc_, prompt)) {
        messages.push_back(Json{{"role", role}, {"content", content}});
    }
    body["messages"] = std::move(messages);
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["max_tokens"] = params.max_tokens;
    if (!params.stop.empty()) body["stop"] = params.stop;
    if (params.want_token_scores && has(Capability::token_scores)) {
        body["logprobs"] = true;
        body["top_logprobs"] = 8;
    }

    GatePass pass(impl_->gate);
    auto client = impl_->client(desc_);
    auto res = client.Post(impl_->path_prefix + "/chat/completions", auth_headers(desc_),
                           body.dump(), "application/json");
    if (!res || res->status != 200) throw_http_error("generate", res);

    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty()) {
        throw BackendError("generate: malformed completion payload", /*retryable=*/false);
    }
    BackendResponse out;
    const Json& choice = reply["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content")) {
        throw BackendError("generate: completion has no message content", /*retryable=*/false);
    }
    out.text = choice["message"]["content"].get<std::string>();
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array() &&
        !choice["logprobs"]["content"].empty()) {
        const Json& first = choice["logprobs"]["content"][0];
        if (first.contains("top_logprobs")) {
            for (const auto& alt : first["top_logprobs"]) {
                out.token_scores[alt["token"].get<std::string>()] =
                    std::exp(alt["logprob"].get<double>());
            }
        }
    }
    if (reply.contains("usage") && reply["usage"].is_object()) {
        const Json& usage = reply["usage"];
        if (usage.contains("prompt_tokens")) out.prompt_tokens = usage["prompt_tokens"].get<int>();
        if (usage.contains("completion_tokens")) {
            out.completion_tokens = usage["completion_tokens"].get<int>();
        }
    }
    return out;
}

std::vector<double> HttpBackend::embed(const std::string& text) {
    if (!has(Capability::embed)) throw ConfigError("backend lacks embed capability");
    Json body;
    body["model"] = desc_.model_name;
    body["input"] = text;

    GatePass pass(impl_->gate);
    auto client = impl_->client(desc_);
    auto res = client.Post(impl_->path_prefix + "/embeddings", auth_headers(desc_), body.dump(),
                           "application/json");
    if (!res || res->status != 200) throw_http_error("embed", res);

    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("data") || reply["data"].empty() ||
        !reply["data"][0].contains("embedding")) {
        throw BackendError("embed: malformed embedding payload", /*retryable=*/false);
    }
    return reply["data"][0]["embedding"].get<std::vector<double>>();
}

// ------------------------------------------------------------------- retry

RetryBackend::RetryBackend(BackendPtr inner, int max_retries, int base_delay_ms)
    : inner_(std::move(inner)), max_retries_(max_retries), base_delay_ms_(base_delay_ms) {
    if (max_retries_ < 0) throw ConfigError("max_retries must be >= 0");
}

void RetryBackend::backoff(int attempt, int advised_ms) {
    int delay = advised_ms > 0 ? advised_ms : base_delay_ms_ * (1 << attempt);
    // Up to 25% jitter, seeded off the clock; retry pacing does not need to
    // be reproducible.
    static thread_local Rng jitter(
        mix_seed(0x7265747279ULL,
                 static_cast<std::uint64_t>(
                     std::chrono::steady_clock::now().time_since_epoch().count())));
    delay += static_cast<int>(jitter.below(static_cast<std::uint64_t>(delay / 4 + 1)));
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
}

BackendResponse RetryBackend::generate(const std::string& prompt, const GenerationParams& params) {
    for (int attempt = 0;; ++attempt) {
        try {
            return inner_->generate(prompt, params);
        } catch (const BackendError& e) {
            if (!e.retryable || attempt >= max_retries_) throw;
            backoff(attempt, e.retry_after_ms);
        }
    }
}

std::vector<double> RetryBackend::embed(const std::string& text) {
    for (int attempt = 0;; ++attempt) {
        try {
            return inner_->embed(text);
        } catch (const BackendError& e) {
            if (!e.retryable || attempt >= max_retries_) throw;
            backoff(attempt, e.retry_after_ms);
        }
    }
}

// --------------------------------------------------------------- recording

BackendResponse RecordingBackend::generate(const std::string& prompt,
                                           const GenerationParams& params) {
    BackendResponse res = inner_->generate(prompt, params);
    std::lock_guard lock(mu_);
    rows_.push_back(Row{sha256_hex(prompt), res.text, res.token_scores});
    return res;
}

std::vector<double> RecordingBackend::embed(const std::string& text) {
    return inner_->embed(text);
}

void RecordingBackend::save(const std::filesystem::path& path) const {
    std::lock_guard lock(mu_);
    std::vector<Json> out;
    std::set<std::string> seen;
    for (const auto& row : rows_) {
        if (!seen.insert(row.digest).second) continue;  // same prompt asked twice
        Json obj;
        obj["prompt_sha256"] = row.digest;
        obj["response"] = row.response;
        if (!row.token_scores.empty()) {
            Json scores;
            for (const auto& [tok, p] : row.token_scores) scores[tok] = p;
            obj["token_scores"] = std::move(scores);
        }
        out.push_back(std::move(obj));
    }
    write_jsonl(path, out);
}

BackendPtr make_backend(const BackendDescriptor& desc) {
    switch (desc.kind) {
        case BackendDescriptor::Kind::scripted:
            return std::make_shared<ScriptedBackend>();
        case BackendDescriptor::Kind::http: {
            BackendPtr http = std::make_shared<HttpBackend>(desc);
            if (desc.max_retries > 0) {
                return std::make_shared<RetryBackend>(http, desc.max_retries,
                                                      desc.retry_base_delay_ms);
            }
            return http;
        }
    }
    throw ConfigError("unknown backend kind");
}

}  // namespace w2s

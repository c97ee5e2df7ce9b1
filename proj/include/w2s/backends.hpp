#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "w2s/common.hpp"

namespace w2s {

struct GenerationParams {
    double temperature = 0.7;
    double top_p = 0.8;
    int max_tokens = 256;
    std::vector<std::string> stop;
    bool want_token_scores = false;
};

enum class Capability { generate, embed, token_scores };

struct BackendDescriptor {
    enum class Kind { http, scripted } kind = Kind::scripted;
    std::string endpoint;            // http kind: base URL, may carry a path prefix
    std::string model_name;
    std::string auth_env = "W2S_API_KEY";  // name of the env var holding the key
    int timeout_seconds = 60;
    int max_retries = 3;
    int retry_base_delay_ms = 1000;  // doubled per attempt, with jitter
    bool header_as_system = false;   // move the first prompt line into a system message
    std::set<Capability> capabilities = {Capability::generate, Capability::embed};
    int max_in_flight = 8;
};

struct BackendResponse {
    std::string text;
    std::map<std::string, double> token_scores;  // first generated position, token -> prob
    std::optional<int> prompt_tokens;
    std::optional<int> completion_tokens;
};

/// Uniform model access. Implementations must be safe for concurrent calls.
class Backend {
  public:
    virtual ~Backend() = default;
    virtual const BackendDescriptor& descriptor() const = 0;
    virtual BackendResponse generate(const std::string& prompt, const GenerationParams& params) = 0;
    virtual std::vector<double> embed(const std::string& text) = 0;

    bool has(Capability c) const { return descriptor().capabilities.count(c) > 0; }
};

using BackendPtr = std::shared_ptr<Backend>;

/// Deterministic fixture-table backend keyed by prompt digest. In strict
/// mode a miss raises an error naming the digest; otherwise the configured
/// default response is returned.
class ScriptedBackend : public Backend {
  public:
    explicit ScriptedBackend(bool strict = true, std::string default_response = "");

    const BackendDescriptor& descriptor() const override { return desc_; }
    BackendResponse generate(const std::string& prompt, const GenerationParams& params) override;
    std::vector<double> embed(const std::string& text) override;

    void add(const std::string& prompt, const std::string& response,
             const std::map<std::string, double>& token_scores = {});
    void add_digest(const std::string& digest, const std::string& response,
                    const std::map<std::string, double>& token_scores = {});
    std::size_t size() const { return table_.size(); }

    static constexpr std::size_t kEmbedDim = 256;
    /// Bag-of-words feature hashing into kEmbedDim buckets; word order is
    /// irrelevant by construction.
    static std::vector<double> hashed_bow(const std::string& text);

  private:
    struct Entry {
        std::string response;
        std::map<std::string, double> token_scores;
    };
    BackendDescriptor desc_;
    std::map<std::string, Entry> table_;
    bool strict_;
    std::string default_response_;
};

/// Load a scripted backend from JSONL of {prompt_sha256, response,
/// optional token_scores}. Duplicate digests are an error.
std::shared_ptr<ScriptedBackend> load_fixture(const std::filesystem::path& path,
                                              bool strict = true,
                                              std::string default_response = "");

/// OpenAI-compatible HTTP client: POST {endpoint}/chat/completions and
/// {endpoint}/embeddings. Single attempt per call; wrap in RetryBackend
/// for backoff. An in-flight semaphore bounds concurrent requests.
class HttpBackend : public Backend {
  public:
    explicit HttpBackend(BackendDescriptor desc);
    ~HttpBackend() override;

    const BackendDescriptor& descriptor() const override { return desc_; }
    BackendResponse generate(const std::string& prompt, const GenerationParams& params) override;
    std::vector<double> embed(const std::string& text) override;

  private:
    struct Impl;
    BackendDescriptor desc_;
    std::unique_ptr<Impl> impl_;
};

/// Retries retryable failures with exponential backoff (base delay, factor 2,
/// jitter) up to max_retries; a 429's server-advised delay takes precedence.
class RetryBackend : public Backend {
  public:
    RetryBackend(BackendPtr inner, int max_retries, int base_delay_ms);

    const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }
    BackendResponse generate(const std::string& prompt, const GenerationParams& params) override;
    std::vector<double> embed(const std::string& text) override;

  private:
    void backoff(int attempt, int advised_ms);
    BackendPtr inner_;
    int max_retries_;
    int base_delay_ms_;
};

/// Pass-through wrapper that appends every generate exchange to a fixture
/// table for later scripted replay.
class RecordingBackend : public Backend {
  public:
    explicit RecordingBackend(BackendPtr inner) : inner_(std::move(inner)) {}

    const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }
    BackendResponse generate(const std::string& prompt, const GenerationParams& params) override;
    std::vector<double> embed(const std::string& text) override;

    /// Write the recorded exchanges as a fixture JSONL.
    void save(const std::filesystem::path& path) const;

  private:
    BackendPtr inner_;
    mutable std::mutex mu_;
    struct Row {
        std::string digest;
        std::string response;
        std::map<std::string, double> token_scores;
    };
    std::vector<Row> rows_;
};

/// Instantiate from a descriptor; http backends get retry wrapping when
/// max_retries > 0.
BackendPtr make_backend(const BackendDescriptor& desc);

/// Splits a prompt into chat messages per the descriptor: a single user
/// message by default, or system + user when header_as_system is set.
std::vector<std::pair<std::string, std::string>> make_messages(const BackendDescriptor& desc,
                                                               const std::string& prompt);

}  // namespace w2s

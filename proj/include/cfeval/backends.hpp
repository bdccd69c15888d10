#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cfeval/corpus.hpp"

namespace cfeval {

enum class BackendKind { classify, logprob, chat };

BackendKind backend_kind_from_string(const std::string& s);
std::string to_string(BackendKind k);

struct BackendConfig {
    BackendKind kind = BackendKind::classify;
    std::string endpoint;        // http(s)://host:port[/base] or fixture://<path>
    std::string model_id;
    double timeout_s = 30.0;
    int max_parallel = 1;
    int retries = 0;
    int backoff_ms = 1000;       // initial backoff, doubles per attempt, +-20% jitter
};

struct ClassifierOutput {
    std::map<std::string, double> probabilities;
    std::string predicted;
};

struct TokenLogprobs {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;
};

struct Message {
    std::string role;
    std::string content;

    bool operator==(const Message&) const = default;
};

// Digest used as the fixture/cache key for chat requests.
std::string chat_digest(const std::string& model_id,
                        const std::vector<Message>& messages, double temperature);

// Uniform client over the three model capabilities. The public operations
// build the wire payload, dispatch through transport() with bounded
// parallelism and retries, and validate the response.
class Backend {
public:
    explicit Backend(BackendConfig config);
    virtual ~Backend() = default;

    ClassifierOutput classify(const TextFields& fields,
                              const std::vector<std::string>& labels);
    TokenLogprobs token_logprobs(const std::string& text);
    std::string chat(const std::vector<Message>& messages, double temperature);

    const BackendConfig& config() const { return config_; }
    std::size_t request_count() const { return requests_.load(); }
    void seed_jitter(std::uint64_t seed);

protected:
    // Sends one canonical JSON payload, returns the raw response body.
    virtual std::string transport(BackendKind kind, const std::string& payload) = 0;

    BackendConfig config_;

private:
    friend class CacheBackend;  // cache misses reuse the inner dispatch path
    std::string dispatch(BackendKind kind, const std::string& payload);

    std::atomic<std::size_t> requests_{0};
    std::mutex slot_mutex_;
    std::condition_variable slot_cv_;
    int slots_in_use_ = 0;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_{0x5eed};
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config);

protected:
    std::string transport(BackendKind kind, const std::string& payload) override;
};

// Deterministic stand-in for a model endpoint, served from canned responses.
class FixtureBackend : public Backend {
public:
    explicit FixtureBackend(BackendConfig config);

    // Loads the canned-response file (see README for the schema).
    static std::unique_ptr<FixtureBackend> from_file(BackendConfig config,
                                                     const std::filesystem::path& path);

    void add_classify(const std::string& text_key,
                      const std::map<std::string, double>& probabilities);
    void add_logprobs(const std::string& text, const std::vector<std::string>& tokens,
                      const std::vector<double>& logprobs);
    void add_chat_rule(const std::string& contains, const std::string& content);
    void add_chat_by_digest(const std::string& digest, const std::string& content);
    void set_chat_default(const std::string& content);

protected:
    std::string transport(BackendKind kind, const std::string& payload) override;

private:
    std::map<std::string, std::string> classify_;   // text key -> response body
    std::map<std::string, std::string> logprobs_;   // text -> response body
    std::vector<std::pair<std::string, std::string>> chat_rules_;
    std::map<std::string, std::string> chat_by_digest_;
    std::optional<std::string> chat_default_;
};

// File cache wrapper. Key = digest(kind, model_id, payload); one file per
// key, first line is the key, rest is the raw response bytes. Corrupt
// entries are refetched transparently.
class CacheBackend : public Backend {
public:
    CacheBackend(std::shared_ptr<Backend> inner, std::filesystem::path cache_dir);

    std::size_t hits() const { return hits_.load(); }
    std::size_t misses() const { return misses_.load(); }

protected:
    std::string transport(BackendKind kind, const std::string& payload) override;

private:
    std::shared_ptr<Backend> inner_;
    std::filesystem::path cache_dir_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
    std::mutex io_mutex_;
};

// Builds a backend from its config: fixture:// endpoints load the canned
// file (relative to base_dir), anything else is HTTP. Wraps in a cache
// when cache_dir is set.
std::shared_ptr<Backend> make_backend(const BackendConfig& config,
                                      const std::optional<std::filesystem::path>& cache_dir,
                                      const std::filesystem::path& base_dir = ".");

}  // namespace cfeval

#include "cfeval/backends.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cfeval/digest.hpp"
#include "cfeval/errors.hpp"

namespace cfeval {

using json = nlohmann::json;

BackendKind backend_kind_from_string(const std::string& s) {
    if (s == "classify") return BackendKind::classify;
    if (s == "logprob") return BackendKind::logprob;
    if (s == "chat") return BackendKind::chat;
    throw Error("unknown backend kind: " + s);
}

std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::classify: return "classify";
        case BackendKind::logprob: return "logprob";
        default: return "chat";
    }
}

namespace {

json messages_to_json(const std::vector<Message>& messages) {
    json arr = json::array();
    for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
    return arr;
}

std::string join_labels(const std::vector<std::string>& labels) {
    std::string out;
    for (const auto& l : labels) {
        if (!out.empty()) out += ", ";
        out += l;
    }
    return out;
}

// Fixture lookup key for a classify/logprob payload.
std::string text_key(const json& fields) {
    if (fields.contains("text")) return fields.at("text").get<std::string>();
    return fields.at("premise").get<std::string>() + "\n" +
           fields.at("hypothesis").get<std::string>();
}

}  // namespace

std::string chat_digest(const std::string& model_id,
                        const std::vector<Message>& messages, double temperature) {
    json j{{"messages", messages_to_json(messages)},
           {"model", model_id},
           {"temperature", temperature}};
    return hex_digest(j.dump());
}

Backend::Backend(BackendConfig config) : config_(std::move(config)) {
    if (config_.max_parallel < 1) throw Error("max_parallel must be >= 1");
    if (config_.timeout_s <= 0) throw Error("timeout must be positive");
}

void Backend::seed_jitter(std::uint64_t seed) {
    std::lock_guard lock(rng_mutex_);
    rng_.seed(seed);
}

std::string Backend::dispatch(BackendKind kind, const std::string& payload) {
    struct Slot {
        Backend& b;
        Slot(Backend& b) : b(b) {
            std::unique_lock lock(b.slot_mutex_);
            b.slot_cv_.wait(lock, [&] { return b.slots_in_use_ < b.config_.max_parallel; });
            ++b.slots_in_use_;
        }
        ~Slot() {
            {
                std::lock_guard lock(b.slot_mutex_);
                --b.slots_in_use_;
            }
            b.slot_cv_.notify_one();
        }
    } slot(*this);

    for (int attempt = 0;; ++attempt) {
        ++requests_;
        try {
            return transport(kind, payload);
        } catch (const Transport&) {
            if (attempt >= config_.retries) throw;
        }
        double jitter;
        {
            std::lock_guard lock(rng_mutex_);
            jitter = std::uniform_real_distribution<double>(0.8, 1.2)(rng_);
        }
        auto delay = std::chrono::milliseconds(
            static_cast<long>(config_.backoff_ms * std::pow(2.0, attempt) * jitter));
        std::this_thread::sleep_for(delay);
    }
}

ClassifierOutput Backend::classify(const TextFields& fields,
                                   const std::vector<std::string>& labels) {
    if (config_.kind != BackendKind::classify)
        throw Error("backend kind is not classify");
    json fields_json = json::object();
    for (const auto& [k, v] : fields) fields_json[k] = v;
    json payload{{"fields", fields_json}, {"labels", labels}, {"model", config_.model_id}};
    std::string body = dispatch(BackendKind::classify, payload.dump());

    json resp = json::parse(body, nullptr, false);
    if (resp.is_discarded() || !resp.contains("probabilities") ||
        !resp.at("probabilities").is_object())
        throw BadResponse("classify response lacks \"probabilities\" object");

    ClassifierOutput out;
    for (const auto& [label, p] : resp.at("probabilities").items()) {
        if (std::find(labels.begin(), labels.end(), label) == labels.end())
            throw LabelMismatch(label, join_labels(labels));
        if (!p.is_number()) throw BadResponse("probability for " + label + " is not a number");
        double v = p.get<double>();
        if (v < 0.0 || v > 1.0)
            throw BadResponse("probability " + std::to_string(v) + " outside [0,1]");
        out.probabilities[label] = v;
    }
    for (const auto& label : labels)
        if (!out.probabilities.count(label)) throw LabelMismatch("", join_labels(labels));

    double sum = 0.0;
    for (const auto& [_, v] : out.probabilities) sum += v;
    if (std::abs(sum - 1.0) > 1e-6) {
        std::ostringstream os;
        os << "probabilities sum " << sum;
        throw BadResponse(os.str());
    }
    for (auto& [_, v] : out.probabilities) v /= sum;

    // argmax; ties broken by lexicographic label order (map iterates sorted)
    double best = -1.0;
    for (const auto& [label, v] : out.probabilities) {
        if (v > best) {
            best = v;
            out.predicted = label;
        }
    }
    return out;
}

TokenLogprobs Backend::token_logprobs(const std::string& text) {
    if (config_.kind != BackendKind::logprob)
        throw Error("backend kind is not logprob");
    if (text.empty()) throw EmptyText();
    json payload{{"model", config_.model_id}, {"text", text}};
    std::string body = dispatch(BackendKind::logprob, payload.dump());

    json resp = json::parse(body, nullptr, false);
    if (resp.is_discarded() || !resp.contains("tokens") || !resp.contains("logprobs") ||
        !resp.at("tokens").is_array() || !resp.at("logprobs").is_array())
        throw BadResponse("logprob response lacks tokens/logprobs arrays");

    TokenLogprobs out;
    out.tokens = resp.at("tokens").get<std::vector<std::string>>();
    out.logprobs = resp.at("logprobs").get<std::vector<double>>();
    if (out.tokens.size() != out.logprobs.size())
        throw BadResponse("tokens/logprobs length mismatch");
    for (double lp : out.logprobs) {
        if (!std::isfinite(lp)) throw BadResponse("non-finite logprob");
        if (lp > 0.0) throw BadResponse("logprob > 0");
    }
    return out;
}

std::string Backend::chat(const std::vector<Message>& messages, double temperature) {
    if (config_.kind != BackendKind::chat)
        throw Error("backend kind is not chat");
    if (messages.empty()) throw Error("chat requires at least one message");
    if (temperature < 0.0 || temperature > 2.0)
        throw OutOfRange("temperature " + std::to_string(temperature) + " outside [0,2]");
    json payload{{"messages", messages_to_json(messages)},
                 {"model", config_.model_id},
                 {"temperature", temperature}};
    std::string body = dispatch(BackendKind::chat, payload.dump());

    json resp = json::parse(body, nullptr, false);
    if (resp.is_discarded() || !resp.contains("content") || !resp.at("content").is_string())
        throw BadResponse("chat response lacks \"content\" string");
    return resp.at("content").get<std::string>();
}

// ---------------------------------------------------------------------------
// HTTP

HttpBackend::HttpBackend(BackendConfig config) : Backend(std::move(config)) {}

std::string HttpBackend::transport(BackendKind kind, const std::string& payload) {
    // split endpoint into scheme://host:port and base path
    std::string endpoint = config_.endpoint;
    std::string base_path;
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw Error("bad endpoint URL: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start != std::string::npos) {
        base_path = endpoint.substr(path_start);
        if (base_path == "/") base_path.clear();
        endpoint = endpoint.substr(0, path_start);
    }

    httplib::Client client(endpoint);
    client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
    if (const char* key = std::getenv("CFEVAL_API_KEY"))
        client.set_bearer_token_auth(key);

    std::string path = base_path + "/" + (kind == BackendKind::logprob
                                              ? "logprobs"
                                              : to_string(kind));
    auto res = client.Post(path, payload, "application/json");
    if (!res) throw Transport(httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw Transport("HTTP status " + std::to_string(res->status));
    return res->body;
}

// ---------------------------------------------------------------------------
// Fixture

FixtureBackend::FixtureBackend(BackendConfig config) : Backend(std::move(config)) {}

void FixtureBackend::add_classify(const std::string& key,
                                  const std::map<std::string, double>& probabilities) {
    classify_[key] = json{{"probabilities", probabilities}}.dump();
}

void FixtureBackend::add_logprobs(const std::string& text,
                                  const std::vector<std::string>& tokens,
                                  const std::vector<double>& logprobs) {
    logprobs_[text] = json{{"tokens", tokens}, {"logprobs", logprobs}}.dump();
}

void FixtureBackend::add_chat_rule(const std::string& contains, const std::string& content) {
    chat_rules_.emplace_back(contains, json{{"content", content}}.dump());
}

void FixtureBackend::add_chat_by_digest(const std::string& digest, const std::string& content) {
    chat_by_digest_[digest] = json{{"content", content}}.dump();
}

void FixtureBackend::set_chat_default(const std::string& content) {
    chat_default_ = json{{"content", content}}.dump();
}

std::unique_ptr<FixtureBackend> FixtureBackend::from_file(
    BackendConfig config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open fixture file: " + path.string());
    json j;
    in >> j;
    auto b = std::make_unique<FixtureBackend>(std::move(config));
    if (j.contains("classify"))
        for (const auto& [key, probs] : j.at("classify").items())
            b->add_classify(key, probs.get<std::map<std::string, double>>());
    if (j.contains("logprobs"))
        for (const auto& [text, entry] : j.at("logprobs").items())
            b->add_logprobs(text, entry.at("tokens").get<std::vector<std::string>>(),
                            entry.at("logprobs").get<std::vector<double>>());
    if (j.contains("chat")) {
        const auto& chat = j.at("chat");
        if (chat.contains("rules"))
            for (const auto& rule : chat.at("rules"))
                b->add_chat_rule(rule.at("contains").get<std::string>(),
                                 rule.at("content").get<std::string>());
        if (chat.contains("by_digest"))
            for (const auto& [d, content] : chat.at("by_digest").items())
                b->add_chat_by_digest(d, content.get<std::string>());
        if (chat.contains("default"))
            b->set_chat_default(chat.at("default").get<std::string>());
    }
    return b;
}

std::string FixtureBackend::transport(BackendKind kind, const std::string& payload) {
    json req = json::parse(payload);
    if (kind == BackendKind::classify) {
        std::string key = text_key(req.at("fields"));
        auto it = classify_.find(key);
        if (it == classify_.end())
            throw BadResponse("no fixture classify entry for: " + key);
        return it->second;
    }
    if (kind == BackendKind::logprob) {
        auto it = logprobs_.find(req.at("text").get<std::string>());
        if (it == logprobs_.end())
            throw BadResponse("no fixture logprob entry for: " + req.at("text").get<std::string>());
        return it->second;
    }
    // chat: digest first, then substring rules, then default
    std::vector<Message> messages;
    std::string all_content;
    for (const auto& m : req.at("messages")) {
        messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
        all_content += m.at("content").get<std::string>();
        all_content += "\n";
    }
    std::string d = chat_digest(req.at("model").get<std::string>(), messages,
                                req.at("temperature").get<double>());
    if (auto it = chat_by_digest_.find(d); it != chat_by_digest_.end()) return it->second;
    for (const auto& [needle, body] : chat_rules_)
        if (all_content.find(needle) != std::string::npos) return body;
    if (chat_default_) return *chat_default_;
    throw BadResponse("no fixture chat entry matches request");
}

// ---------------------------------------------------------------------------
// Cache

CacheBackend::CacheBackend(std::shared_ptr<Backend> inner, std::filesystem::path cache_dir)
    : Backend(inner->config()), inner_(std::move(inner)), cache_dir_(std::move(cache_dir)) {
    config_.retries = 0;  // the inner backend owns retry behavior
    std::filesystem::create_directories(cache_dir_);
}

std::string CacheBackend::transport(BackendKind kind, const std::string& payload) {
    std::string key =
        hex_digest(to_string(kind) + "\x1f" + config_.model_id + "\x1f" + payload);
    auto file = cache_dir_ / key;

    {
        std::lock_guard lock(io_mutex_);
        std::ifstream in(file, std::ios::binary);
        if (in) {
            std::string header;
            if (std::getline(in, header) && header == key) {
                std::string body((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                if (!body.empty()) {
                    ++hits_;
                    return body;
                }
            }
            // corrupt or truncated entry: fall through and refetch
        }
    }

    ++misses_;
    std::string body = inner_->dispatch(kind, payload);

    std::lock_guard lock(io_mutex_);
    auto tmp = cache_dir_ / (key + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << key << "\n" << body;
        if (!out) throw CacheCorrupt(key);
    }
    std::filesystem::rename(tmp, file);
    return body;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config,
                                      const std::optional<std::filesystem::path>& cache_dir,
                                      const std::filesystem::path& base_dir) {
    std::shared_ptr<Backend> backend;
    const std::string fixture_scheme = "fixture://";
    if (config.endpoint.rfind(fixture_scheme, 0) == 0) {
        std::filesystem::path p = config.endpoint.substr(fixture_scheme.size());
        if (p.is_relative()) p = base_dir / p;
        backend = FixtureBackend::from_file(config, p);
    } else {
        backend = std::make_shared<HttpBackend>(config);
    }
    if (cache_dir) backend = std::make_shared<CacheBackend>(backend, *cache_dir);
    return backend;
}

}  // namespace cfeval

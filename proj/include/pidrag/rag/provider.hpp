#pragma once

#include "pidrag/rag/message.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace pidrag::rag {

/// How to reach a model. The credential is referenced by environment variable name only.
struct ProviderSpec {
    std::string provider_name;   ///< openai | anthropic | local | scripted
    std::string model_id;
    std::string endpoint;        ///< URL; for "scripted" the path of the script file
    std::string credential_env;  ///< e.g. OPENAI_API_KEY; empty when none is needed
    bool supports_streaming = true;

    /// Fills endpoint and credential defaults for a known provider name.
    /// Throws ConfigError for unknown providers.
    static ProviderSpec resolve(const std::string& provider_name, const std::string& model_id,
                                const std::string& endpoint = {});

    nlohmann::json to_json() const;
    static ProviderSpec from_json(const nlohmann::json& doc);

    bool operator==(const ProviderSpec&) const = default;
};

/// "<PROVIDER>_API_KEY" for a provider name.
std::string credential_env_for(std::string_view provider_name);

using ChunkSink = std::function<void(std::string_view chunk)>;

class Provider {
public:
    virtual ~Provider() = default;
    /// Streams the completion through on_chunk in order. Throws ProviderError / AuthError.
    virtual void complete(const std::vector<ChatMessage>& messages, const ChunkSink& on_chunk) = 0;
};

std::unique_ptr<Provider> make_provider(const ProviderSpec& spec);

/// Incremental server-sent-events decoder: feed raw bytes, get one callback per event.
class SseDecoder {
public:
    using EventSink = std::function<void(const std::string& event, const std::string& data)>;

    explicit SseDecoder(EventSink sink) : sink_(std::move(sink)) {}
    void feed(std::string_view bytes);
    /// Dispatches a trailing event that was not terminated by a blank line.
    void finish();

private:
    void line(std::string_view l);
    void dispatch();

    EventSink sink_;
    std::string buffer_;
    std::string event_;
    std::string data_;
    bool has_data_ = false;
};

/// Splits a byte stream into newline-terminated lines (NDJSON).
class LineDecoder {
public:
    using LineSink = std::function<void(const std::string& line)>;

    explicit LineDecoder(LineSink sink) : sink_(std::move(sink)) {}
    void feed(std::string_view bytes);
    void finish();

private:
    LineSink sink_;
    std::string buffer_;
};

} // namespace pidrag::rag

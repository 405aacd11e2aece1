#include "pidrag/rag/provider.hpp"

#include "pidrag/error.hpp"
#include "pidrag/text.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace pidrag::rag {

using nlohmann::json;

std::string credential_env_for(std::string_view provider_name) {
    std::string out;
    for (char c : provider_name) {
        out += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                                                           : '_';
    }
    return out + "_API_KEY";
}

ProviderSpec ProviderSpec::resolve(const std::string& provider_name, const std::string& model_id,
                                   const std::string& endpoint) {
    ProviderSpec spec;
    spec.provider_name = provider_name;
    spec.model_id = model_id;
    spec.endpoint = endpoint;
    if (provider_name == "openai") {
        if (spec.endpoint.empty()) spec.endpoint = "https://api.openai.com/v1/chat/completions";
        spec.credential_env = credential_env_for(provider_name);
    } else if (provider_name == "anthropic") {
        if (spec.endpoint.empty()) spec.endpoint = "https://api.anthropic.com/v1/messages";
        spec.credential_env = credential_env_for(provider_name);
    } else if (provider_name == "local") {
        if (spec.endpoint.empty()) spec.endpoint = "http://127.0.0.1:11434/api/chat";
        spec.credential_env = credential_env_for(provider_name); // optional for local servers
    } else if (provider_name == "scripted") {
        if (spec.endpoint.empty()) throw ConfigError("scripted provider needs a script path");
    } else {
        throw ConfigError("unknown provider '" + provider_name + "' (expected openai, anthropic, local or scripted)");
    }
    return spec;
}

json ProviderSpec::to_json() const {
    return {{"provider_name", provider_name},
            {"model_id", model_id},
            {"endpoint", endpoint},
            {"credential_env", credential_env},
            {"supports_streaming", supports_streaming}};
}

ProviderSpec ProviderSpec::from_json(const json& doc) {
    ProviderSpec spec;
    spec.provider_name = doc.at("provider_name").get<std::string>();
    spec.model_id = doc.value("model_id", "");
    spec.endpoint = doc.value("endpoint", "");
    spec.credential_env = doc.value("credential_env", "");
    spec.supports_streaming = doc.value("supports_streaming", true);
    return spec;
}

// --- stream decoders ---

void SseDecoder::feed(std::string_view bytes) {
    buffer_.append(bytes);
    std::size_t start = 0;
    for (;;) {
        const auto nl = buffer_.find('\n', start);
        if (nl == std::string::npos) break;
        std::string_view l(buffer_.data() + start, nl - start);
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        line(l);
        start = nl + 1;
    }
    buffer_.erase(0, start);
}

void SseDecoder::finish() {
    if (!buffer_.empty()) {
        std::string rest;
        rest.swap(buffer_);
        line(rest);
    }
    dispatch();
}

void SseDecoder::line(std::string_view l) {
    if (l.empty()) {
        dispatch();
        return;
    }
    if (l.front() == ':') return;
    const auto colon = l.find(':');
    std::string_view field = l.substr(0, colon);
    std::string_view value = colon == std::string_view::npos ? std::string_view{} : l.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    if (field == "event") {
        event_ = value;
    } else if (field == "data") {
        if (has_data_) data_ += '\n';
        data_.append(value);
        has_data_ = true;
    }
}

void SseDecoder::dispatch() {
    if (has_data_) sink_(event_.empty() ? "message" : event_, data_);
    event_.clear();
    data_.clear();
    has_data_ = false;
}

void LineDecoder::feed(std::string_view bytes) {
    buffer_.append(bytes);
    std::size_t start = 0;
    for (;;) {
        const auto nl = buffer_.find('\n', start);
        if (nl == std::string::npos) break;
        auto l = text::trim(std::string_view(buffer_).substr(start, nl - start));
        if (!l.empty()) sink_(l);
        start = nl + 1;
    }
    buffer_.erase(0, start);
}

void LineDecoder::finish() {
    auto l = text::trim(buffer_);
    buffer_.clear();
    if (!l.empty()) sink_(l);
}

namespace {

// --- scripted ---

struct ScriptedResponse {
    std::string match; ///< case-insensitive substring of the last user message; empty = fallback
    std::vector<std::string> chunks;
    int error_after = -1; ///< fail after this many chunks
};

class ScriptedProvider : public Provider {
public:
    ScriptedProvider(const ProviderSpec& spec) : spec_(spec) {
        std::ifstream in(spec.endpoint, std::ios::binary);
        if (!in) throw ConfigError("cannot read provider script '" + spec.endpoint + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("provider script '" + spec.endpoint + "': " + e.what());
        }
        auth_error_ = doc.value("auth_error", false);
        delay_ms_ = doc.value("delay_ms", 0);
        for (const auto& r : doc.value("responses", json::array())) {
            ScriptedResponse sr;
            sr.match = text::to_lower(r.value("match", ""));
            if (r.contains("text")) sr.chunks.push_back(r.at("text").get<std::string>());
            for (const auto& c : r.value("chunks", json::array())) sr.chunks.push_back(c.get<std::string>());
            sr.error_after = r.value("error_after", -1);
            responses_.push_back(std::move(sr));
        }
    }

    void complete(const std::vector<ChatMessage>& messages, const ChunkSink& on_chunk) override {
        if (auth_error_) {
            const auto ref = spec_.credential_env.empty() ? credential_env_for(spec_.provider_name)
                                                          : spec_.credential_env;
            throw AuthError("authentication failed for provider '" + spec_.provider_name + "'; check " + ref, ref);
        }
        std::string question;
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
            if (it->role == Role::user) {
                question = text::to_lower(it->content);
                break;
            }
        }
        const ScriptedResponse* pick = nullptr;
        for (const auto& r : responses_) {
            if (!r.match.empty() && question.find(r.match) != std::string::npos) {
                pick = &r;
                break;
            }
        }
        if (!pick) {
            for (const auto& r : responses_) {
                if (r.match.empty()) {
                    pick = &r;
                    break;
                }
            }
        }
        if (!pick) throw ProviderError("scripted provider has no response for this question");

        int sent = 0;
        for (const auto& chunk : pick->chunks) {
            if (pick->error_after >= 0 && sent >= pick->error_after) break;
            if (delay_ms_ > 0 && sent > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
            on_chunk(chunk);
            ++sent;
        }
        if (pick->error_after >= 0) {
            throw ProviderError("scripted fault after " + std::to_string(sent) + " chunk(s)");
        }
    }

private:
    ProviderSpec spec_;
    bool auth_error_ = false;
    int delay_ms_ = 0;
    std::vector<ScriptedResponse> responses_;
};

// --- HTTP providers ---

struct Url {
    std::string origin; ///< scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' is not an absolute URL");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string optional_env(const std::string& name) {
    if (name.empty()) return {};
    const char* v = std::getenv(name.c_str());
    return v ? std::string(v) : std::string{};
}

class HttpProvider : public Provider {
public:
    explicit HttpProvider(ProviderSpec spec) : spec_(std::move(spec)), url_(split_url(spec_.endpoint)) {}

protected:
    std::string require_key() const {
        auto key = optional_env(spec_.credential_env);
        if (key.empty()) {
            throw AuthError("no credential for provider '" + spec_.provider_name + "'; set " + spec_.credential_env,
                            spec_.credential_env);
        }
        return key;
    }

    [[noreturn]] void auth_failed() const {
        throw AuthError("authentication failed for provider '" + spec_.provider_name + "'; check " +
                            spec_.credential_env,
                        spec_.credential_env);
    }

    /// POSTs body and hands every response byte range to on_bytes.
    void post(const httplib::Headers& headers, const std::string& body,
              const std::function<void(std::string_view)>& on_bytes) const {
        httplib::Client cli(url_.origin);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(300);

        httplib::Request req;
        req.method = "POST";
        req.path = url_.path;
        req.headers = headers;
        req.set_header("Content-Type", "application/json");
        req.body = body;

        int status = 0;
        std::string error_body;
        std::exception_ptr failure;
        req.response_handler = [&](const httplib::Response& r) {
            status = r.status;
            return true;
        };
        req.content_receiver = [&](const char* data, std::size_t n, std::uint64_t, std::uint64_t) {
            if (status >= 400) {
                if (error_body.size() < 4096) error_body.append(data, n);
                return true;
            }
            try {
                on_bytes(std::string_view(data, n));
            } catch (...) {
                failure = std::current_exception();
                return false;
            }
            return true;
        };

        auto res = cli.send(req);
        if (failure) std::rethrow_exception(failure);
        if (!res) {
            throw ProviderError(spec_.provider_name + " request failed: " + httplib::to_string(res.error()));
        }
        if (status == 401 || status == 403) auth_failed();
        if (status >= 400) {
            throw ProviderError(spec_.provider_name + " returned HTTP " + std::to_string(status) + ": " +
                                error_body.substr(0, 300));
        }
    }

    static json wire_messages(const std::vector<ChatMessage>& messages, bool include_system) {
        json out = json::array();
        for (const auto& m : messages) {
            if (m.role == Role::system && !include_system) continue;
            out.push_back({{"role", to_string(m.role)}, {"content", m.content}});
        }
        return out;
    }

    static json parse_event(const std::string& data, const std::string& provider) {
        try {
            return json::parse(data);
        } catch (const json::exception&) {
            throw ProviderError(provider + " sent an undecodable event: " + data.substr(0, 200));
        }
    }

    ProviderSpec spec_;
    Url url_;
};

class OpenAiProvider : public HttpProvider {
public:
    using HttpProvider::HttpProvider;

    void complete(const std::vector<ChatMessage>& messages, const ChunkSink& on_chunk) override {
        const auto key = require_key();
        json body{{"model", spec_.model_id},
                  {"messages", wire_messages(messages, true)},
                  {"stream", spec_.supports_streaming}};
        httplib::Headers headers{{"Authorization", "Bearer " + key}};

        if (!spec_.supports_streaming) {
            std::string raw;
            post(headers, body.dump(), [&](std::string_view b) { raw.append(b); });
            auto doc = parse_event(raw, spec_.provider_name);
            on_chunk(doc.at("choices").at(0).at("message").value("content", ""));
            return;
        }

        bool done = false;
        SseDecoder sse([&](const std::string&, const std::string& data) {
            if (done) return;
            if (data == "[DONE]") {
                done = true;
                return;
            }
            auto ev = parse_event(data, spec_.provider_name);
            if (ev.contains("error")) throw ProviderError("openai: " + ev["error"].dump());
            const auto& choices = ev.value("choices", json::array());
            if (choices.empty()) return;
            const auto& delta = choices[0].value("delta", json::object());
            auto it = delta.find("content");
            if (it != delta.end() && it->is_string()) on_chunk(it->get<std::string>());
        });
        post(headers, body.dump(), [&](std::string_view b) { sse.feed(b); });
        sse.finish();
        if (!done) throw ProviderError("openai stream ended before [DONE]");
    }
};

class AnthropicProvider : public HttpProvider {
public:
    using HttpProvider::HttpProvider;

    void complete(const std::vector<ChatMessage>& messages, const ChunkSink& on_chunk) override {
        const auto key = require_key();
        std::string system;
        for (const auto& m : messages) {
            if (m.role == Role::system) system += m.content;
        }
        json body{{"model", spec_.model_id},
                  {"max_tokens", 4096},
                  {"system", system},
                  {"messages", wire_messages(messages, false)},
                  {"stream", spec_.supports_streaming}};
        httplib::Headers headers{{"x-api-key", key}, {"anthropic-version", "2023-06-01"}};

        if (!spec_.supports_streaming) {
            std::string raw;
            post(headers, body.dump(), [&](std::string_view b) { raw.append(b); });
            auto doc = parse_event(raw, spec_.provider_name);
            std::string textout;
            for (const auto& block : doc.value("content", json::array())) textout += block.value("text", "");
            on_chunk(textout);
            return;
        }

        bool stopped = false;
        SseDecoder sse([&](const std::string& event, const std::string& data) {
            auto ev = parse_event(data, spec_.provider_name);
            const auto type = ev.value("type", event);
            if (type == "error") {
                const auto& err = ev.value("error", json::object());
                if (err.value("type", "") == "authentication_error") auth_failed();
                throw ProviderError("anthropic: " + err.dump());
            }
            if (type == "content_block_delta") {
                const auto& delta = ev.value("delta", json::object());
                if (delta.value("type", "") == "text_delta") on_chunk(delta.value("text", ""));
            } else if (type == "message_stop") {
                stopped = true;
            }
        });
        post(headers, body.dump(), [&](std::string_view b) { sse.feed(b); });
        sse.finish();
        if (!stopped) throw ProviderError("anthropic stream ended before message_stop");
    }
};

/// Ollama-style /api/chat returning newline-delimited JSON.
class LocalProvider : public HttpProvider {
public:
    using HttpProvider::HttpProvider;

    void complete(const std::vector<ChatMessage>& messages, const ChunkSink& on_chunk) override {
        json body{{"model", spec_.model_id},
                  {"messages", wire_messages(messages, true)},
                  {"stream", spec_.supports_streaming}};
        httplib::Headers headers;
        if (auto key = optional_env(spec_.credential_env); !key.empty()) {
            headers.emplace("Authorization", "Bearer " + key);
        }
        bool done = false;
        LineDecoder lines([&](const std::string& l) {
            auto ev = parse_event(l, spec_.provider_name);
            if (ev.contains("error")) throw ProviderError("local: " + ev["error"].dump());
            const auto& msg = ev.value("message", json::object());
            auto it = msg.find("content");
            if (it != msg.end() && it->is_string()) on_chunk(it->get<std::string>());
            if (ev.value("done", false)) done = true;
        });
        post(headers, body.dump(), [&](std::string_view b) { lines.feed(b); });
        lines.finish();
        if (!done) throw ProviderError("local stream ended before done");
    }
};

} // namespace

std::unique_ptr<Provider> make_provider(const ProviderSpec& spec) {
    if (spec.provider_name == "scripted") return std::make_unique<ScriptedProvider>(spec);
    if (spec.provider_name == "openai") return std::make_unique<OpenAiProvider>(spec);
    if (spec.provider_name == "anthropic") return std::make_unique<AnthropicProvider>(spec);
    if (spec.provider_name == "local") return std::make_unique<LocalProvider>(spec);
    throw ConfigError("unknown provider '" + spec.provider_name + "'");
}

} // namespace pidrag::rag

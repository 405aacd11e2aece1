#include "pidrag/rag/message.hpp"

#include "pidrag/error.hpp"

#include <chrono>
#include <ctime>

namespace pidrag::rag {

std::string to_string(Role role) {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw ConfigError("unknown chat role '" + std::string(s) + "'");
}

nlohmann::json to_json(const ChatMessage& m) {
    nlohmann::json j{{"role", to_string(m.role)}, {"content", m.content}};
    if (!m.timestamp.empty()) j["timestamp"] = m.timestamp;
    return j;
}

ChatMessage message_from_json(const nlohmann::json& doc) {
    ChatMessage m;
    m.role = role_from_string(doc.at("role").get<std::string>());
    m.content = doc.at("content").get<std::string>();
    m.timestamp = doc.value("timestamp", "");
    return m;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace pidrag::rag

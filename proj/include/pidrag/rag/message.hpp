#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace pidrag::rag {

enum class Role { system, user, assistant };

std::string to_string(Role role);
/// Throws ConfigError for anything but system/user/assistant.
Role role_from_string(std::string_view s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    std::string timestamp; ///< ISO-8601 UTC, empty for assembled prompt messages

    bool operator==(const ChatMessage&) const = default;
};

nlohmann::json to_json(const ChatMessage& m);
ChatMessage message_from_json(const nlohmann::json& doc);

/// Current UTC time as 2024-01-31T12:00:00Z.
std::string utc_timestamp();

} // namespace pidrag::rag

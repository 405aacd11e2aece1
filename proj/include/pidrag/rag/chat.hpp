#pragma once

#include "pidrag/graph/graph_io.hpp"
#include "pidrag/graph/property_graph.hpp"
#include "pidrag/rag/message.hpp"
#include "pidrag/rag/provider.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace pidrag::rag {

/// The shipped system template; {GRAPH} marks where the GraphML context goes.
const std::string& default_system_template();

inline constexpr std::string_view kGraphPlaceholder = "{GRAPH}";

class ChatSession {
public:
    ChatSession();
    ChatSession(ChatSession&&) noexcept = default;
    ChatSession& operator=(ChatSession&&) noexcept = default;

    std::string id;
    std::string system_prompt;
    std::string graph_context;
    std::vector<ChatMessage> history;
    std::size_t token_budget = 0;

    bool in_flight() const { return busy_->load(); }

    nlohmann::json to_json() const;
    static ChatSession from_json(const nlohmann::json& doc);

private:
    friend class InFlightGuard;
    std::unique_ptr<std::atomic<bool>> busy_;
};

/// Claims a session for one completion; throws BusyError if another one holds it.
class InFlightGuard {
public:
    explicit InFlightGuard(ChatSession& session);
    ~InFlightGuard();
    InFlightGuard(const InFlightGuard&) = delete;
    InFlightGuard& operator=(const InFlightGuard&) = delete;

private:
    std::atomic<bool>* flag_;
};

/// Random 16-hex-digit identifier.
std::string random_id();

/// Exports g as GraphML and splices it into the template.
/// Throws BudgetError when the context alone does not fit the budget, ConfigError when the
/// template has no {GRAPH} placeholder.
ChatSession new_session(const graph::PropertyGraph& g, std::string_view system_template,
                        std::size_t budget, const graph::Tokenizer* tokenizer = nullptr);

/// Sum of the per-message token estimates.
std::size_t prompt_tokens(const std::vector<ChatMessage>& messages,
                          const graph::Tokenizer* tokenizer = nullptr);

/// [system, history..., user(question)], dropping the oldest user/assistant pairs until the
/// estimate fits the session budget. Throws PreconditionError on an empty question and
/// BudgetError when system prompt plus question alone exceed the budget.
std::vector<ChatMessage> build_prompt(const ChatSession& session, std::string_view question,
                                      const graph::Tokenizer* tokenizer = nullptr);

/// Streams one turn. History gains the question and the answer only after the provider
/// finishes; on any error it is left as it was. Throws BusyError for concurrent calls.
ChatMessage ask(ChatSession& session, std::string_view question, Provider& provider,
                const ChunkSink& on_chunk = {}, const graph::Tokenizer* tokenizer = nullptr);

} // namespace pidrag::rag

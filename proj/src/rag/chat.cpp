#include "pidrag/rag/chat.hpp"

#include "pidrag/error.hpp"
#include "pidrag/rag/system_prompt_data.hpp"

#include <deque>
#include <random>

namespace pidrag::rag {

const std::string& default_system_template() {
    static const std::string tmpl = generated::kSystemPrompt;
    return tmpl;
}

ChatSession::ChatSession() : busy_(std::make_unique<std::atomic<bool>>(false)) {}

nlohmann::json ChatSession::to_json() const {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& m : history) hist.push_back(rag::to_json(m));
    return {{"id", id},
            {"system_prompt", system_prompt},
            {"graph_context", graph_context},
            {"token_budget", token_budget},
            {"history", hist}};
}

ChatSession ChatSession::from_json(const nlohmann::json& doc) {
    ChatSession s;
    s.id = doc.at("id").get<std::string>();
    s.system_prompt = doc.at("system_prompt").get<std::string>();
    s.graph_context = doc.value("graph_context", "");
    s.token_budget = doc.at("token_budget").get<std::size_t>();
    for (const auto& m : doc.value("history", nlohmann::json::array())) {
        s.history.push_back(message_from_json(m));
    }
    return s;
}

InFlightGuard::InFlightGuard(ChatSession& session) : flag_(session.busy_.get()) {
    bool expected = false;
    if (!flag_->compare_exchange_strong(expected, true)) {
        throw BusyError("session '" + session.id + "' already has a completion in flight");
    }
}

InFlightGuard::~InFlightGuard() { flag_->store(false); }

std::string random_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static const char* hex = "0123456789abcdef";
    auto v = rng();
    std::string out(16, '0');
    for (auto& c : out) {
        c = hex[v & 0xf];
        v >>= 4;
    }
    return out;
}

ChatSession new_session(const graph::PropertyGraph& g, std::string_view system_template,
                        std::size_t budget, const graph::Tokenizer* tokenizer) {
    const auto pos = system_template.find(kGraphPlaceholder);
    if (pos == std::string_view::npos) {
        throw ConfigError("system template has no " + std::string(kGraphPlaceholder) + " placeholder");
    }
    ChatSession s;
    s.id = random_id();
    s.graph_context = graph::export_graphml(g);
    const auto ctx = graph::estimate_tokens(s.graph_context, tokenizer).token_count;
    if (ctx >= budget) {
        throw BudgetError("graph context needs " + std::to_string(ctx) + " tokens but the budget is " +
                          std::to_string(budget) + "; use the condensed high-level graph or a larger budget");
    }
    s.system_prompt.reserve(system_template.size() + s.graph_context.size());
    s.system_prompt.append(system_template.substr(0, pos));
    s.system_prompt.append(s.graph_context);
    s.system_prompt.append(system_template.substr(pos + kGraphPlaceholder.size()));
    s.token_budget = budget;
    return s;
}

std::size_t prompt_tokens(const std::vector<ChatMessage>& messages, const graph::Tokenizer* tokenizer) {
    std::size_t n = 0;
    for (const auto& m : messages) n += graph::estimate_tokens(m.content, tokenizer).token_count;
    return n;
}

std::vector<ChatMessage> build_prompt(const ChatSession& session, std::string_view question,
                                      const graph::Tokenizer* tokenizer) {
    if (question.empty()) throw PreconditionError("question must not be empty");
    const ChatMessage system{Role::system, session.system_prompt, {}};
    const ChatMessage user{Role::user, std::string(question), {}};

    const auto base = prompt_tokens({system, user}, tokenizer);
    if (base > session.token_budget) {
        throw BudgetError("system prompt and question need " + std::to_string(base) +
                          " tokens but the budget is " + std::to_string(session.token_budget));
    }

    std::deque<ChatMessage> kept;
    std::size_t total = base;
    for (const auto& m : session.history) {
        kept.push_back({m.role, m.content, {}});
        total += graph::estimate_tokens(m.content, tokenizer).token_count;
    }
    while (total > session.token_budget && !kept.empty()) {
        for (int i = 0; i < 2 && !kept.empty(); ++i) {
            total -= graph::estimate_tokens(kept.front().content, tokenizer).token_count;
            kept.pop_front();
        }
    }

    std::vector<ChatMessage> out;
    out.reserve(kept.size() + 2);
    out.push_back(system);
    out.insert(out.end(), kept.begin(), kept.end());
    out.push_back(user);
    return out;
}

ChatMessage ask(ChatSession& session, std::string_view question, Provider& provider,
                const ChunkSink& on_chunk, const graph::Tokenizer* tokenizer) {
    InFlightGuard guard(session);
    const auto messages = build_prompt(session, question, tokenizer);
    const auto asked_at = utc_timestamp();

    std::string answer;
    provider.complete(messages, [&](std::string_view chunk) {
        if (chunk.empty()) return;
        answer.append(chunk);
        if (on_chunk) on_chunk(chunk);
    });
    if (answer.empty()) throw ProviderError("provider returned an empty completion");

    ChatMessage reply{Role::assistant, std::move(answer), utc_timestamp()};
    session.history.push_back({Role::user, std::string(question), asked_at});
    session.history.push_back(reply);
    return reply;
}

} // namespace pidrag::rag

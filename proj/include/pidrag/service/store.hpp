#pragma once

#include "pidrag/eval/eval.hpp"
#include "pidrag/graph/condenser.hpp"
#include "pidrag/graph/property_graph.hpp"
#include "pidrag/rag/chat.hpp"
#include "pidrag/rag/provider.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace pidrag::service {

/// One uploaded P&ID with both graph variants. Immutable once published by the store.
struct ModelRecord {
    std::string model_id;
    std::string filename;
    std::string uploaded_at;
    std::string policy_fingerprint;
    nlohmann::json metadata = nlohmann::json::object();
    nlohmann::json diagnostics = nlohmann::json::array();
    std::string complete_graphml;
    std::string high_graphml;
    graph::PropertyGraph complete;
    graph::PropertyGraph high;
    graph::CondensationReport report;

    const std::string& graphml(eval::GraphLevel level) const;
    const graph::PropertyGraph& graph(eval::GraphLevel level) const;
    /// id, filename, timestamp, metadata, diagnostics, per-level node/edge/token counts.
    nlohmann::json summary() const;
};

struct SessionRecord {
    std::string session_id;
    std::string model_id;
    eval::GraphLevel level = eval::GraphLevel::high;
    rag::ProviderSpec provider;
    std::string created_at;
    rag::ChatSession chat;

    /// Full persisted form, including the prompt.
    nlohmann::json to_json() const;
    static SessionRecord from_json(const nlohmann::json& doc);
    /// What the API returns: everything except the prompt text.
    nlohmann::json summary() const;
};

/// First 16 hex digits of the SHA-256 of the bytes.
std::string content_id(std::string_view bytes);

/// Directory layout: <root>/<model_id>/{source.xml, model.json, complete.graphml, high.graphml,
/// report.json, sessions/<session_id>.json}. All writes go through write-temp-then-rename.
class Store {
public:
    /// Loads every model under root, regenerating graphs built under a different policy.
    Store(std::filesystem::path root, graph::CondensationPolicy policy);

    /// Parses, builds, condenses and persists. Uploading identical bytes again returns the
    /// existing record. Throws ParseError / BuildError on unusable input.
    std::shared_ptr<const ModelRecord> add_model(const std::string& filename, std::string_view xml,
                                                 bool strict = false);
    std::shared_ptr<const ModelRecord> find_model(const std::string& model_id) const;
    std::vector<std::shared_ptr<const ModelRecord>> models() const;

    void save_session(const SessionRecord& session) const;
    /// Every persisted session of every model.
    std::vector<SessionRecord> load_sessions() const;

    const graph::CondensationPolicy& policy() const { return policy_; }
    const std::filesystem::path& root() const { return root_; }
    /// Ids of models whose graphs were rebuilt during construction.
    const std::vector<std::string>& regenerated() const { return regenerated_; }

private:
    std::shared_ptr<ModelRecord> build(const std::string& model_id, const std::string& filename,
                                       const std::string& uploaded_at, std::string_view xml, bool strict) const;
    void persist(const ModelRecord& rec, std::string_view xml) const;
    std::shared_ptr<ModelRecord> load(const std::filesystem::path& dir);

    std::filesystem::path root_;
    graph::CondensationPolicy policy_;
    std::string fingerprint_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<const ModelRecord>> models_;
    std::vector<std::string> regenerated_;
};

} // namespace pidrag::service
